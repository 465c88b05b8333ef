//! Classical estimators: OLS, ridge / minimum-norm least squares, and the
//! marginal Z statistics and p-values of an OLS fit.

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{PufferError, Result};
use crate::linalg::{
    gram_inverse_diagonal_from, require_full_column_rank, svd, validate_matrix, validate_vector,
    Matrix, SvdFactors, SvdMode, Vector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    UserSupplied,
    ResidualEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct InferenceResult {
    pub beta_ols: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub sigma: f64,
    pub sigma_source: SigmaSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub value: f64,
    /// Set when the response lies in the column span to working precision.
    pub degenerate: bool,
}

fn check_problem(x: &Matrix, y: &Vector) -> Result<()> {
    validate_matrix(x, "design")?;
    validate_vector(y, x.nrows(), "response")
}

/// `V · D⁻¹ · Uᵀ · y` for full-column-rank factors.
pub(crate) fn ols_from(f: &SvdFactors, y: &Vector) -> Vector {
    let mut uty = f.u.columns(0, f.d.len()).tr_mul(y);
    for (k, &dk) in f.d.iter().enumerate() {
        uty[k] /= dk;
    }
    f.v.columns(0, f.d.len()) * uty
}

/// Ordinary least squares, `(XᵀX)⁻¹ Xᵀ y`.
pub fn ols(x: &Matrix, y: &Vector) -> Result<Vector> {
    check_problem(x, y)?;
    let f = svd(x, SvdMode::Skinny)?;
    require_full_column_rank(&f)?;
    Ok(ols_from(&f, y))
}

/// Ridge regression `(XᵀX + τI)⁻¹ Xᵀ y`, solved by Cholesky; at `τ = 0` the
/// minimum-norm least-squares solution `(XᵀX)⁺ Xᵀ y` via the SVD.
pub fn ridge(x: &Matrix, y: &Vector, tau: f64) -> Result<Vector> {
    check_problem(x, y)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(PufferError::Input(format!("tau must be finite and nonnegative, got {tau}")));
    }
    if tau > 0.0 {
        let p = x.ncols();
        let gram = x.tr_mul(x) + Matrix::identity(p, p) * tau;
        if let Some(chol) = gram.cholesky() {
            return Ok(chol.solve(&x.tr_mul(y)));
        }
    }
    let f = svd(x, SvdMode::Skinny)?;
    let k = f.d.len();
    let mut coef = f.u.columns(0, k).tr_mul(y);
    for (i, &di) in f.d.iter().enumerate() {
        coef[i] *= if tau > 0.0 {
            di / (di * di + tau)
        } else if di > f.rank_tol {
            1.0 / di
        } else {
            0.0
        };
    }
    Ok(f.v.columns(0, k) * coef)
}

/// `Z_j = √n · β̂_j / √(σ² [(XᵀX)⁻¹]_jj)`.
pub fn z_stats(x: &Matrix, y: &Vector, sigma: f64) -> Result<Vector> {
    check_problem(x, y)?;
    check_sigma(sigma)?;
    let f = svd(x, SvdMode::Skinny)?;
    let nu = gram_inverse_diagonal_from(&f)?;
    let beta = ols_from(&f, y);
    Ok(z_from(&beta, &nu, x.nrows(), sigma))
}

pub(crate) fn z_from(beta: &Vector, nu: &Vector, n: usize, sigma: f64) -> Vector {
    let root_n = (n as f64).sqrt();
    beta.zip_map(nu, |b, v| root_n * b / (sigma * v.sqrt()))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(PufferError::Input(format!("sigma must be positive and finite, got {sigma}")))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided p-value `2(1 − Φ(|z|))`, evaluated as `erfc(|z|/√2)` so the
/// upper tail keeps full relative precision.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Marginal p-values for a vector of Z statistics.
pub fn p_values(z: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = z.iter().position(|v| !v.is_finite()) {
        return Err(PufferError::Input(format!("z statistic {i} is not finite")));
    }
    Ok(z.iter().map(|&v| two_sided_p(v)).collect())
}

/// `√(RSS / (n − p))` from the OLS fit.
pub fn sigma_hat(x: &Matrix, y: &Vector) -> Result<SigmaEstimate> {
    check_problem(x, y)?;
    let (n, p) = x.shape();
    if n <= p + 1 {
        return Err(PufferError::DegreesOfFreedom(format!(
            "sigma estimate requires n > p+1, got n={n}, p={p}"
        )));
    }
    let f = svd(x, SvdMode::Skinny)?;
    require_full_column_rank(&f)?;
    Ok(sigma_from(x, y, &ols_from(&f, y)))
}

fn sigma_from(x: &Matrix, y: &Vector, beta: &Vector) -> SigmaEstimate {
    let (n, p) = x.shape();
    let resid = y - x * beta;
    let value = (resid.norm_squared() / (n - p) as f64).sqrt();
    let scale = y.norm().max(f64::MIN_POSITIVE) / (n as f64).sqrt();
    SigmaEstimate { value, degenerate: value <= 1e-12 * scale }
}

/// OLS coefficients, Z statistics and p-values. Uses `sigma` when given,
/// otherwise the residual estimate.
pub fn inference(x: &Matrix, y: &Vector, sigma: Option<f64>) -> Result<InferenceResult> {
    check_problem(x, y)?;
    let f = svd(x, SvdMode::Skinny)?;
    require_full_column_rank(&f)?;
    let beta = ols_from(&f, y);
    let (sigma, source) = match sigma {
        Some(s) => {
            check_sigma(s)?;
            (s, SigmaSource::UserSupplied)
        }
        None => {
            let (n, p) = x.shape();
            if n <= p + 1 {
                return Err(PufferError::DegreesOfFreedom(format!(
                    "sigma estimate requires n > p+1, got n={n}, p={p}"
                )));
            }
            let est = sigma_from(x, y, &beta);
            if est.degenerate {
                return Err(PufferError::Numerical(
                    "residual sigma estimate is zero; response lies in the column span".into(),
                ));
            }
            (est.value, SigmaSource::ResidualEstimate)
        }
    };
    let nu = gram_inverse_diagonal_from(&f)?;
    let z = z_from(&beta, &nu, x.nrows(), sigma);
    let p_values = z.iter().map(|&v| two_sided_p(v)).collect();
    Ok(InferenceResult {
        beta_ols: beta.iter().copied().collect(),
        z_stats: z.iter().copied().collect(),
        p_values,
        sigma,
        sigma_source: source,
    })
}
