//! Left preconditioners built from the SVD of the design.
//!
//! All transforms multiply the data from the left, so every row of the
//! transformed design is a combination of rows of the original and the
//! coefficient basis is untouched. `puffer_scaled` additionally rescales the
//! columns by a positive diagonal, which preserves coefficient signs.

use serde::{Deserialize, Serialize};

use crate::error::{PufferError, Result};
use crate::linalg::{
    gram_inverse_diagonal_from, rank_of, require_full_column_rank, require_full_row_rank, svd,
    validate_matrix, validate_vector, Matrix, SvdFactors, SvdMode, Vector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    Puffer,
    PufferScaled,
    PufferTau { tau: f64 },
}

#[derive(Debug, Clone)]
pub struct PreconditionedPair {
    pub x_tilde: Matrix,
    pub y_tilde: Vector,
    pub transform: Transform,
    /// Column scaling `N` (diagonal), present only for `PufferScaled`.
    pub n_diag: Option<Vector>,
}

/// `U · diag(scale) · Uᵀ` kept in factored form.
#[derive(Debug, Clone)]
pub struct LeftPreconditioner {
    u: Matrix,
    scale: Vector,
}

impl LeftPreconditioner {
    fn from_factors(f: &SvdFactors, scale: impl Fn(f64) -> f64) -> Self {
        let k = f.d.len();
        LeftPreconditioner {
            u: f.u.columns(0, k).into_owned(),
            scale: Vector::from_iterator(k, f.d.iter().map(|&d| scale(d))),
        }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let coef = self.u.tr_mul(v).component_mul(&self.scale);
        &self.u * coef
    }

    pub fn apply_matrix(&self, m: &Matrix) -> Matrix {
        let mut coef = self.u.tr_mul(m);
        for (i, mut row) in coef.row_iter_mut().enumerate() {
            row *= self.scale[i];
        }
        &self.u * coef
    }

    /// The n×n matrix.
    pub fn to_dense(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.scale[j];
        }
        us * self.u.transpose()
    }
}

fn check_problem(x: &Matrix, y: &Vector) -> Result<()> {
    validate_matrix(x, "design")?;
    validate_vector(y, x.nrows(), "response")
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(PufferError::Input(format!("tau must be finite and nonnegative, got {tau}")))
    }
}

/// `U·Vᵀ` over the leading `k = d.len()` singular vectors.
fn orthonormal_part(f: &SvdFactors) -> Matrix {
    let k = f.d.len();
    f.u.columns(0, k) * f.v.columns(0, k).transpose()
}

/// `F = U D⁻¹ Uᵀ` for a full-column-rank design with `n > p`.
pub fn puffer_preconditioner(x: &Matrix) -> Result<LeftPreconditioner> {
    validate_matrix(x, "design")?;
    let f = svd(x, SvdMode::Skinny)?;
    require_full_column_rank(&f)?;
    Ok(LeftPreconditioner::from_factors(&f, |d| 1.0 / d))
}

/// `(F·X, F·Y)` with `F = U D⁻¹ Uᵀ`; `F·X = U·Vᵀ` has orthonormal columns.
pub fn puffer(x: &Matrix, y: &Vector) -> Result<PreconditionedPair> {
    check_problem(x, y)?;
    let f = svd(x, SvdMode::Skinny)?;
    require_full_column_rank(&f)?;
    let pre = LeftPreconditioner::from_factors(&f, |d| 1.0 / d);
    Ok(PreconditionedPair {
        x_tilde: orthonormal_part(&f),
        y_tilde: pre.apply(y),
        transform: Transform::Puffer,
        n_diag: None,
    })
}

/// Diagonal of `N`, `N_jj = √[(XᵀX)⁻¹]_jj`.
pub fn scaling_matrix(x: &Matrix) -> Result<Vector> {
    validate_matrix(x, "design")?;
    let f = svd(x, SvdMode::Skinny)?;
    Ok(gram_inverse_diagonal_from(&f)?.map(f64::sqrt))
}

/// Puffer applied to `X·N`: returns `(F_N·X·N, F_N·Y)` and records `N`.
pub fn puffer_scaled(x: &Matrix, y: &Vector) -> Result<PreconditionedPair> {
    check_problem(x, y)?;
    let n_diag = scaling_matrix(x)?;
    let mut xn = x.clone();
    for (j, mut col) in xn.column_iter_mut().enumerate() {
        col *= n_diag[j];
    }
    let f = svd(&xn, SvdMode::Skinny)?;
    require_full_column_rank(&f)?;
    let pre = LeftPreconditioner::from_factors(&f, |d| 1.0 / d);
    Ok(PreconditionedPair {
        x_tilde: orthonormal_part(&f),
        y_tilde: pre.apply(y),
        transform: Transform::PufferScaled,
        n_diag: Some(n_diag),
    })
}

fn tau_factors(x: &Matrix, tau: f64) -> Result<SvdFactors> {
    validate_matrix(x, "design")?;
    check_tau(tau)?;
    let f = svd(x, SvdMode::Skinny)?;
    let (n, p) = x.shape();
    if p < n {
        return Err(PufferError::Input(format!("requires p>=n, got n={n}, p={p}")));
    }
    if tau == 0.0 {
        require_full_row_rank(&f)?;
    }
    Ok(f)
}

/// `F_τ = U (D² + τI)^{-1/2} Uᵀ` for `p ≥ n`.
pub fn puffer_tau_preconditioner(x: &Matrix, tau: f64) -> Result<LeftPreconditioner> {
    let f = tau_factors(x, tau)?;
    Ok(LeftPreconditioner::from_factors(&f, |d| 1.0 / (d * d + tau).sqrt()))
}

/// `(F_τ·X, F_τ·Y)` for `p ≥ n`. At `τ = 0` the design must have full row rank
/// and the transformed rows are orthonormal.
pub fn puffer_tau(x: &Matrix, y: &Vector, tau: f64) -> Result<PreconditionedPair> {
    check_problem(x, y)?;
    let f = tau_factors(x, tau)?;
    let pre = LeftPreconditioner::from_factors(&f, |d| 1.0 / (d * d + tau).sqrt());
    // F_τ X = U · diag(d / √(d² + τ)) · Vᵀ
    let k = f.d.len();
    let mut us = f.u.columns(0, k).into_owned();
    for (j, mut col) in us.column_iter_mut().enumerate() {
        let d = f.d[j];
        col *= if d == 0.0 { 0.0 } else { d / (d * d + tau).sqrt() };
    }
    Ok(PreconditionedPair {
        x_tilde: us * f.v.columns(0, k).transpose(),
        y_tilde: pre.apply(y),
        transform: Transform::PufferTau { tau },
        n_diag: None,
    })
}

/// `𝒫_τ(v) = Xᵀ (XXᵀ + τI)⁻¹ X v`, evaluated with a Cholesky solve on the
/// n×n system. At `τ = 0` this is the orthogonal projector onto the row space.
pub fn project_rowspace(x: &Matrix, v: &Vector, tau: f64) -> Result<Vector> {
    validate_matrix(x, "design")?;
    validate_vector(v, x.ncols(), "vector")?;
    check_tau(tau)?;
    let (n, p) = x.shape();
    if p < n {
        return Err(PufferError::Input(format!("requires p>=n, got n={n}, p={p}")));
    }
    if tau == 0.0 {
        let f = svd(x, SvdMode::Skinny)?;
        if rank_of(&f) < n {
            return Err(PufferError::Rank(format!(
                "XXᵀ is singular: row rank {} < n={n}",
                rank_of(&f)
            )));
        }
    }
    let mut gram = x * x.transpose();
    for i in 0..n {
        gram[(i, i)] += tau;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| PufferError::Rank("XXᵀ + τI is not positive definite".into()))?;
    let w = chol.solve(&(x * v));
    Ok(x.tr_mul(&w))
}

/// `(F_τX)ᵀ F_τY`, which equals the ridge estimate at `τ`.
pub fn ridge_via_precond(x: &Matrix, y: &Vector, tau: f64) -> Result<Vector> {
    let pair = puffer_tau(x, y, tau)?;
    Ok(pair.x_tilde.tr_mul(&pair.y_tilde))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn puffer_leaves_orthonormal_design_unchanged() {
        let s = 0.5f64.sqrt();
        let x = Matrix::from_row_slice(4, 2, &[s, 0.0, 0.0, s, s, 0.0, 0.0, s]);
        let y = Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let pair = puffer(&x, &y).unwrap();
        assert!((pair.x_tilde - &x).amax() < 1e-15);
        // F is the column-space projector, so F·Y = X Xᵀ Y
        assert!((pair.y_tilde - &x * x.tr_mul(&y)).amax() < 1e-14);
    }

    #[test]
    fn puffer_normalizes_diagonal_design() {
        let x = Matrix::from_row_slice(4, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
        let y = Vector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        let pair = puffer(&x, &y).unwrap();
        let expect = Matrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((pair.x_tilde - expect).amax() < 1e-15);
    }

    #[test]
    fn puffer_rank_error_names_singular_value() {
        let x = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        match puffer(&x, &y) {
            Err(PufferError::Rank(msg)) => assert!(msg.contains("d[1]"), "{msg}"),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn scaling_matrix_examples() {
        let mut x = Matrix::zeros(3, 2);
        x[(0, 0)] = 1.0;
        x[(1, 1)] = 1.0;
        assert!((scaling_matrix(&x).unwrap() - Vector::from_vec(vec![1.0, 1.0])).amax() < 1e-15);
        x[(0, 0)] = 2.0;
        x[(1, 1)] = 4.0;
        assert!((scaling_matrix(&x).unwrap() - Vector::from_vec(vec![0.5, 0.25])).amax() < 1e-15);
    }

    #[test]
    fn scaled_equals_plain_for_identity_gram() {
        let s = 0.5f64.sqrt();
        let x = Matrix::from_row_slice(4, 2, &[s, 0.0, 0.0, s, s, 0.0, 0.0, s]);
        let y = Vector::from_vec(vec![1.0, -2.0, 0.5, 4.0]);
        let a = puffer(&x, &y).unwrap();
        let b = puffer_scaled(&x, &y).unwrap();
        assert!((a.x_tilde - b.x_tilde).amax() < 1e-14);
        assert!((a.y_tilde - b.y_tilde).amax() < 1e-14);
        assert_eq!(b.transform, Transform::PufferScaled);
    }

    #[test]
    fn puffer_tau_limits() {
        let x = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0]);
        let y = Vector::from_vec(vec![1.0, 2.0]);
        let pair = puffer_tau(&x, &y, 0.0).unwrap();
        let rows = &pair.x_tilde * pair.x_tilde.transpose();
        assert!((rows - Matrix::identity(2, 2)).amax() < 1e-8);
        let pair = puffer_tau(&x, &y, 1e12).unwrap();
        assert!(pair.x_tilde.norm() <= 1e-5 * x.norm());
    }

    #[test]
    fn puffer_tau_requires_full_row_rank_at_zero() {
        let x = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let y = Vector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(puffer_tau(&x, &y, 0.0), Err(PufferError::Rank(_))));
        assert!(puffer_tau(&x, &y, 0.1).is_ok());
        let tall = Matrix::identity(3, 2);
        assert!(puffer_tau(&tall, &Vector::zeros(3), 1.0).is_err());
    }

    #[test]
    fn projector_fixes_row_space_and_kills_complement() {
        let x = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let in_rows = x.transpose() * Vector::from_vec(vec![0.3, -2.0]);
        let out = project_rowspace(&x, &in_rows, 0.0).unwrap();
        assert!((out - &in_rows).amax() < 1e-12);
        let orth = Vector::from_vec(vec![1.0, 1.0, -1.0]);
        assert!(project_rowspace(&x, &orth, 0.0).unwrap().amax() < 1e-12);
    }

    #[test]
    fn ridge_via_precond_examples() {
        let x = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let y = Vector::from_vec(vec![1.0, -1.0]);
        let b = ridge_via_precond(&x, &y, 0.0).unwrap();
        let inv = x.clone().try_inverse().unwrap();
        assert!((b - inv * &y).amax() < 1e-12);
        let zero = ridge_via_precond(&x, &Vector::zeros(2), 0.7).unwrap();
        assert_eq!(zero.amax(), 0.0);
    }

    #[test]
    fn dense_and_factored_application_agree() {
        let x = Matrix::from_row_slice(4, 2, &[1.0, 2.0, 0.0, 1.0, 3.0, -1.0, 1.0, 1.0]);
        let f = puffer_preconditioner(&x).unwrap();
        let y = Vector::from_vec(vec![0.1, 0.2, -0.3, 0.4]);
        assert!((f.to_dense() * &y - f.apply(&y)).amax() < 1e-14);
        assert!((f.apply_matrix(&x) - puffer(&x, &y).unwrap().x_tilde).amax() < 1e-12);
        let t = puffer_tau_preconditioner(&x.transpose(), 0.5).unwrap();
        assert_eq!(t.to_dense().shape(), (2, 2));
    }
}
