//! Penalized least squares
//!
//! ```text
//! minimize  ½‖y − X b‖² + λ Σ_j pen(b_j)
//! ```
//!
//! by cyclic coordinate descent. Each coordinate update is the exact global
//! minimizer of the one-dimensional subproblem, so an orthonormal design is
//! solved in a single sweep. SCAD and MC+ knots are scaled by `λ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PufferError, Result};
use crate::linalg::{validate_matrix, validate_vector, Matrix, Vector};
use crate::penalties::PenaltySpec;

/// Two stationary points closer than this in sup norm are the same point.
pub const DEDUP_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Maximum number of full sweeps.
    pub max_iter: usize,
    /// Sweep stops once the largest coordinate change is below this.
    pub coord_tol: f64,
    pub kkt_tol: f64,
    pub multistart_count: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iter: 10_000, coord_tol: 1e-10, kkt_tol: 1e-7, multistart_count: 8, rng_seed: 0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter >= 1
            && self.coord_tol > 0.0
            && self.kkt_tol > 0.0
            && self.coord_tol.is_finite()
            && self.kkt_tol.is_finite();
        if ok {
            Ok(())
        } else {
            Err(PufferError::Input(format!("invalid solver configuration: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub penalty: PenaltySpec,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub objective: f64,
    pub active_set: Vec<usize>,
}

impl FitResult {
    pub fn beta_vector(&self) -> Vector {
        Vector::from_column_slice(&self.beta)
    }
}

/// `max_j |x_jᵀ y|`, the smallest lasso `λ` with an all-zero solution.
pub fn lambda_max(x: &Matrix, y: &Vector) -> f64 {
    x.tr_mul(y).amax()
}

/// `count` log-spaced values from `lambda_max` down to `ratio · lambda_max`.
pub fn lambda_grid(lambda_max: f64, count: usize, ratio: f64) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lambda_max],
        _ => {
            let step = ratio.ln() / (count - 1) as f64;
            (0..count).map(|i| lambda_max * (step * i as f64).exp()).collect()
        }
    }
}

/// `½‖y − Xb‖² + λ Σ pen(b_j)`.
pub fn objective(x: &Matrix, y: &Vector, beta: &Vector, lambda: f64, pen: &PenaltySpec) -> f64 {
    let resid = y - x * beta;
    0.5 * resid.norm_squared() + penalty_total(beta.iter().copied(), lambda, pen)
}

fn penalty_total(beta: impl Iterator<Item = f64>, lambda: f64, pen: &PenaltySpec) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda * beta.map(|b| pen.value_at(b, lambda)).sum::<f64>()
}

/// Violation of the first-order conditions given the correlation vector
/// `g = Xᵀ(y − Xb)`: `|g_j − λ pen'(b_j)|` on the support, `(|g_j| − λ)⁺` off it.
fn kkt_from_gradient(grad: &Vector, beta: &Vector, lambda: f64, pen: &PenaltySpec) -> f64 {
    let mut worst = 0.0_f64;
    for (g, &b) in grad.iter().zip(beta.iter()) {
        let v = if b != 0.0 {
            let d = if lambda == 0.0 { 0.0 } else { lambda * pen.derivative_at(b, lambda).unwrap_or(0.0) };
            (g - d).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// KKT residual of `beta` for the problem `(x, y, λ, pen)`.
pub fn kkt_residual(x: &Matrix, y: &Vector, beta: &Vector, lambda: f64, pen: &PenaltySpec) -> f64 {
    let grad = x.tr_mul(&(y - x * beta));
    kkt_from_gradient(&grad, beta, lambda, pen)
}

fn check_inputs(x: &Matrix, y: &Vector, lambda: f64, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<()> {
    validate_matrix(x, "design")?;
    validate_vector(y, x.nrows(), "response")?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(PufferError::Input(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    pen.validated()?;
    cfg.validate()
}

/// Stationary point of the penalized objective by cyclic coordinate descent,
/// started from `init` (zero when absent). Running out of sweeps is reported
/// through `converged = false`, not as an error.
pub fn solve(
    x: &Matrix,
    y: &Vector,
    lambda: f64,
    pen: &PenaltySpec,
    init: Option<&Vector>,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    check_inputs(x, y, lambda, pen, cfg)?;
    let p = x.ncols();
    let mut beta = match init {
        Some(b) => {
            validate_vector(b, p, "initial coefficients")?;
            b.clone()
        }
        None => Vector::zeros(p),
    };
    Ok(coordinate_descent(x, y, lambda, pen, &mut beta, cfg))
}

fn coordinate_descent(
    x: &Matrix,
    y: &Vector,
    lambda: f64,
    pen: &PenaltySpec,
    beta: &mut Vector,
    cfg: &SolverConfig,
) -> FitResult {
    let p = x.ncols();
    let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    // Zero columns never move; pin them so the fit is a proper stationary point.
    for j in 0..p {
        if col_sq[j] == 0.0 {
            beta[j] = 0.0;
        }
    }
    let mut resid = y - x * &*beta;
    let mut iterations = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;

    while iterations < cfg.max_iter {
        iterations += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            let c = col_sq[j];
            if c == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old = beta[j];
            let z = old + col.dot(&resid) / c;
            let new = pen.threshold_weighted(z, lambda / c, lambda);
            let delta = new - old;
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < cfg.coord_tol {
            // Refresh the residual to shed accumulated rounding before judging.
            resid = y - x * &*beta;
            kkt = kkt_from_gradient(&x.tr_mul(&resid), beta, lambda, pen);
            if kkt < cfg.kkt_tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        resid = y - x * &*beta;
        kkt = kkt_from_gradient(&x.tr_mul(&resid), beta, lambda, pen);
    }

    let objective = 0.5 * resid.norm_squared() + penalty_total(beta.iter().copied(), lambda, pen);
    FitResult {
        beta: beta.iter().copied().collect(),
        lambda,
        penalty: *pen,
        iterations,
        converged,
        kkt_residual: kkt,
        objective,
        active_set: beta.iter().enumerate().filter(|(_, &b)| b != 0.0).map(|(j, _)| j).collect(),
    }
}

/// Warm-started solutions along a strictly decreasing, nonnegative `λ` sequence.
pub fn solve_path(
    x: &Matrix,
    y: &Vector,
    lambdas: &[f64],
    pen: &PenaltySpec,
    cfg: &SolverConfig,
) -> Result<Vec<FitResult>> {
    if lambdas.is_empty() {
        return Err(PufferError::Input("lambda sequence is empty".into()));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(PufferError::Input("lambda values must be nonnegative and finite".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(PufferError::Input("lambda values must be strictly decreasing".into()));
    }
    check_inputs(x, y, lambdas[0], pen, cfg)?;
    let mut beta = Vector::zeros(x.ncols());
    Ok(lambdas.iter().map(|&l| coordinate_descent(x, y, l, pen, &mut beta, cfg)).collect())
}

/// Distinct stationary points reached from `cfg.multistart_count` random
/// starts drawn uniformly from `[−s, s]^p`, `s = ‖Xᵀy‖_∞`. Convex penalties
/// and `λ = 0` have a single solution and return it alone. Results are in
/// order of first discovery.
pub fn multistart_local_minima(
    x: &Matrix,
    y: &Vector,
    lambda: f64,
    pen: &PenaltySpec,
    cfg: &SolverConfig,
) -> Result<Vec<FitResult>> {
    check_inputs(x, y, lambda, pen, cfg)?;
    if pen.is_convex() || lambda == 0.0 {
        return Ok(vec![solve(x, y, lambda, pen, None, cfg)?]);
    }
    let p = x.ncols();
    let scale = lambda_max(x, y);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut found: Vec<FitResult> = Vec::new();
    for _ in 0..cfg.multistart_count.max(1) {
        let mut init = Vector::from_fn(p, |_, _| {
            if scale > 0.0 {
                rng.random_range(-scale..=scale)
            } else {
                0.0
            }
        });
        let fit = coordinate_descent(x, y, lambda, pen, &mut init, cfg);
        let duplicate = found.iter().any(|f| {
            f.beta.iter().zip(&fit.beta).all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
        });
        if !duplicate {
            found.push(fit);
        }
    }
    Ok(found)
}
