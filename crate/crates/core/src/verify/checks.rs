use std::collections::BTreeMap;

use crate::error::{PufferError, Result};
use crate::estimators::{self, two_sided_p};
use crate::linalg::{max_abs, Matrix, Vector};
use crate::penalties::{soft_threshold, univariate_threshold, PenaltyKind, PenaltySpec};
use crate::preconditioners::{self, project_rowspace, ridge_via_precond};
use crate::solver::{self, lambda_max, multistart_local_minima, solve, FitResult, SolverConfig};

use super::{
    finish_report, run_trials, theorem_tolerance, trial_seed, ControlId, ControlReport, Generator, TheoremId,
    TheoremReport, Worst, CONTROL_THRESHOLD, LEMMA2_TOL, TIE_TOL,
};

/// `Φ⁻¹(0.975)`: the two-sided 5% critical value.
pub const Z_975: f64 = 1.959_963_984_540_054;

const SALT_LEMMA1: u64 = 1;
const SALT_THM1: u64 = 2;
const SALT_THM2: u64 = 3;
const SALT_THM3: u64 = 4;
const SALT_LEMMA2: u64 = 5;
const SALT_EQ10: u64 = 6;
const SALT_CONTROL1: u64 = 7;
const SALT_CONTROL2: u64 = 8;

/// Minimizer of the unhalved lasso objective `‖y − Xb‖² + λ‖b‖₁`, which is
/// the halved objective at `λ/2`.
pub fn lasso_unhalved(x: &Matrix, y: &Vector, lambda: f64, cfg: &SolverConfig) -> Result<FitResult> {
    solve(x, y, lambda / 2.0, &PenaltySpec::lasso(), None, cfg)
}

/// First-order violation recomputed from scratch: the gradient of the smooth
/// part is formed entry by entry, without the solver's residual bookkeeping.
pub fn independent_kkt_residual(x: &Matrix, y: &Vector, beta: &[f64], lambda: f64, pen: &PenaltySpec) -> f64 {
    let (n, p) = x.shape();
    let mut resid = vec![0.0; n];
    for i in 0..n {
        let mut fitted = 0.0;
        for j in 0..p {
            fitted += x[(i, j)] * beta[j];
        }
        resid[i] = y[i] - fitted;
    }
    let mut worst = 0.0_f64;
    for j in 0..p {
        let mut g = 0.0;
        for i in 0..n {
            g += x[(i, j)] * resid[i];
        }
        let b = beta[j];
        let v = if b == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else if lambda == 0.0 {
            g.abs()
        } else {
            let slope = match pen.derivative_at(b, lambda) {
                Ok(d) => d,
                Err(_) => return f64::INFINITY,
            };
            (g - lambda * slope).abs()
        };
        worst = worst.max(v);
    }
    worst
}

fn is_rank_failure(e: &PufferError) -> bool {
    matches!(e, PufferError::Rank(_))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Default)]
struct TrialTally {
    worst: Worst,
    comparisons: usize,
    excluded: usize,
    counters: BTreeMap<&'static str, f64>,
}

impl TrialTally {
    fn bump(&mut self, key: &'static str, by: f64) {
        *self.counters.entry(key).or_insert(0.0) += by;
    }

    fn record(&mut self, sel: &Selection, mismatch_key: &'static str) {
        self.excluded += sel.ties;
        self.bump(mismatch_key, sel.mismatches as f64);
        self.bump("boundary_ties", sel.ties as f64);
        self.bump("p_unresolved", sel.p_unresolved as f64);
    }
}

fn merge_tallies(tallies: Vec<TrialTally>) -> TrialTally {
    let mut total = TrialTally::default();
    for t in tallies {
        total.worst.merge(&t.worst);
        total.comparisons += t.comparisons;
        total.excluded += t.excluded;
        for (k, v) in t.counters {
            total.bump(k, v);
        }
    }
    total
}

fn details(counters: BTreeMap<&'static str, f64>) -> BTreeMap<String, f64> {
    counters.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Lasso on an orthonormal design equals soft-thresholded OLS.
pub fn check_lemma1(gen: &Generator, trials: usize, seed: u64, cfg: &SolverConfig) -> Result<TheoremReport> {
    let tallies = run_trials(trials, |t| {
        let s = trial_seed(seed, SALT_LEMMA1, t);
        let pr = gen.sample(t, s)?;
        let mut tally = TrialTally::default();
        let ols = match estimators::ols(&pr.x, &pr.y) {
            Ok(b) => b,
            Err(e) if is_rank_failure(&e) => {
                tally.excluded += 1;
                return Ok(tally);
            }
            Err(e) => return Err(e),
        };
        let top = max_abs(&ols);
        // k = 0 is the unpenalized fit; k = 9 lies beyond every |β̂_j|.
        for k in 0..10 {
            let lambda = top * k as f64 / 8.0;
            let fit = lasso_unhalved(&pr.x, &pr.y, 2.0 * lambda, cfg)?;
            let expected: Vec<f64> = ols.iter().map(|&b| soft_threshold(b, lambda)).collect();
            tally.worst.observe(sup_diff(&fit.beta, &expected), s, t);
            tally.comparisons += 1;
        }
        Ok(tally)
    })?;
    let total = merge_tallies(tallies);
    Ok(finish_report(
        TheoremId::Lemma1,
        trials,
        total.comparisons,
        total.excluded,
        total.worst,
        theorem_tolerance(cfg),
        details(total.counters),
    ))
}

/// Penalized fit on Puffer-preconditioned data equals the penalty's
/// thresholding map applied to OLS. With only the lasso this is the first
/// theorem; with other penalties it is its generalized form.
pub fn check_theorem1(
    gen: &Generator,
    trials: usize,
    seed: u64,
    pens: &[PenaltySpec],
    cfg: &SolverConfig,
) -> Result<TheoremReport> {
    let lasso_only = pens.iter().all(|p| p.kind == PenaltyKind::Lasso);
    let tallies = run_trials(trials, |t| {
        let s = trial_seed(seed, SALT_THM1, t);
        let pr = gen.sample(t, s)?;
        let mut tally = TrialTally::default();
        let (pair, ols) = match preconditioners::puffer(&pr.x, &pr.y).and_then(|pair| {
            let ols = estimators::ols(&pr.x, &pr.y)?;
            Ok((pair, ols))
        }) {
            Ok(v) => v,
            Err(e) if is_rank_failure(&e) => {
                tally.excluded += 1;
                return Ok(tally);
            }
            Err(e) => return Err(e),
        };
        let top = max_abs(&ols);
        for pen in pens {
            for k in 0..10 {
                let lambda = top * k as f64 / 9.0;
                let fit = if pen.kind == PenaltyKind::Lasso {
                    lasso_unhalved(&pair.x_tilde, &pair.y_tilde, 2.0 * lambda, cfg)?
                } else {
                    solve(&pair.x_tilde, &pair.y_tilde, lambda, pen, None, cfg)?
                };
                let expected: Vec<f64> = ols.iter().map(|&b| univariate_threshold(pen, b, lambda)).collect();
                tally.worst.observe(sup_diff(&fit.beta, &expected), s, t);
                tally.comparisons += 1;
            }
        }
        Ok(tally)
    })?;
    let total = merge_tallies(tallies);
    Ok(finish_report(
        if lasso_only { TheoremId::Thm1 } else { TheoremId::Thm1General },
        trials,
        total.comparisons,
        total.excluded,
        total.worst,
        theorem_tolerance(cfg),
        details(total.counters),
    ))
}

/// The lasso without preconditioning, compared against soft-thresholded OLS
/// at mid-path `λ` (half the largest OLS coefficient).
pub fn control_theorem1(gen: &Generator, trials: usize, seed: u64, cfg: &SolverConfig) -> Result<ControlReport> {
    let per_trial = run_trials(trials, |t| {
        let s = trial_seed(seed, SALT_CONTROL1, t);
        let pr = gen.sample(t, s)?;
        let ols = match estimators::ols(&pr.x, &pr.y) {
            Ok(b) => b,
            Err(e) if is_rank_failure(&e) => return Ok(None),
            Err(e) => return Err(e),
        };
        let lambda = 0.5 * max_abs(&ols);
        let fit = lasso_unhalved(&pr.x, &pr.y, 2.0 * lambda, cfg)?;
        let expected: Vec<f64> = ols.iter().map(|&b| soft_threshold(b, lambda)).collect();
        Ok(Some((sup_diff(&fit.beta, &expected), s)))
    })?;
    Ok(control_report(ControlId::Thm1WithoutPuffer, trials, per_trial))
}

fn control_report(id: ControlId, trials: usize, per_trial: Vec<Option<(f64, u64)>>) -> ControlReport {
    let mut max = (0.0_f64, 0_u64);
    let mut min = f64::INFINITY;
    for (d, s) in per_trial.into_iter().flatten() {
        if d > max.0 {
            max = (d, s);
        }
        min = min.min(d);
    }
    ControlReport {
        control_id: id,
        trials,
        max_discrepancy: max.0,
        min_discrepancy: if min.is_finite() { min } else { 0.0 },
        threshold: CONTROL_THRESHOLD,
        passed: max.0 > CONTROL_THRESHOLD,
        strongest_seed: max.1,
    }
}

/// `λ·√n/σ` thresholds for the selection comparisons: 25 points from zero to
/// 1.2·max|Z|.
fn z_threshold_grid(z: &Vector) -> Vec<f64> {
    let top = max_abs(z);
    (0..25).map(|k| 1.2 * top * k as f64 / 24.0).collect()
}

#[derive(Default)]
struct Selection {
    mismatches: usize,
    ties: usize,
    /// Coordinates whose p-value cannot be ordered against the cutoff in
    /// double precision (both underflow or agree to rounding); only the Z rule
    /// is compared there.
    p_unresolved: usize,
}

fn p_resolved(p: f64, cut: f64) -> bool {
    let scale = p.max(cut);
    scale >= f64::MIN_POSITIVE && (p - cut).abs() > 8.0 * f64::EPSILON * scale
}

/// Counts coordinates where the fitted support, the Z rule and the p-value
/// rule disagree at threshold `c = λ√n/σ`; ties are skipped.
fn selection_mismatches(beta: &[f64], z: &Vector, c: f64, p_vals: &[f64], p_cut: f64) -> Selection {
    let mut out = Selection::default();
    for j in 0..beta.len() {
        if (z[j].abs() - c).abs() <= TIE_TOL {
            out.ties += 1;
            continue;
        }
        let fitted = beta[j] != 0.0;
        let by_z = z[j].abs() > c;
        let by_p = if p_resolved(p_vals[j], p_cut) {
            p_vals[j] <= p_cut
        } else {
            out.p_unresolved += 1;
            by_z
        };
        if fitted != by_z || fitted != by_p {
            out.mismatches += 1;
        }
    }
    out
}

/// Scaled-Puffer fits select exactly the variables with `|Z_j| > λ√n/σ`,
/// equivalently `p_j ≤ 2(1 − Φ(λ√n/σ))`, and their coefficients equal the
/// thresholding map applied to `σZ_j/√n`.
pub fn check_theorem2(
    gen: &Generator,
    trials: usize,
    seed: u64,
    pens: &[PenaltySpec],
    cfg: &SolverConfig,
) -> Result<TheoremReport> {
    let lasso_only = pens.iter().all(|p| p.kind == PenaltyKind::Lasso);
    let tallies = run_trials(trials, |t| {
        let s = trial_seed(seed, SALT_THM2, t);
        let pr = gen.sample(t, s)?;
        let mut tally = TrialTally::default();
        let (pair, z) = match preconditioners::puffer_scaled(&pr.x, &pr.y).and_then(|pair| {
            let z = estimators::z_stats(&pr.x, &pr.y, pr.sigma)?;
            Ok((pair, z))
        }) {
            Ok(v) => v,
            Err(e) if is_rank_failure(&e) => {
                tally.excluded += 1;
                return Ok(tally);
            }
            Err(e) => return Err(e),
        };
        let root_n = (pr.x.nrows() as f64).sqrt();
        let p_vals: Vec<f64> = z.iter().map(|&v| two_sided_p(v)).collect();
        let scaled_ols: Vec<f64> = z.iter().map(|&v| pr.sigma * v / root_n).collect();

        for pen in pens {
            for c in z_threshold_grid(&z) {
                let lambda = c * pr.sigma / root_n;
                let fit = solve(&pair.x_tilde, &pair.y_tilde, lambda, pen, None, cfg)?;
                let expected: Vec<f64> = scaled_ols.iter().map(|&b| univariate_threshold(pen, b, lambda)).collect();
                let coef = sup_diff(&fit.beta, &expected);
                let sel = selection_mismatches(&fit.beta, &z, c, &p_vals, two_sided_p(c));
                tally.worst.observe(coef.max(sel.mismatches as f64), s, t);
                tally.comparisons += 1;
                tally.record(&sel, "set_mismatches");
            }
        }

        if lasso_only {
            // The 1.96 display threshold, and the 5% rule at the exact critical value.
            let lasso = PenaltySpec::lasso();
            let lambda = 1.96 * pr.sigma / root_n;
            let fit = solve(&pair.x_tilde, &pair.y_tilde, lambda, &lasso, None, cfg)?;
            let sel = selection_mismatches(&fit.beta, &z, 1.96, &p_vals, two_sided_p(1.96));
            tally.worst.observe(sel.mismatches as f64, s, t);
            tally.record(&sel, "set_mismatches");

            let lambda = Z_975 * pr.sigma / root_n;
            let fit = solve(&pair.x_tilde, &pair.y_tilde, lambda, &lasso, None, cfg)?;
            let sel = selection_mismatches(&fit.beta, &z, Z_975, &p_vals, 0.05);
            tally.worst.observe(sel.mismatches as f64, s, t);
            tally.comparisons += 2;
            tally.record(&sel, "rule_005_mismatches");
            let between = z.iter().filter(|v| v.abs() > Z_975 && v.abs() <= 1.96).count();
            tally.bump("z_between_critical_and_1.96", between as f64);
        }
        Ok(tally)
    })?;
    let total = merge_tallies(tallies);
    Ok(finish_report(
        if lasso_only { TheoremId::Thm2 } else { TheoremId::Thm2General },
        trials,
        total.comparisons,
        total.excluded,
        total.worst,
        theorem_tolerance(cfg),
        details(total.counters),
    ))
}

/// The selection comparison of the second theorem with the unscaled Puffer
/// transform in place of the scaled one; the per-trial discrepancy is the
/// number of set mismatches over the λ grid.
pub fn control_theorem2(gen: &Generator, trials: usize, seed: u64, cfg: &SolverConfig) -> Result<ControlReport> {
    let lasso = PenaltySpec::lasso();
    let per_trial = run_trials(trials, |t| {
        let s = trial_seed(seed, SALT_CONTROL2, t);
        let pr = gen.sample(t, s)?;
        let (pair, z) = match preconditioners::puffer(&pr.x, &pr.y).and_then(|pair| {
            let z = estimators::z_stats(&pr.x, &pr.y, pr.sigma)?;
            Ok((pair, z))
        }) {
            Ok(v) => v,
            Err(e) if is_rank_failure(&e) => return Ok(None),
            Err(e) => return Err(e),
        };
        let root_n = (pr.x.nrows() as f64).sqrt();
        let p_vals: Vec<f64> = z.iter().map(|&v| two_sided_p(v)).collect();
        let mut mismatches = 0;
        for c in z_threshold_grid(&z) {
            let fit = solve(&pair.x_tilde, &pair.y_tilde, c * pr.sigma / root_n, &lasso, None, cfg)?;
            mismatches += selection_mismatches(&fit.beta, &z, c, &p_vals, two_sided_p(c)).mismatches;
        }
        Ok(Some((mismatches as f64, s)))
    })?;
    Ok(control_report(ControlId::Thm2UnscaledPuffer, trials, per_trial))
}

/// Every stationary point of the penalized problem on `Puffer_τ` data
/// satisfies `ridge_j(τ) − 𝒫_τ(β)_j = λ·pen'(β_j)` on its support and
/// `|ridge_j(τ) − 𝒫_τ(β)_j| ≤ λ` off it. Ridge and the projection are
/// computed from the original data. Returns the (active, inactive) reports.
pub fn check_theorem3(
    gen: &Generator,
    trials: usize,
    seed: u64,
    pens: &[PenaltySpec],
    taus: &[f64],
    cfg: &SolverConfig,
) -> Result<(TheoremReport, TheoremReport)> {
    let per_trial = run_trials(trials, |t| {
        let s = trial_seed(seed, SALT_THM3, t);
        let pr = gen.sample(t, s)?;
        let mut active = TrialTally::default();
        let mut inactive = TrialTally::default();
        for &tau in taus {
            let pair = match preconditioners::puffer_tau(&pr.x, &pr.y, tau) {
                Ok(p) => p,
                Err(e) if is_rank_failure(&e) => {
                    active.excluded += 1;
                    inactive.excluded += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let ridge = estimators::ridge(&pr.x, &pr.y, tau)?;
            let top = lambda_max(&pair.x_tilde, &pair.y_tilde);
            for frac in [0.5, 0.2, 0.05] {
                let lambda = frac * top;
                for pen in pens {
                    let run_cfg = SolverConfig { rng_seed: s, ..*cfg };
                    let fits = multistart_local_minima(&pair.x_tilde, &pair.y_tilde, lambda, pen, &run_cfg)?;
                    active.bump("local_minima", fits.len() as f64);
                    for fit in fits {
                        if !fit.converged {
                            active.excluded += 1;
                            inactive.excluded += 1;
                            active.bump("non_converged", 1.0);
                            continue;
                        }
                        let proj = project_rowspace(&pr.x, &fit.beta_vector(), tau)?;
                        for (j, &b) in fit.beta.iter().enumerate() {
                            let gap = ridge[j] - proj[j];
                            if b != 0.0 {
                                let d = (gap - lambda * pen.derivative_at(b, lambda)?).abs();
                                active.worst.observe(d, s, t);
                                active.comparisons += 1;
                            } else {
                                let d = (gap.abs() - lambda).max(0.0);
                                inactive.worst.observe(d, s, t);
                                inactive.comparisons += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok((active, inactive))
    })?;
    let (a, i): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
    let (a, i) = (merge_tallies(a), merge_tallies(i));
    let tol = theorem_tolerance(cfg);
    Ok((
        finish_report(TheoremId::Thm3Active, trials, a.comparisons, a.excluded, a.worst, tol, details(a.counters)),
        finish_report(TheoremId::Thm3Inactive, trials, i.comparisons, i.excluded, i.worst, tol, details(i.counters)),
    ))
}

fn relative_gap(a: &Vector, b: &Vector) -> f64 {
    (a - b).amax() / max_abs(a).max(1.0)
}

/// `𝒫_τ(v) = (F_τX)ᵀF_τX v` and `ridge(τ) = (F_τX)ᵀF_τY`, each side computed
/// independently. Discrepancies are absolute for entries of magnitude up to
/// one and relative above that.
pub fn check_lemma2(gen: &Generator, trials: usize, seed: u64) -> Result<TheoremReport> {
    const TAUS: [f64; 4] = [0.0, 0.1, 1.0, 10.0];
    let tallies = run_trials(trials, |t| {
        let s = trial_seed(seed, SALT_LEMMA2, t);
        let pr = gen.sample(t, s)?;
        let mut tally = TrialTally::default();
        let tau = TAUS[t % TAUS.len()];
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(s ^ 0xA5A5);
        let v = super::generators::gaussian_vector(pr.x.ncols(), &mut rng);
        let pair = match preconditioners::puffer_tau(&pr.x, &pr.y, tau) {
            Ok(p) => p,
            Err(e) if is_rank_failure(&e) => {
                tally.excluded += 1;
                return Ok(tally);
            }
            Err(e) => return Err(e),
        };
        let direct = project_rowspace(&pr.x, &v, tau)?;
        let via = pair.x_tilde.tr_mul(&(&pair.x_tilde * &v));
        let ridge = estimators::ridge(&pr.x, &pr.y, tau)?;
        let ridge_pre = ridge_via_precond(&pr.x, &pr.y, tau)?;
        let d = relative_gap(&direct, &via).max(relative_gap(&ridge, &ridge_pre));
        tally.worst.observe(d, s, t);
        tally.comparisons += 2;
        Ok(tally)
    })?;
    let total = merge_tallies(tallies);
    Ok(finish_report(
        TheoremId::Lemma2,
        trials,
        total.comparisons,
        total.excluded,
        total.worst,
        LEMMA2_TOL,
        details(total.counters),
    ))
}

/// Distinct local minima on `Puffer_0` data are within `λ₁ + λ₂` of each
/// other after projection onto the row space, for minima from any pair of
/// concave penalties at tuning parameters `λ₁`, `λ₂`. The discrepancy is the
/// largest excess over that bound.
pub fn check_local_min_gap(
    gen: &Generator,
    instances: usize,
    seed: u64,
    pens: &[PenaltySpec],
    cfg: &SolverConfig,
) -> Result<TheoremReport> {
    if let Some(p) = pens.iter().find(|p| !p.is_concave()) {
        return Err(PufferError::Input(format!("{} is not concave", p.kind.name())));
    }
    let tallies = run_trials(instances, |t| {
        let s = trial_seed(seed, SALT_EQ10, t);
        let pr = gen.sample(t, s)?;
        let mut tally = TrialTally::default();
        let pair = match preconditioners::puffer_tau(&pr.x, &pr.y, 0.0) {
            Ok(p) => p,
            Err(e) if is_rank_failure(&e) => {
                tally.excluded += 1;
                return Ok(tally);
            }
            Err(e) => return Err(e),
        };
        let top = lambda_max(&pair.x_tilde, &pair.y_tilde);
        let lambdas = [0.3 * top, 0.18 * top];
        // (λ, minimum) for every penalty and tuning parameter
        let mut minima: Vec<(f64, Vector)> = Vec::new();
        let mut multiple = false;
        for pen in pens {
            for &lambda in &lambdas {
                let run_cfg = SolverConfig { rng_seed: s, ..*cfg };
                let fits = multistart_local_minima(&pair.x_tilde, &pair.y_tilde, lambda, pen, &run_cfg)?;
                let fits: Vec<FitResult> = fits.into_iter().filter(|f| f.converged).collect();
                if fits.len() >= 2 {
                    multiple = true;
                }
                minima.extend(fits.into_iter().map(|f| (lambda, f.beta_vector())));
            }
        }
        if !multiple {
            tally.excluded += 1;
            return Ok(tally);
        }
        tally.bump("instances_with_multiple_minima", 1.0);
        let mut ratio = 0.0_f64;
        for a in 0..minima.len() {
            for b in a + 1..minima.len() {
                let (l1, ref b1) = minima[a];
                let (l2, ref b2) = minima[b];
                let diff = b1 - b2;
                if max_abs(&diff) <= solver::DEDUP_TOL {
                    continue;
                }
                let gap = max_abs(&project_rowspace(&pr.x, &diff, 0.0)?);
                let bound = l1 + l2;
                tally.worst.observe((gap - bound).max(0.0), s, t);
                tally.comparisons += 1;
                ratio = ratio.max(gap / bound);
            }
        }
        tally.counters.insert("max_gap_over_bound", ratio);
        Ok(tally)
    })?;
    let mut total = TrialTally::default();
    let mut ratio = 0.0_f64;
    for mut t in tallies {
        ratio = ratio.max(t.counters.remove("max_gap_over_bound").unwrap_or(0.0));
        total.worst.merge(&t.worst);
        total.comparisons += t.comparisons;
        total.excluded += t.excluded;
        for (k, v) in t.counters {
            total.bump(k, v);
        }
    }
    total.counters.insert("max_gap_over_bound", ratio);
    Ok(finish_report(
        TheoremId::Eq10Gap,
        instances,
        total.comparisons,
        total.excluded,
        total.worst,
        theorem_tolerance(cfg),
        details(total.counters),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::normal_cdf;
    use crate::verify::{DesignFamily, Regime};

    #[test]
    fn critical_value_gives_five_percent() {
        assert!((two_sided_p(Z_975) - 0.05).abs() < 1e-15);
        assert!((normal_cdf(Z_975) - 0.975).abs() < 1e-15);
    }

    #[test]
    fn unhalved_lasso_minimizes_its_own_objective() {
        let x = Matrix::from_row_slice(4, 2, &[1.0, 0.3, 0.2, 1.0, 0.5, 0.5, 0.0, 1.0]);
        let y = Vector::from_vec(vec![1.0, -0.5, 2.0, 0.3]);
        let lambda = 0.8;
        let fit = lasso_unhalved(&x, &y, lambda, &SolverConfig::default()).unwrap();
        let obj = |b: &Vector| (&y - &x * b).norm_squared() + lambda * b.iter().map(|v| v.abs()).sum::<f64>();
        let best = obj(&fit.beta_vector());
        for i in -10..=10 {
            for k in -10..=10 {
                let probe = fit.beta_vector() + Vector::from_vec(vec![i as f64 * 1e-3, k as f64 * 1e-3]);
                assert!(obj(&probe) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn lemma1_small_run_passes() {
        let r = check_lemma1(&Generator::orthonormal(20, 6), 10, 1, &SolverConfig::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.comparisons, 100);
    }

    #[test]
    fn theorem1_negative_control_fails() {
        let gen = Generator::new(vec![DesignFamily::Equicorrelated { rho: 0.9 }], Regime::Tall { max_n: 40, max_p: 10 });
        let c = control_theorem1(&gen, 12, 3, &SolverConfig::default()).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(c.max_discrepancy > 10.0 * CONTROL_THRESHOLD);
    }

    #[test]
    fn reports_are_deterministic() {
        let gen = Generator::correlated(30, 6);
        let a = check_theorem2(&gen, 6, 11, &[PenaltySpec::lasso()], &SolverConfig::default()).unwrap();
        let b = check_theorem2(&gen, 6, 11, &[PenaltySpec::lasso()], &SolverConfig::default()).unwrap();
        assert_eq!(a.max_discrepancy.to_bits(), b.max_discrepancy.to_bits());
        assert_eq!(a.worst_case_seed, b.worst_case_seed);
        assert_eq!(a.details, b.details);
    }

    #[test]
    fn gap_check_rejects_convex_penalty() {
        let r = check_local_min_gap(
            &crate::verify::local_minima_generator(),
            1,
            0,
            &[PenaltySpec::elastic_net(0.5).unwrap()],
            &SolverConfig::default(),
        );
        assert!(r.is_err());
    }
}
