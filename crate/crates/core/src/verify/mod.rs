//! Executable certificates for the equivalences between preconditioned
//! penalized regression and classical estimators.
//!
//! Each check draws seeded problems, computes both sides of an identity by
//! independent routes and records the worst discrepancy together with the
//! seed that produced it. All `λ` values are on the halved-objective scale
//! `½‖y − Xb‖² + λ Σ pen(b_j)`, where the lasso on an orthonormal design is
//! exactly soft thresholding at `λ`. Lasso fits in the lemma and first
//! theorem are computed through the unhalved objective `‖y − Xb‖² + λ'‖b‖₁`
//! at `λ' = 2λ`.

mod checks;
pub mod generators;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::penalties::PenaltySpec;
use crate::solver::SolverConfig;

pub use checks::{
    check_lemma1, check_lemma2, check_local_min_gap, check_theorem1, check_theorem2, check_theorem3,
    control_theorem1, control_theorem2, independent_kkt_residual, lasso_unhalved, Z_975,
};
pub use generators::{DesignFamily, Generator, Problem, Regime};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PUFFER_LASSO_THREADS";

/// Lemma 2 identities are pure linear algebra and are held to this tolerance.
pub const LEMMA2_TOL: f64 = 1e-8;
/// Negative controls must exceed this discrepancy.
pub const CONTROL_THRESHOLD: f64 = 1e-2;
/// `|Z_j|` within this distance of the selection threshold counts as a tie.
pub const TIE_TOL: f64 = 1e-9;

/// Theorem tolerance: ten times the solver's KKT tolerance.
pub fn theorem_tolerance(cfg: &SolverConfig) -> f64 {
    10.0 * cfg.kkt_tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    Lemma1,
    Thm1,
    Thm2,
    Thm3Active,
    Thm3Inactive,
    Eq10Gap,
    Lemma2,
    Thm1General,
    Thm2General,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub theorem_id: TheoremId,
    pub trials: usize,
    /// Individual comparisons made (coefficients, λ values or pairs).
    pub comparisons: usize,
    /// Trials or fits left out (rank failures, ties, non-converged fits,
    /// instances without a second minimum).
    pub excluded: usize,
    /// For set-equality checks every mismatch contributes a unit discrepancy.
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_case_seed: u64,
    pub worst_case_trial: usize,
    pub details: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlId {
    Thm1WithoutPuffer,
    Thm2UnscaledPuffer,
}

/// A negative control: the same comparison with the preconditioner removed
/// or replaced must report a discrepancy above `threshold`.
#[derive(Debug, Clone, Serialize)]
pub struct ControlReport {
    pub control_id: ControlId,
    pub trials: usize,
    pub max_discrepancy: f64,
    /// Smallest per-trial discrepancy, for reference.
    pub min_discrepancy: f64,
    pub threshold: f64,
    pub passed: bool,
    pub strongest_seed: u64,
}

/// Tracks the largest discrepancy and where it occurred. Ties keep the
/// earliest trial, so the outcome does not depend on evaluation order as long
/// as trials are merged in index order.
#[derive(Debug, Clone, Default)]
pub(crate) struct Worst {
    pub value: f64,
    pub seed: u64,
    pub trial: usize,
}

impl Worst {
    pub fn observe(&mut self, value: f64, seed: u64, trial: usize) {
        if value > self.value || value.is_nan() {
            *self = Worst { value, seed, trial };
        }
    }

    pub fn merge(&mut self, other: &Worst) {
        self.observe(other.value, other.seed, other.trial);
    }
}

pub(crate) fn finish_report(
    theorem_id: TheoremId,
    trials: usize,
    comparisons: usize,
    excluded: usize,
    worst: Worst,
    tolerance: f64,
    details: BTreeMap<String, f64>,
) -> TheoremReport {
    TheoremReport {
        theorem_id,
        trials,
        comparisons,
        excluded,
        max_discrepancy: worst.value,
        tolerance,
        passed: worst.value <= tolerance,
        worst_case_seed: worst.seed,
        worst_case_trial: worst.trial,
        details,
    }
}

/// Seed of trial `trial` for a check identified by `salt`.
pub fn trial_seed(base: u64, salt: u64, trial: usize) -> u64 {
    let mut z = base
        .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` over `0..trials` in parallel, returning results in trial order.
pub(crate) fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Trial counts for a full verification run.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyPlan {
    pub seed: u64,
    pub lemma1_trials: usize,
    pub thm1_trials: usize,
    pub thm2_trials: usize,
    pub thm3_trials: usize,
    pub lemma2_trials: usize,
    pub general_trials: usize,
    pub eq10_instances: usize,
    pub control_trials: usize,
    pub solver: SolverConfig,
}

impl VerifyPlan {
    /// Counts scaled from a base trial count; `200` gives the full-strength run.
    pub fn with_trials(seed: u64, trials: usize) -> Self {
        let t = trials.max(1);
        VerifyPlan {
            seed,
            lemma1_trials: t,
            thm1_trials: t,
            thm2_trials: t,
            thm3_trials: (t / 10).max(1),
            lemma2_trials: (t * 5 / 2).max(1),
            general_trials: (t / 2).max(1),
            eq10_instances: (t / 4).max(1),
            control_trials: (t / 10).max(1),
            solver: SolverConfig { rng_seed: seed, ..SolverConfig::default() },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    /// Lemma 1, Theorems 1–3 (active and inactive coordinates) and the
    /// local-minima gap.
    pub reports: Vec<TheoremReport>,
    /// Lemma 2 and the SCAD / MC+ versions of Theorems 1 and 2.
    pub supplementary: Vec<TheoremReport>,
    pub controls: Vec<ControlReport>,
    pub all_passed: bool,
}

/// Number of worker threads, from [`THREADS_ENV`] when set to a positive integer.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

pub fn standard_penalties() -> Vec<PenaltySpec> {
    vec![
        PenaltySpec::lasso(),
        PenaltySpec::default_for(crate::penalties::PenaltyKind::Scad),
        PenaltySpec::default_for(crate::penalties::PenaltyKind::Mcp),
    ]
}

pub fn nonconvex_penalties() -> Vec<PenaltySpec> {
    vec![
        PenaltySpec::default_for(crate::penalties::PenaltyKind::Scad),
        PenaltySpec::default_for(crate::penalties::PenaltyKind::Mcp),
    ]
}

/// Generator used for the local-minima gap: tiny wide designs with strongly
/// correlated columns, where MC+ tends to have several stationary points.
pub fn local_minima_generator() -> Generator {
    Generator::new(
        vec![DesignFamily::Equicorrelated { rho: 0.9 }, DesignFamily::Equicorrelated { rho: 0.7 }],
        Regime::Fixed { n: 2, p: 4 },
    )
}

pub fn local_minima_penalties() -> Vec<PenaltySpec> {
    vec![
        PenaltySpec { kind: crate::penalties::PenaltyKind::Mcp, param: 1.5 },
        PenaltySpec::default_for(crate::penalties::PenaltyKind::Mcp),
        PenaltySpec::default_for(crate::penalties::PenaltyKind::Scad),
    ]
}

/// Runs every check with the default generators.
pub fn run_all(plan: &VerifyPlan) -> Result<VerifyOutcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = configured_threads() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| crate::error::PufferError::Numerical(format!("thread pool: {e}")))?;
    pool.install(|| run_all_inner(plan))
}

fn run_all_inner(plan: &VerifyPlan) -> Result<VerifyOutcome> {
    let cfg = &plan.solver;
    let seed = plan.seed;
    let lasso = [PenaltySpec::lasso()];
    let tall = Generator::correlated(50, 20);
    let wide = Generator::high_dimensional(15, 40);

    let lemma1 = check_lemma1(&Generator::orthonormal(50, 20), plan.lemma1_trials, seed, cfg)?;
    let thm1 = check_theorem1(&tall, plan.thm1_trials, seed, &lasso, cfg)?;
    let thm2 = check_theorem2(&tall, plan.thm2_trials, seed, &lasso, cfg)?;
    let (thm3_active, thm3_inactive) =
        check_theorem3(&wide, plan.thm3_trials, seed, &standard_penalties(), &[0.0, 0.1, 1.0], cfg)?;
    let eq10 = check_local_min_gap(
        &local_minima_generator(),
        plan.eq10_instances,
        seed,
        &local_minima_penalties(),
        cfg,
    )?;

    let lemma2 = check_lemma2(&wide, plan.lemma2_trials, seed)?;
    let thm1g = check_theorem1(&tall, plan.general_trials, seed, &nonconvex_penalties(), cfg)?;
    let thm2g = check_theorem2(&tall, plan.general_trials, seed, &nonconvex_penalties(), cfg)?;

    let equicorrelated = Generator::new(vec![DesignFamily::Equicorrelated { rho: 0.9 }], Regime::Tall { max_n: 50, max_p: 20 });
    let heteroskedastic = Generator::new(vec![DesignFamily::Heteroskedastic], Regime::Tall { max_n: 50, max_p: 20 });
    let controls = vec![
        control_theorem1(&equicorrelated, plan.control_trials, seed, cfg)?,
        control_theorem2(&heteroskedastic, plan.control_trials, seed, cfg)?,
    ];

    let reports = vec![lemma1, thm1, thm2, thm3_active, thm3_inactive, eq10];
    let supplementary = vec![lemma2, thm1g, thm2g];
    let all_passed = reports.iter().chain(&supplementary).all(|r| r.passed) && controls.iter().all(|c| c.passed);
    Ok(VerifyOutcome { reports, supplementary, controls, all_passed })
}
