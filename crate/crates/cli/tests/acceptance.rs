//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Runs as a single test so the wall-clock
//! limits are not distorted by other tests sharing the machine.

use std::process::Command;
use std::time::{Duration, Instant};

use puffer_core::penalties::{PenaltyKind, PenaltySpec};
use puffer_core::preconditioners::{puffer, puffer_tau};
use puffer_core::solver::{lambda_max, multistart_local_minima, solve, SolverConfig};
use puffer_core::verify::{
    check_lemma1, check_lemma2, check_local_min_gap, check_theorem1, check_theorem2, check_theorem3,
    control_theorem1, independent_kkt_residual, local_minima_generator, local_minima_penalties, DesignFamily,
    Generator, Regime, TheoremReport, CONTROL_THRESHOLD,
};

const SEED: u64 = 20_240_601;
const TRIALS: usize = 200;
const GENERAL_TRIALS: usize = 100;
const LEMMA2_TUPLES: usize = 500;
const THM3_TRIALS: usize = 20;
const EQ10_INSTANCES: usize = 50;
const CONTROL_TRIALS: usize = 20;
const KKT_TRIALS: usize = 25;

const COEF_TOL: f64 = 1e-6;
const LEMMA2_TOL: f64 = 1e-8;

const LEMMA1_LIMIT: Duration = Duration::from_secs(30);
const THM1_LIMIT: Duration = Duration::from_secs(60);
const THM3_LIMIT: Duration = Duration::from_secs(120);
const CLI_LIMIT: Duration = Duration::from_secs(300);

struct Ledger {
    lines: Vec<(bool, String)>,
}

impl Ledger {
    fn record(&mut self, id: usize, name: &str, ok: bool, detail: String) {
        let line = format!("[{}] criterion {id} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((ok, line));
    }
}

fn summary(r: &TheoremReport) -> String {
    format!(
        "max_discrepancy={:e} tol={:e} trials={} comparisons={} excluded={} worst_seed={}",
        r.max_discrepancy, r.tolerance, r.trials, r.comparisons, r.excluded, r.worst_case_seed
    )
}

fn pens() -> Vec<PenaltySpec> {
    vec![PenaltySpec::lasso(), PenaltySpec::default_for(PenaltyKind::Scad), PenaltySpec::default_for(PenaltyKind::Mcp)]
}

fn nonconvex() -> Vec<PenaltySpec> {
    vec![PenaltySpec::default_for(PenaltyKind::Scad), PenaltySpec::default_for(PenaltyKind::Mcp)]
}

fn criterion_lemma1(l: &mut Ledger, cfg: &SolverConfig) {
    let start = Instant::now();
    let r = check_lemma1(&Generator::orthonormal(50, 20), TRIALS, SEED, cfg).unwrap();
    let took = start.elapsed();
    let ok = r.passed && r.max_discrepancy <= COEF_TOL && r.comparisons >= TRIALS * 10 && took < LEMMA1_LIMIT;
    l.record(1, "lemma1", ok, format!("{} time={took:.1?}", summary(&r)));
}

fn criterion_theorem1(l: &mut Ledger, cfg: &SolverConfig) {
    let start = Instant::now();
    let r = check_theorem1(&Generator::correlated(50, 20), TRIALS, SEED, &[PenaltySpec::lasso()], cfg).unwrap();
    let rho9 = Generator::new(vec![DesignFamily::Equicorrelated { rho: 0.9 }], Regime::Tall { max_n: 50, max_p: 20 });
    let c = control_theorem1(&rho9, CONTROL_TRIALS, SEED, cfg).unwrap();
    let took = start.elapsed();
    let ok = r.passed
        && r.max_discrepancy <= COEF_TOL
        && r.excluded == 0
        && c.passed
        && c.max_discrepancy > CONTROL_THRESHOLD
        && took < THM1_LIMIT;
    l.record(
        2,
        "theorem1",
        ok,
        format!("{} control_max={:e} control_min={:e} time={took:.1?}", summary(&r), c.max_discrepancy, c.min_discrepancy),
    );
}

fn criterion_theorem2(l: &mut Ledger, cfg: &SolverConfig) {
    let r = check_theorem2(&Generator::correlated(50, 20), TRIALS, SEED, &[PenaltySpec::lasso()], cfg).unwrap();
    let d = |k: &str| r.details.get(k).copied().unwrap_or(f64::NAN);
    let ok = r.passed && d("set_mismatches") == 0.0 && d("rule_005_mismatches") == 0.0 && r.comparisons >= TRIALS * 25;
    l.record(
        3,
        "theorem2",
        ok,
        format!(
            "{} set_mismatches={} rule_005_mismatches={} boundary_ties={} p_unresolved={}",
            summary(&r),
            d("set_mismatches"),
            d("rule_005_mismatches"),
            d("boundary_ties"),
            d("p_unresolved")
        ),
    );
}

fn criterion_theorem3(l: &mut Ledger, cfg: &SolverConfig) {
    let start = Instant::now();
    let (a, i) =
        check_theorem3(&Generator::high_dimensional(15, 40), THM3_TRIALS, SEED, &pens(), &[0.0, 0.1, 1.0], cfg).unwrap();
    let took = start.elapsed();
    let minima = a.details.get("local_minima").copied().unwrap_or(0.0);
    let ok = a.passed
        && i.passed
        && a.max_discrepancy <= COEF_TOL
        && i.max_discrepancy <= COEF_TOL
        && a.comparisons > 0
        && i.comparisons > 0
        && took < THM3_LIMIT;
    l.record(
        4,
        "theorem3",
        ok,
        format!(
            "active[{}] inactive[{}] local_minima={minima} time={took:.1?}",
            summary(&a),
            summary(&i)
        ),
    );
}

fn criterion_lemma2(l: &mut Ledger) {
    let r = check_lemma2(&Generator::high_dimensional(15, 40), LEMMA2_TUPLES, SEED).unwrap();
    let ok = r.passed && r.max_discrepancy <= LEMMA2_TOL && r.comparisons >= LEMMA2_TUPLES && r.excluded == 0;
    l.record(5, "lemma2", ok, summary(&r));
}

fn criterion_gap(l: &mut Ledger, cfg: &SolverConfig) {
    let r = check_local_min_gap(&local_minima_generator(), EQ10_INSTANCES, SEED, &local_minima_penalties(), cfg).unwrap();
    let multi = r.details.get("instances_with_multiple_minima").copied().unwrap_or(0.0);
    let ratio = r.details.get("max_gap_over_bound").copied().unwrap_or(f64::NAN);
    let ok = r.passed && r.max_discrepancy <= COEF_TOL && multi > 0.0 && r.comparisons > 0;
    l.record(6, "local_minima_gap", ok, format!("{} instances_with_multiple_minima={multi} max_gap_over_bound={ratio:.6}", summary(&r)));
}

fn criterion_general(l: &mut Ledger, cfg: &SolverConfig) {
    let gen = Generator::correlated(50, 20);
    let t1 = check_theorem1(&gen, GENERAL_TRIALS, SEED, &nonconvex(), cfg).unwrap();
    let t2 = check_theorem2(&gen, GENERAL_TRIALS, SEED, &nonconvex(), cfg).unwrap();
    let ok = t1.passed && t2.passed && t1.max_discrepancy <= COEF_TOL && t2.max_discrepancy <= COEF_TOL;
    l.record(7, "general_penalties", ok, format!("thm1[{}] thm2[{}]", summary(&t1), summary(&t2)));
}

/// Every converged fit, from plain, Puffer and generalized-Puffer data and
/// from every multistart, must pass the from-scratch first-order check.
fn criterion_kkt(l: &mut Ledger, cfg: &SolverConfig) {
    let all = [
        PenaltySpec::lasso(),
        PenaltySpec::default_for(PenaltyKind::ElasticNet),
        PenaltySpec::default_for(PenaltyKind::Scad),
        PenaltySpec::default_for(PenaltyKind::Mcp),
    ];
    let tall = Generator::correlated(40, 15);
    let wide = Generator::high_dimensional(12, 30);
    let (mut fits, mut converged, mut passed) = (0usize, 0usize, 0usize);
    let mut worst = 0.0_f64;
    let mut tally = |x: &puffer_core::Matrix, y: &puffer_core::Vector, results: Vec<puffer_core::FitResult>| {
        for f in results {
            fits += 1;
            if f.converged {
                converged += 1;
                let r = independent_kkt_residual(x, y, &f.beta, f.lambda, &f.penalty);
                worst = worst.max(r);
                if r <= cfg.kkt_tol {
                    passed += 1;
                }
            }
        }
    };
    for t in 0..KKT_TRIALS {
        let pr = tall.sample(t, SEED ^ t as u64).unwrap();
        let pre = puffer(&pr.x, &pr.y).unwrap();
        let wpr = wide.sample(t, SEED.wrapping_add(t as u64)).unwrap();
        let tau = [0.0, 0.1, 1.0][t % 3];
        let wpre = puffer_tau(&wpr.x, &wpr.y, tau).unwrap();
        for (x, y) in [(&pr.x, &pr.y), (&pre.x_tilde, &pre.y_tilde), (&wpr.x, &wpr.y), (&wpre.x_tilde, &wpre.y_tilde)] {
            let top = lambda_max(x, y);
            for pen in &all {
                for frac in [0.9, 0.5, 0.1, 0.01] {
                    let lambda = frac * top;
                    let single = solve(x, y, lambda, pen, None, cfg).unwrap();
                    tally(x, y, vec![single]);
                    if !pen.is_convex() {
                        let run = SolverConfig { rng_seed: SEED + t as u64, ..*cfg };
                        tally(x, y, multistart_local_minima(x, y, lambda, pen, &run).unwrap());
                    }
                }
            }
        }
    }
    let ok = converged > 0 && passed == converged;
    l.record(
        8,
        "solver_kkt",
        ok,
        format!("fits={fits} converged={converged} passing={passed} worst_residual={worst:e} kkt_tol={:e}", cfg.kkt_tol),
    );
}

fn criterion_cli(l: &mut Ledger) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_puffer"))
        .args(["verify", "--seed", "0"])
        .output()
        .expect("run puffer verify");
    let took = start.elapsed();
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    let reports = json["result"]["reports"].as_array().map_or(0, Vec::len);
    let all_passed = json["result"]["all_passed"].as_bool() == Some(true);
    let ok = out.status.code() == Some(0) && reports == 6 && all_passed && took < CLI_LIMIT;
    l.record(
        9,
        "cli_verify",
        ok,
        format!("exit={:?} reports={reports} all_passed={all_passed} time={took:.1?}", out.status.code()),
    );
}

#[test]
fn acceptance() {
    let cfg = SolverConfig { rng_seed: SEED, ..SolverConfig::default() };
    let mut l = Ledger { lines: Vec::new() };
    criterion_lemma1(&mut l, &cfg);
    criterion_theorem1(&mut l, &cfg);
    criterion_theorem2(&mut l, &cfg);
    criterion_theorem3(&mut l, &cfg);
    criterion_lemma2(&mut l);
    criterion_gap(&mut l, &cfg);
    criterion_general(&mut l, &cfg);
    criterion_kkt(&mut l, &cfg);
    criterion_cli(&mut l);
    let failed: Vec<&String> = l.lines.iter().filter(|(ok, _)| !ok).map(|(_, s)| s).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}
