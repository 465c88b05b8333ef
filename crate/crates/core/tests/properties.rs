use proptest::prelude::*;

use puffer_core::estimators::ols;
use puffer_core::linalg::{pseudoinverse_gram, svd, SvdMode};
use puffer_core::penalties::{univariate_threshold, PenaltyKind, PenaltySpec};
use puffer_core::preconditioners::{project_rowspace, puffer, puffer_scaled, puffer_tau};
use puffer_core::solver::{kkt_residual, lambda_max, lambda_grid, objective, solve, solve_path, SolverConfig};
use puffer_core::{Matrix, Vector};

fn matrix(n: usize, p: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0..2.0_f64, n * p).prop_map(move |v| Matrix::from_vec(n, p, v))
}

fn vector(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-3.0..3.0_f64, n).prop_map(Vector::from_vec)
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..9, 1usize..9)
}

fn penalty() -> impl Strategy<Value = PenaltySpec> {
    prop_oneof![
        Just(PenaltySpec::lasso()),
        (0.05..=1.0_f64).prop_map(|a| PenaltySpec::elastic_net(a).unwrap()),
        (2.2..6.0_f64).prop_map(|a| PenaltySpec::scad(a).unwrap()),
        (1.1..6.0_f64).prop_map(|g| PenaltySpec::mcp(g).unwrap()),
    ]
}

fn tall_problem() -> impl Strategy<Value = (Matrix, Vector)> {
    (1usize..6).prop_flat_map(|p| (p + 2..p + 12).prop_flat_map(move |n| (matrix(n, p), vector(n))))
}

fn wide_problem() -> impl Strategy<Value = (Matrix, Vector)> {
    (1usize..5).prop_flat_map(|n| (n..n + 6).prop_flat_map(move |p| (matrix(n, p), vector(n))))
}

fn sup(a: &Vector, b: &Vector) -> f64 {
    (a - b).amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_reconstructs_and_is_orthonormal((n, p) in shape(), seed in any::<u64>()) {
        let x = Matrix::from_fn(n, p, |i, j| (((seed ^ (i * 31 + j * 7) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
        for mode in [SvdMode::Skinny, SvdMode::Full] {
            let f = svd(&x, mode).unwrap();
            prop_assert!((f.reconstruct() - &x).amax() < 1e-12);
            let utu = f.u.transpose() * &f.u;
            prop_assert!((utu.clone() - Matrix::identity(utu.nrows(), utu.ncols())).amax() < 1e-12);
            let vtv = f.v.transpose() * &f.v;
            prop_assert!((vtv.clone() - Matrix::identity(vtv.nrows(), vtv.ncols())).amax() < 1e-12);
            prop_assert!(f.d.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(f.d.iter().all(|&d| d >= 0.0));
        }
    }

    #[test]
    fn gram_pseudoinverse_satisfies_penrose_conditions(x in (1usize..7, 1usize..7).prop_flat_map(|(n, p)| matrix(n, p))) {
        let g = x.transpose() * &x;
        let a = pseudoinverse_gram(&x).unwrap();
        let scale = g.amax().max(1.0);
        prop_assert!((&g * &a * &g - &g).amax() <= 1e-8 * scale);
        prop_assert!((&a * &g * &a - &a).amax() <= 1e-8 * a.amax().max(1.0) * a.amax().max(1.0) * scale);
        prop_assert!((&a - a.transpose()).amax() <= 1e-10 * a.amax().max(1.0));
    }

    #[test]
    fn threshold_is_odd_and_shrinks(pen in penalty(), z in -20.0..20.0_f64, lambda in 0.0..5.0_f64) {
        let t = univariate_threshold(&pen, z, lambda);
        prop_assert_eq!(univariate_threshold(&pen, -z, lambda), -t);
        prop_assert!(t.abs() <= z.abs() + 1e-15);
        prop_assert!(t == 0.0 || t.signum() == z.signum());
    }

    #[test]
    fn threshold_beats_random_probes(pen in penalty(), z in -10.0..10.0_f64, lambda in 0.01..4.0_f64, probes in prop::collection::vec(-12.0..12.0_f64, 200)) {
        let obj = |b: f64| 0.5 * (z - b).powi(2) + lambda * pen.value_at(b, lambda);
        let t = univariate_threshold(&pen, z, lambda);
        let best = obj(t);
        for b in probes.into_iter().chain([0.0, z, -z]) {
            prop_assert!(best <= obj(b) + 1e-12, "b={} obj={} best={}", b, obj(b), best);
        }
    }

    #[test]
    fn solver_fits_satisfy_first_order_conditions((x, y) in tall_problem(), pen in penalty(), frac in 0.0..1.2_f64) {
        let lambda = frac * lambda_max(&x, &y);
        let fit = solve(&x, &y, lambda, &pen, None, &SolverConfig::default()).unwrap();
        if fit.converged {
            prop_assert!(kkt_residual(&x, &y, &fit.beta_vector(), lambda, &pen) <= 1e-7 * 1.01);
        }
    }

    #[test]
    fn lambda_max_zeroes_every_penalty((x, y) in tall_problem(), pen in penalty(), bump in 1.0..3.0_f64) {
        let fit = solve(&x, &y, bump * lambda_max(&x, &y), &pen, None, &SolverConfig::default()).unwrap();
        prop_assert!(fit.beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn solver_is_equivariant_under_column_permutation((x, y) in tall_problem(), frac in 0.05..0.9_f64, shift in 0usize..8) {
        let p = x.ncols();
        let perm: Vec<usize> = (0..p).map(|j| (j + shift) % p).collect();
        let xp = Matrix::from_fn(x.nrows(), p, |i, j| x[(i, perm[j])]);
        let lambda = frac * lambda_max(&x, &y);
        let cfg = SolverConfig { coord_tol: 1e-13, kkt_tol: 1e-10, ..SolverConfig::default() };
        let pen = PenaltySpec::lasso();
        let a = solve(&x, &y, lambda, &pen, None, &cfg).unwrap();
        let b = solve(&xp, &y, lambda, &pen, None, &cfg).unwrap();
        let scale = a.beta.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for j in 0..p {
            prop_assert!((b.beta[j] - a.beta[perm[j]]).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn solver_is_bit_deterministic((x, y) in wide_problem(), pen in penalty(), frac in 0.01..1.0_f64) {
        let lambda = frac * lambda_max(&x, &y);
        let cfg = SolverConfig::default();
        let a = solve(&x, &y, lambda, &pen, None, &cfg).unwrap();
        let b = solve(&x, &y, lambda, &pen, None, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn convex_fits_are_not_beaten_by_perturbations((x, y) in tall_problem(), frac in 0.01..1.0_f64, alpha in 0.0..1.5_f64, seed in any::<u64>()) {
        let pen = if alpha < 0.5 { PenaltySpec::lasso() } else { PenaltySpec::elastic_net((alpha - 0.5).max(0.01)).unwrap() };
        let lambda = frac * lambda_max(&x, &y);
        let cfg = SolverConfig { coord_tol: 1e-13, kkt_tol: 1e-10, ..SolverConfig::default() };
        let fit = solve(&x, &y, lambda, &pen, None, &cfg).unwrap();
        let beta = fit.beta_vector();
        let best = objective(&x, &y, &beta, lambda, &pen);
        let mut state = seed | 1;
        for k in 0..2000 {
            let radius = 10f64.powi(-(k % 6) as i32);
            let probe = beta.map(|b| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                b + radius * ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            });
            prop_assert!(best <= objective(&x, &y, &probe, lambda, &pen) + 1e-9 * best.abs().max(1.0));
        }
    }

    #[test]
    fn path_warm_start_matches_cold_start((x, y) in tall_problem(), pen in penalty()) {
        let top = lambda_max(&x, &y);
        prop_assume!(top > 1e-6);
        let cfg = SolverConfig { coord_tol: 1e-13, kkt_tol: 1e-10, ..SolverConfig::default() };
        let grid = lambda_grid(top, 8, 1e-2);
        let path = solve_path(&x, &y, &grid, &pen, &cfg).unwrap();
        prop_assert!(path[0].beta.iter().all(|&b| b == 0.0));
        if pen.is_convex() {
            for (lambda, warm) in grid.iter().zip(&path) {
                let cold = solve(&x, &y, *lambda, &pen, None, &cfg).unwrap();
                prop_assert!(sup(&cold.beta_vector(), &warm.beta_vector()) <= 1e-6 * cold.beta_vector().amax().max(1.0));
            }
        }
    }

    #[test]
    fn puffer_fits_are_thresholded_ols((x, y) in tall_problem(), pen in penalty(), frac in 0.0..1.1_f64) {
        let Ok(pair) = puffer(&x, &y) else { return Ok(()) };
        let b = ols(&x, &y).unwrap();
        let lambda = frac * b.amax();
        let fit = solve(&pair.x_tilde, &pair.y_tilde, lambda, &pen, None, &SolverConfig::default()).unwrap();
        let expect = b.map(|v| univariate_threshold(&pen, v, lambda));
        prop_assert!(sup(&fit.beta_vector(), &expect) <= 1e-6 * b.amax().max(1.0));
    }

    #[test]
    fn scaled_puffer_has_identity_gram_and_rescaled_ols((x, y) in tall_problem()) {
        let Ok(pair) = puffer_scaled(&x, &y) else { return Ok(()) };
        let p = x.ncols();
        prop_assert!((pair.x_tilde.transpose() * &pair.x_tilde - Matrix::identity(p, p)).amax() < 1e-10);
        let nd = pair.n_diag.clone().unwrap();
        let b = ols(&x, &y).unwrap();
        let rescaled = pair.x_tilde.tr_mul(&pair.y_tilde);
        prop_assert!(sup(&rescaled, &b.component_div(&nd)) <= 1e-8 * b.component_div(&nd).amax().max(1.0));
    }

    #[test]
    fn rowspace_projector_is_idempotent_and_symmetric((x, _) in wide_problem(), v in vector(12), w in vector(12)) {
        let p = x.ncols();
        let v = v.rows(0, p).into_owned();
        let w = w.rows(0, p).into_owned();
        let Ok(pv) = project_rowspace(&x, &v, 0.0) else { return Ok(()) };
        let ppv = project_rowspace(&x, &pv, 0.0).unwrap();
        prop_assert!(sup(&ppv, &pv) <= 1e-8 * v.amax().max(1.0));
        let pw = project_rowspace(&x, &w, 0.0).unwrap();
        prop_assert!((pv.dot(&w) - v.dot(&pw)).abs() <= 1e-8 * (v.norm() * w.norm()).max(1.0));
    }

    #[test]
    fn generalized_puffer_gram_is_the_rowspace_map((x, _) in wide_problem(), v in vector(12), tau in prop_oneof![Just(0.0), 0.01..10.0_f64]) {
        let p = x.ncols();
        let v = v.rows(0, p).into_owned();
        let y = Vector::zeros(x.nrows());
        let Ok(pair) = puffer_tau(&x, &y, tau) else { return Ok(()) };
        let lhs = pair.x_tilde.tr_mul(&(&pair.x_tilde * &v));
        let rhs = project_rowspace(&x, &v, tau).unwrap();
        prop_assert!(sup(&lhs, &rhs) <= 1e-8 * rhs.amax().max(1.0));
    }
}

#[test]
fn nonconvex_kinds_are_flagged() {
    for kind in [PenaltyKind::Scad, PenaltyKind::Mcp] {
        assert!(!PenaltySpec::default_for(kind).is_convex());
    }
}
