//! Seeded random problem generators.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{PufferError, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DesignFamily {
    /// Orthonormal columns (requires n ≥ p).
    Orthonormal,
    /// i.i.d. standard normal entries.
    Gaussian,
    /// Every pair of columns has population correlation `rho`.
    Equicorrelated { rho: f64 },
    /// Gaussian columns rescaled by factors spread log-uniformly over [0.1, 10].
    Heteroskedastic,
    /// Prescribed singular spectrum, log-spaced from 1 down to `1/cond`.
    Spiked { cond: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `p ∈ [1, max_p]`, `n ∈ [p+1, max_n]`.
    Tall { max_n: usize, max_p: usize },
    /// `n ∈ [min_n, max_n]`, `p ∈ [n, max_p]`.
    Wide { min_n: usize, max_n: usize, max_p: usize },
    Fixed { n: usize, p: usize },
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub x: Matrix,
    pub y: Vector,
    /// Noise scale used to draw `y`.
    pub sigma: f64,
    pub seed: u64,
    pub family: DesignFamily,
}

/// Draws problems from a rotation of design families: trial `i` uses family
/// `i mod families.len()`.
#[derive(Debug, Clone)]
pub struct Generator {
    pub families: Vec<DesignFamily>,
    pub regime: Regime,
    pub sigma: f64,
}

impl Generator {
    pub fn new(families: Vec<DesignFamily>, regime: Regime) -> Self {
        Generator { families, regime, sigma: 1.0 }
    }

    pub fn orthonormal(max_n: usize, max_p: usize) -> Self {
        Generator::new(vec![DesignFamily::Orthonormal], Regime::Tall { max_n, max_p })
    }

    /// Full-rank tall designs with correlated columns, uneven column scales and
    /// condition numbers up to 1e4.
    pub fn correlated(max_n: usize, max_p: usize) -> Self {
        Generator::new(
            vec![
                DesignFamily::Equicorrelated { rho: 0.0 },
                DesignFamily::Equicorrelated { rho: 0.5 },
                DesignFamily::Equicorrelated { rho: 0.9 },
                DesignFamily::Heteroskedastic,
                DesignFamily::Spiked { cond: 1e2 },
                DesignFamily::Spiked { cond: 1e4 },
            ],
            Regime::Tall { max_n, max_p },
        )
    }

    pub fn high_dimensional(max_n: usize, max_p: usize) -> Self {
        Generator::new(
            vec![
                DesignFamily::Gaussian,
                DesignFamily::Equicorrelated { rho: 0.5 },
                DesignFamily::Equicorrelated { rho: 0.9 },
                DesignFamily::Heteroskedastic,
            ],
            Regime::Wide { min_n: 2, max_n, max_p },
        )
    }

    pub fn sample(&self, trial: usize, seed: u64) -> Result<Problem> {
        if self.families.is_empty() {
            return Err(PufferError::Input("generator has no design families".into()));
        }
        let family = self.families[trial % self.families.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, p) = match self.regime {
            Regime::Tall { max_n, max_p } => {
                if max_p == 0 || max_n <= 1 {
                    return Err(PufferError::Input("tall regime needs max_n > 1, max_p >= 1".into()));
                }
                let p = rng.random_range(1..=max_p.min(max_n - 1));
                (rng.random_range(p + 1..=max_n), p)
            }
            Regime::Wide { min_n, max_n, max_p } => {
                if min_n == 0 || min_n > max_n || max_n > max_p {
                    return Err(PufferError::Input("wide regime needs 1 <= min_n <= max_n <= max_p".into()));
                }
                let n = rng.random_range(min_n..=max_n);
                (n, rng.random_range(n..=max_p))
            }
            Regime::Fixed { n, p } => (n, p),
        };
        let x = design(family, n, p, &mut rng)?;
        let beta = Vector::from_fn(p, |_, _| {
            if rng.random_bool(0.5) {
                let mag: f64 = rng.random_range(0.5..2.0);
                if rng.random_bool(0.5) { mag } else { -mag }
            } else {
                0.0
            }
        });
        let noise = gaussian_vector(n, &mut rng);
        let y = &x * beta + noise * self.sigma;
        Ok(Problem { x, y, sigma: self.sigma, seed, family })
    }
}

pub fn gaussian_matrix(n: usize, p: usize, rng: &mut impl Rng) -> Matrix {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(n: usize, rng: &mut impl Rng) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random matrix with orthonormal columns (`n ≥ p`).
pub fn random_orthonormal(n: usize, p: usize, rng: &mut impl Rng) -> Matrix {
    let q = gaussian_matrix(n, p, rng).qr().q();
    q.columns(0, p).into_owned()
}

pub fn design(family: DesignFamily, n: usize, p: usize, rng: &mut impl Rng) -> Result<Matrix> {
    if n == 0 || p == 0 {
        return Err(PufferError::Input(format!("cannot generate a {n}x{p} design")));
    }
    let x = match family {
        DesignFamily::Orthonormal => {
            if n < p {
                return Err(PufferError::Input(format!("orthonormal design needs n>=p, got {n}x{p}")));
            }
            random_orthonormal(n, p, rng)
        }
        DesignFamily::Gaussian => gaussian_matrix(n, p, rng),
        DesignFamily::Equicorrelated { rho } => {
            if !(0.0..1.0).contains(&rho) {
                return Err(PufferError::Input(format!("rho must lie in [0, 1), got {rho}")));
            }
            let shared = gaussian_vector(n, rng);
            let own = gaussian_matrix(n, p, rng);
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            Matrix::from_fn(n, p, |i, j| a * shared[i] + b * own[(i, j)])
        }
        DesignFamily::Heteroskedastic => {
            let mut x = gaussian_matrix(n, p, rng);
            for mut col in x.column_iter_mut() {
                let e: f64 = rng.random_range(-1.0..=1.0);
                col *= 10f64.powf(e);
            }
            x
        }
        DesignFamily::Spiked { cond } => {
            if !(cond >= 1.0) {
                return Err(PufferError::Input(format!("condition number must be >= 1, got {cond}")));
            }
            let k = n.min(p);
            let u = random_orthonormal(n, k, rng);
            let v = random_orthonormal(p, k, rng);
            let scale = (n.max(p) as f64).sqrt();
            let mut us = u;
            for (i, mut col) in us.column_iter_mut().enumerate() {
                let frac = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
                col *= scale * cond.powf(-frac);
            }
            us * v.transpose()
        }
    };
    Ok(x)
}
