//! Regular sparse penalties.
//!
//! A penalty enters the objective as `λ · Σ_j pen(b_j)`. Every penalty here is
//! symmetric, nondecreasing in `|b|`, non-differentiable only at zero, and has
//! `|pen'(0±)| = 1`.
//!
//! SCAD and MC+ carry a knot scale `s`: their knots sit at `s`, `a·s` (SCAD)
//! and `γ·s` (MC+). Inside the solver the scale is tied to the current `λ`,
//! which gives the usual coupled parameterization (`λ·pen` equals the familiar
//! `p_λ`). The scale-free functions below evaluate at `s = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{PufferError, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_GAMMA: f64 = 3.0;
pub const DEFAULT_ENET_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    Lasso,
    ElasticNet,
    Scad,
    Mcp,
}

impl PenaltyKind {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::ElasticNet => "elastic_net",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
        }
    }
}

/// Penalty identity plus its shape parameter (`α` for elastic net, `a` for
/// SCAD, `γ` for MC+; ignored for the lasso).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub param: f64,
}

/// On `[lo, hi]` (`b ≥ 0`) the penalty is `const + c1·b + c2·b²`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    c1: f64,
    c2: f64,
}

impl PenaltySpec {
    pub fn lasso() -> Self {
        PenaltySpec { kind: PenaltyKind::Lasso, param: 0.0 }
    }

    pub fn elastic_net(alpha: f64) -> Result<Self> {
        PenaltySpec { kind: PenaltyKind::ElasticNet, param: alpha }.validated()
    }

    pub fn scad(a: f64) -> Result<Self> {
        PenaltySpec { kind: PenaltyKind::Scad, param: a }.validated()
    }

    pub fn mcp(gamma: f64) -> Result<Self> {
        PenaltySpec { kind: PenaltyKind::Mcp, param: gamma }.validated()
    }

    /// The kind with its conventional default parameter.
    pub fn default_for(kind: PenaltyKind) -> Self {
        let param = match kind {
            PenaltyKind::Lasso => 0.0,
            PenaltyKind::ElasticNet => DEFAULT_ENET_ALPHA,
            PenaltyKind::Scad => DEFAULT_SCAD_A,
            PenaltyKind::Mcp => DEFAULT_MCP_GAMMA,
        };
        PenaltySpec { kind, param }
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match self.kind {
            PenaltyKind::Lasso => true,
            PenaltyKind::ElasticNet => self.param > 0.0 && self.param <= 1.0,
            PenaltyKind::Scad => self.param > 2.0 && self.param.is_finite(),
            PenaltyKind::Mcp => self.param > 1.0 && self.param.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            let range = match self.kind {
                PenaltyKind::ElasticNet => "alpha in (0, 1]",
                PenaltyKind::Scad => "a > 2",
                PenaltyKind::Mcp => "gamma > 1",
                PenaltyKind::Lasso => unreachable!(),
            };
            Err(PufferError::Input(format!(
                "{} requires {range}, got {}",
                self.kind.name(),
                self.param
            )))
        }
    }

    /// Convex kinds have a unique solution; SCAD and MC+ may not.
    pub fn is_convex(&self) -> bool {
        matches!(self.kind, PenaltyKind::Lasso | PenaltyKind::ElasticNet)
    }

    /// Concave on `(0, ∞)`, which implies `|pen'| ≤ 1` away from zero.
    pub fn is_concave(&self) -> bool {
        !matches!(self.kind, PenaltyKind::ElasticNet)
    }

    fn pieces(&self, scale: f64) -> Vec<Piece> {
        let inf = f64::INFINITY;
        match self.kind {
            PenaltyKind::Lasso => vec![Piece { lo: 0.0, hi: inf, c1: 1.0, c2: 0.0 }],
            PenaltyKind::ElasticNet => {
                vec![Piece { lo: 0.0, hi: inf, c1: 1.0, c2: 0.5 * self.param }]
            }
            PenaltyKind::Scad => {
                let a = self.param;
                vec![
                    Piece { lo: 0.0, hi: scale, c1: 1.0, c2: 0.0 },
                    Piece {
                        lo: scale,
                        hi: a * scale,
                        c1: a / (a - 1.0),
                        c2: -1.0 / (2.0 * (a - 1.0) * scale),
                    },
                    Piece { lo: a * scale, hi: inf, c1: 0.0, c2: 0.0 },
                ]
            }
            PenaltyKind::Mcp => {
                let g = self.param;
                vec![
                    Piece { lo: 0.0, hi: g * scale, c1: 1.0, c2: -1.0 / (2.0 * g * scale) },
                    Piece { lo: g * scale, hi: inf, c1: 0.0, c2: 0.0 },
                ]
            }
        }
    }

    /// `pen(x)` with knot scale `scale`.
    pub fn value_at(&self, x: f64, scale: f64) -> f64 {
        let t = x.abs();
        match self.kind {
            PenaltyKind::Lasso => t,
            PenaltyKind::ElasticNet => t + 0.5 * self.param * t * t,
            PenaltyKind::Scad => {
                let a = self.param;
                if t <= scale {
                    t
                } else if t <= a * scale {
                    (2.0 * a * scale * t - t * t - scale * scale) / (2.0 * (a - 1.0) * scale)
                } else {
                    0.5 * (a + 1.0) * scale
                }
            }
            PenaltyKind::Mcp => {
                let g = self.param;
                if t <= g * scale {
                    t - t * t / (2.0 * g * scale)
                } else {
                    0.5 * g * scale
                }
            }
        }
    }

    /// `pen'(x)` with knot scale `scale`; undefined at zero.
    pub fn derivative_at(&self, x: f64, scale: f64) -> Result<f64> {
        if x == 0.0 {
            return Err(PufferError::Domain(format!(
                "{} penalty is non-differentiable at zero",
                self.kind.name()
            )));
        }
        let t = x.abs();
        let s = x.signum();
        let mag = match self.kind {
            PenaltyKind::Lasso => 1.0,
            PenaltyKind::ElasticNet => 1.0 + self.param * t,
            PenaltyKind::Scad => {
                let a = self.param;
                if t <= scale {
                    1.0
                } else if t <= a * scale {
                    (a * scale - t) / ((a - 1.0) * scale)
                } else {
                    0.0
                }
            }
            PenaltyKind::Mcp => {
                let g = self.param;
                if t <= g * scale {
                    1.0 - t / (g * scale)
                } else {
                    0.0
                }
            }
        };
        Ok(s * mag)
    }

    /// Global minimizer of `½(b − z)² + weight · pen(b)` where `pen` has knot
    /// scale `scale`. Ties between equal-objective candidates go to the
    /// smaller magnitude.
    pub fn threshold_weighted(&self, z: f64, weight: f64, scale: f64) -> f64 {
        if weight <= 0.0 {
            return z;
        }
        match self.kind {
            PenaltyKind::Lasso => soft_threshold(z, weight),
            PenaltyKind::ElasticNet => soft_threshold(z, weight) / (1.0 + weight * self.param),
            PenaltyKind::Scad | PenaltyKind::Mcp => {
                if z == 0.0 {
                    return 0.0;
                }
                let b = self.piecewise_minimizer(z.abs(), weight, scale);
                b.copysign(z)
            }
        }
    }

    // Enumerates the candidates of the piecewise-quadratic objective on
    // b >= 0 (zero, knots, interior stationary points) and keeps the best.
    fn piecewise_minimizer(&self, z: f64, weight: f64, scale: f64) -> f64 {
        let objective = |b: f64| 0.5 * (b - z) * (b - z) + weight * self.value_at(b, scale);
        let mut candidates = vec![0.0];
        for piece in self.pieces(scale) {
            if piece.lo > 0.0 {
                candidates.push(piece.lo);
            }
            let curvature = 1.0 + 2.0 * weight * piece.c2;
            if curvature > 0.0 {
                let b = (z - weight * piece.c1) / curvature;
                if b > piece.lo && b < piece.hi {
                    candidates.push(b);
                }
            }
        }
        candidates.sort_by(f64::total_cmp);
        let mut best = candidates[0];
        let mut best_val = objective(best);
        for &b in &candidates[1..] {
            let val = objective(b);
            if val < best_val {
                best = b;
                best_val = val;
            }
        }
        best
    }
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec::lasso()
    }
}

/// `sign(x) · max(|x| − λ, 0)`.
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

pub fn soft_threshold_vec(x: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().map(|&v| soft_threshold(v, lambda)).collect()
}

/// `pen(x)` at unit knot scale.
pub fn pen_value(p: &PenaltySpec, x: f64) -> f64 {
    p.value_at(x, 1.0)
}

/// `pen'(x)` at unit knot scale.
pub fn pen_derivative(p: &PenaltySpec, x: f64) -> Result<f64> {
    p.derivative_at(x, 1.0)
}

/// The thresholding map `t̃_λ(z) = argmin_b ½(z − b)² + λ·pen(b)`, with the
/// penalty's knots scaled by `λ`. For the lasso this is soft thresholding.
pub fn univariate_threshold(p: &PenaltySpec, z: f64, lambda: f64) -> f64 {
    p.threshold_weighted(z, lambda, lambda)
}
