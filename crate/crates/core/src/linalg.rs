//! Dense linear-algebra kernels.
//!
//! Matrices are plain `nalgebra` dense matrices. The SVD is a one-sided
//! (Hestenes) Jacobi iteration, which delivers singular vectors that are
//! orthonormal to working precision and small singular values with high
//! relative accuracy.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PufferError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvdMode {
    /// `u` is n×k, `v` is p×k with k = min(n, p).
    Skinny,
    /// `u` is n×n, `v` is p×p; `d` still holds the min(n, p) diagonal entries.
    Full,
}

/// Factors of `X = U · diag(d) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub d: Vec<f64>,
    pub v: Matrix,
    pub mode: SvdMode,
    pub rank_tol: f64,
}

impl SvdFactors {
    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    /// Smallest singular value (zero for an empty spectrum).
    pub fn min_singular(&self) -> f64 {
        self.d.last().copied().unwrap_or(0.0)
    }

    pub fn max_singular(&self) -> f64 {
        self.d.first().copied().unwrap_or(0.0)
    }

    /// `U[:, :k] · diag(d) · V[:, :k]ᵀ`
    pub fn reconstruct(&self) -> Matrix {
        let k = self.d.len();
        let mut us = self.u.columns(0, k).into_owned();
        for (j, &dj) in self.d.iter().enumerate() {
            us.column_mut(j).scale_mut(dj);
        }
        us * self.v.columns(0, k).transpose()
    }
}

/// Checks that a matrix is nonempty with finite entries.
pub fn validate_matrix(x: &Matrix, what: &str) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(PufferError::Input(format!("{what} is empty ({}x{})", x.nrows(), x.ncols())));
    }
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        let (i, j) = (pos % x.nrows(), pos / x.nrows());
        return Err(PufferError::Input(format!("{what} has a non-finite entry at ({i}, {j})")));
    }
    Ok(())
}

pub fn validate_vector(v: &Vector, len: usize, what: &str) -> Result<()> {
    if v.len() != len {
        return Err(PufferError::Input(format!("{what} has length {}, expected {len}", v.len())));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(PufferError::Input(format!("{what} has a non-finite entry at {i}")));
    }
    Ok(())
}

/// Singular value decomposition.
pub fn svd(x: &Matrix, mode: SvdMode) -> Result<SvdFactors> {
    validate_matrix(x, "matrix")?;
    let (n, p) = x.shape();
    // Jacobi works on the tall orientation; a wide matrix is handled through
    // its transpose with the roles of U and V swapped.
    let tall = n >= p;
    let work = if tall { x.clone() } else { x.transpose() };
    let (left, d, right) = one_sided_jacobi(work)?;
    let (mut u, mut v) = if tall { (left, right) } else { (right, left) };

    let d_max = d.first().copied().unwrap_or(0.0);
    let rank_tol = n.max(p) as f64 * f64::EPSILON * d_max;

    if mode == SvdMode::Full {
        u = complete_basis(&u);
        v = complete_basis(&v);
    }
    Ok(SvdFactors { u, d, v, mode, rank_tol })
}

/// One-sided Jacobi on a tall `m×k` matrix. Returns `(U (m×k), d, V (k×k))`
/// with `d` sorted nonincreasing.
fn one_sided_jacobi(mut a: Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (m, k) = a.shape();
    let mut v = Matrix::identity(k, k);
    let mut converged = k < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..k - 1 {
            for j in i + 1..k {
                let (alpha, beta, gamma) = {
                    let ci = a.column(i);
                    let cj = a.column(j);
                    (ci.norm_squared(), cj.norm_squared(), ci.dot(&cj))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(PufferError::Numerical(format!(
            "Jacobi SVD did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let norms: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    if norms.iter().any(|x| !x.is_finite()) {
        return Err(PufferError::Numerical("Jacobi SVD produced non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));

    let d: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let d_max = d.first().copied().unwrap_or(0.0);
    let tol = m.max(k) as f64 * f64::EPSILON * d_max;

    let mut u = Matrix::zeros(m, k);
    let mut v_sorted = Matrix::zeros(k, k);
    let mut rank = 0;
    for (dst, &src) in order.iter().enumerate() {
        v_sorted.set_column(dst, &v.column(src));
        if d[dst] > tol {
            u.set_column(dst, &(a.column(src) / d[dst]));
            rank += 1;
        }
    }
    if rank < k {
        // Left vectors for null singular values are arbitrary; fill them with
        // an orthonormal completion of the determined ones.
        let completed = complete_basis(&u.columns(0, rank).into_owned());
        for j in rank..k {
            u.set_column(j, &completed.column(j));
        }
    }
    Ok((u, d, v_sorted))
}

fn rotate_columns(a: &mut Matrix, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..a.nrows() {
        let ai = a[(r, i)];
        let aj = a[(r, j)];
        a[(r, i)] = c * ai - s * aj;
        a[(r, j)] = s * ai + c * aj;
    }
}

/// Extends the orthonormal columns of `q` (m×r) to an orthonormal basis of
/// R^m, returning an m×m matrix whose leading r columns equal `q`.
pub fn complete_basis(q: &Matrix) -> Matrix {
    let (m, r) = q.shape();
    let mut basis = Matrix::zeros(m, m);
    basis.columns_mut(0, r).copy_from(q);
    let mut filled = r;
    while filled < m {
        // Pick the coordinate axis with the largest residual after projection.
        let mut best: Option<(f64, Vector)> = None;
        for e in 0..m {
            let mut w = Vector::zeros(m);
            w[e] = 1.0;
            for _ in 0..2 {
                for c in 0..filled {
                    let col = basis.column(c);
                    let proj = col.dot(&w);
                    w.axpy(-proj, &col, 1.0);
                }
            }
            let norm = w.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, w));
            }
        }
        let (norm, w) = best.expect("m > filled implies at least one candidate");
        basis.set_column(filled, &(w / norm));
        filled += 1;
    }
    basis
}

/// Number of singular values above the factors' rank tolerance.
pub fn rank_of(f: &SvdFactors) -> usize {
    f.d.iter().filter(|&&di| di > f.rank_tol).count()
}

/// Moore–Penrose pseudoinverse of the Gram matrix, `V · diag(d⁻²) · Vᵀ` with
/// the inverse taken only over singular values above the rank tolerance.
pub fn pseudoinverse_gram(x: &Matrix) -> Result<Matrix> {
    let f = svd(x, SvdMode::Skinny)?;
    let p = x.ncols();
    let mut scaled = Matrix::zeros(p, f.d.len());
    for (j, &dj) in f.d.iter().enumerate() {
        if dj > f.rank_tol {
            scaled.set_column(j, &(f.v.column(j) / (dj * dj)));
        }
    }
    Ok(scaled * f.v.transpose())
}

/// Diagonal of `(XᵀX)⁻¹`, which requires `n > p` and full column rank.
pub fn gram_inverse_diagonal(x: &Matrix) -> Result<Vector> {
    let f = svd(x, SvdMode::Skinny)?;
    gram_inverse_diagonal_from(&f)
}

pub(crate) fn gram_inverse_diagonal_from(f: &SvdFactors) -> Result<Vector> {
    require_full_column_rank(f)?;
    let p = f.ncols();
    Ok(Vector::from_fn(p, |j, _| {
        f.d.iter().enumerate().map(|(k, &dk)| (f.v[(j, k)] / dk).powi(2)).sum()
    }))
}

/// Errors unless `n > p` and all `p` singular values clear the rank tolerance.
pub(crate) fn require_full_column_rank(f: &SvdFactors) -> Result<()> {
    let (n, p) = (f.nrows(), f.ncols());
    if n <= p {
        return Err(PufferError::Rank(format!("requires n>p, got n={n}, p={p}")));
    }
    let rank = rank_of(f);
    if rank < p {
        return Err(PufferError::Rank(format!(
            "design has rank {rank} < p={p}; singular value d[{rank}]={:e} is at or below tolerance {:e}",
            f.d[rank], f.rank_tol
        )));
    }
    Ok(())
}

/// Errors unless `p ≥ n` and all `n` singular values clear the rank tolerance.
pub(crate) fn require_full_row_rank(f: &SvdFactors) -> Result<()> {
    let (n, p) = (f.nrows(), f.ncols());
    if p < n {
        return Err(PufferError::Input(format!("requires p>=n, got n={n}, p={p}")));
    }
    let rank = rank_of(f);
    if rank < n {
        return Err(PufferError::Rank(format!(
            "design has row rank {rank} < n={n}; singular value d[{rank}]={:e} is at or below tolerance {:e}",
            f.d[rank], f.rank_tol
        )));
    }
    Ok(())
}

pub fn frobenius(x: &Matrix) -> f64 {
    x.norm()
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
