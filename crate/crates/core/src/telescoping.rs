//! The telescoping block decomposition `Θ ↦ Θ̃` and its inverse.
//!
//! Forward telescoping repeatedly replaces the leading `j×j` block by its
//! Schur complement with respect to the pivot in column `j+1`, reading off
//! column `j` as it goes. Reverse telescoping adds the same rank-one terms
//! back. Equivalently `Θ = Σ_j θ̃_jj u_j u_jᵀ` with
//! `u_j = (θ̃_•j / θ̃_jj, 1, 0, …)`, so any `Θ̃` with a positive diagonal
//! maps to a positive-definite `Θ`.
//!
//! Indices in this module are zero-based: column `j` has `j` entries above
//! its diagonal.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, symmetrize_from_upper, PIVOT_TOL};

fn symmetry_tolerance(m: &DMatrix<f64>) -> f64 {
    1e-12 * m.amax().max(1.0)
}

fn check_square_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::Shape(format!("{what} must have dimension at least 1")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{what} has non-finite entries")));
    }
    let asym = linalg::max_asymmetry(m);
    if asym > symmetry_tolerance(m) {
        return Err(Error::Shape(format!("{what} is not symmetric (max |a_ij - a_ji| = {asym:e})")));
    }
    Ok(())
}

/// A symmetric positive-definite precision matrix `Θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix(DMatrix<f64>);

impl PrecisionMatrix {
    /// Validates symmetry and positive definiteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !cholesky_pd_check(&m)? {
            return Err(Error::Domain("matrix is not positive definite".into()));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is symmetric and positive definite by construction.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// The reparameterised matrix `Θ̃`, stored symmetric with a positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TelescopedMatrix(DMatrix<f64>);

impl TelescopedMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square_symmetric(&m, "telescoped matrix")?;
        if let Some(j) = (0..m.nrows()).find(|&j| !(m[(j, j)] > PIVOT_TOL)) {
            return Err(Error::Domain(format!(
                "telescoped pivot {j} is {} (must exceed {PIVOT_TOL:e})",
                m[(j, j)]
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `θ̃_jj`.
    pub fn pivot(&self, j: usize) -> f64 {
        self.0[(j, j)]
    }

    /// `θ̃_•j`, the `j` entries above the diagonal of column `j`.
    pub fn column_above(&self, j: usize) -> &[f64] {
        let p = self.dim();
        &self.0.as_slice()[j * p..j * p + j]
    }
}

/// Scratch `p×p` matrix used as the γ accumulator `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceMatrix(DMatrix<f64>);

impl WorkspaceMatrix {
    pub fn zeros(p: usize) -> Self {
        Self(DMatrix::zeros(p, p))
    }

    pub fn reset(&mut self) {
        self.0.fill(0.0);
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `γ_j = (γ_•j, γ_jj)`: rows `0..=j` of column `j`.
    pub fn gamma(&self, j: usize) -> &[f64] {
        let p = self.dim();
        &self.0.as_slice()[j * p..j * p + j + 1]
    }
}

/// True iff `m` admits a Cholesky factorization with every pivot above `1e-12`.
pub fn cholesky_pd_check(m: &DMatrix<f64>) -> Result<bool> {
    check_square_symmetric(m, "matrix")?;
    let mut l = m.clone();
    Ok(linalg::cholesky_in_place(&mut l, PIVOT_TOL).is_ok())
}

/// Rank-one update of the upper triangle of the leading `j×j` block:
/// `w[r, c] += sign · col[r] col[c] / pivot` for `r ≤ c < j`.
pub(crate) fn rank_one_upper(w: &mut DMatrix<f64>, col: &[f64], pivot: f64, sign: f64) {
    let p = w.nrows();
    let d = w.as_mut_slice();
    for c in 0..col.len() {
        let f = sign * col[c] / pivot;
        if f != 0.0 {
            for (dst, src) in d[c * p..c * p + c + 1].iter_mut().zip(&col[..=c]) {
                *dst += f * src;
            }
        }
    }
}

/// Forward telescoping of a raw symmetric matrix; errors on a non-positive pivot.
pub(crate) fn forward_telescope_matrix(theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = theta.nrows();
    let mut w = theta.clone();
    let mut col = Vec::with_capacity(p);
    for j in (0..p).rev() {
        let piv = w[(j, j)];
        if !(piv > PIVOT_TOL) {
            return Err(Error::Domain(format!(
                "non-positive Schur pivot {piv:e} at column {j}; input is not positive definite"
            )));
        }
        col.clear();
        col.extend_from_slice(&w.as_slice()[j * p..j * p + j]);
        rank_one_upper(&mut w, &col, piv, -1.0);
    }
    symmetrize_from_upper(&mut w);
    Ok(w)
}

/// Maps `Θ` to `Θ̃`.
pub fn forward_telescope(theta: &PrecisionMatrix) -> Result<TelescopedMatrix> {
    forward_telescope_matrix(theta.matrix()).map(TelescopedMatrix)
}

/// Maps `Θ̃` back to `Θ`.
pub fn reverse_telescope(ttheta: &TelescopedMatrix) -> Result<PrecisionMatrix> {
    let m = ttheta.matrix();
    let p = m.nrows();
    if let Some(j) = (0..p).find(|&j| !(m[(j, j)] > PIVOT_TOL)) {
        return Err(Error::Domain(format!("telescoped pivot {j} is {:e}", m[(j, j)])));
    }
    let mut w = m.clone();
    let mut col = Vec::with_capacity(p);
    for j in 1..p {
        col.clear();
        col.extend_from_slice(&w.as_slice()[j * p..j * p + j]);
        let piv = w[(j, j)];
        rank_one_upper(&mut w, &col, piv, 1.0);
    }
    symmetrize_from_upper(&mut w);
    Ok(PrecisionMatrix::from_matrix_unchecked(w))
}

/// Adds `θ̃_•j θ̃_•jᵀ / θ̃_jj` to the leading `j×j` block of `c`.
///
/// After running this for `j = p-1, …, 1` on a zeroed accumulator,
/// column `j` of `c` holds `γ_j` and `Θ = Θ̃ + c`.
pub fn gamma_accumulator_update(
    c: &mut WorkspaceMatrix,
    ttheta_col: &[f64],
    ttheta_jj: f64,
    j: usize,
) -> Result<()> {
    let p = c.dim();
    if j >= p || ttheta_col.len() != j {
        return Err(Error::Shape(format!(
            "column {j} of a {p}x{p} accumulator needs {j} entries, got {}",
            ttheta_col.len()
        )));
    }
    if !(ttheta_jj > 0.0) {
        return Err(Error::Domain(format!("pivot must be positive, got {ttheta_jj}")));
    }
    for b in 0..j {
        let f = ttheta_col[b] / ttheta_jj;
        if f != 0.0 {
            for a in 0..j {
                c.0[(a, b)] += f * ttheta_col[a];
            }
        }
    }
    Ok(())
}
