//! The column-wise cyclical Gibbs sampler driven by the scatter matrix.
//!
//! For each column `j` the sampler inverts `Θ_{-j,-j}` from scratch, so a
//! sweep costs `O(p⁴)`. It serves as the reference the
//! reverse-telescoping sampler is checked and timed against.

use nalgebra::{DMatrix, DVector};

use crate::chain::{drive, ChainConfig, ChainResult, Sweep};
use crate::data::ScatterMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::priors::{PriorSpec, ShrinkageState};
use crate::rand_dist::{sample_gamma, RngStream};

/// Splits `m` into `(m_{-j,-j}, m_{-j,j}, m_jj)`, keeping the original order
/// of the remaining indices.
pub fn partition_views(m: &DMatrix<f64>, j: usize) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
    let p = m.nrows();
    if m.ncols() != p {
        return Err(Error::Shape(format!("matrix is {}x{}", p, m.ncols())));
    }
    if j >= p {
        return Err(Error::Shape(format!("index {j} out of range for dimension {p}")));
    }
    let idx: Vec<usize> = (0..p).filter(|&k| k != j).collect();
    let sub = DMatrix::from_fn(p - 1, p - 1, |a, b| m[(idx[a], idx[b])]);
    let col = DVector::from_fn(p - 1, |a, _| m[(idx[a], j)]);
    Ok((sub, col, m[(j, j)]))
}

struct CyclicalChain<'a> {
    s: &'a DMatrix<f64>,
    n: usize,
    theta: DMatrix<f64>,
    state: ShrinkageState,
}

impl Sweep for CyclicalChain<'_> {
    fn sweep(&mut self, prior: &PriorSpec, rng: &mut RngStream) -> Result<()> {
        let p = self.theta.nrows();
        let shape = self.n as f64 / 2.0 + 1.0;
        for j in 0..p {
            let rows: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let s_jj = self.s[(j, j)];
            if p == 1 {
                self.theta[(0, 0)] = sample_gamma(shape, s_jj / 2.0, rng)?;
                prior.update_local(j, &rows, &self.theta, &mut self.state, rng)?;
                continue;
            }
            let (mut w, _, _) = partition_views(&self.theta, j)?;
            linalg::cholesky_in_place(&mut w, linalg::PIVOT_TOL).map_err(|k| {
                Error::Numeric(format!(
                    "Θ without row/column {j} lost positive definiteness at pivot {k}"
                ))
            })?;
            linalg::tri_lower_inverse_in_place(&mut w);
            let sub_inv = linalg::lower_gram(&w);

            let pivot = sample_gamma(shape, s_jj / 2.0, rng)?;

            let mut a = &sub_inv * s_jj;
            for (i, &k) in rows.iter().enumerate() {
                a[(i, i)] += 1.0 / (self.state.tau2 * self.state.lambda2[(k, j)]);
            }
            linalg::cholesky_in_place(&mut a, linalg::PIVOT_TOL).map_err(|k| {
                Error::Numeric(format!("column {j} conditional precision failed at pivot {k}"))
            })?;
            let mut mean: Vec<f64> = rows.iter().map(|&k| -self.s[(k, j)]).collect();
            linalg::solve_lower_in_place(&a, &mut mean);
            linalg::solve_lower_transpose_in_place(&a, &mut mean);
            let mut noise: Vec<f64> = (0..p - 1).map(|_| rng.standard_normal()).collect();
            linalg::solve_lower_transpose_in_place(&a, &mut noise);
            let col = DVector::from_iterator(p - 1, mean.iter().zip(&noise).map(|(m, e)| m + e));

            let quad = (&sub_inv * &col).dot(&col);
            for (i, &k) in rows.iter().enumerate() {
                self.theta[(k, j)] = col[i];
                self.theta[(j, k)] = col[i];
            }
            self.theta[(j, j)] = pivot + quad;
            prior.update_local(j, &rows, &self.theta, &mut self.state, rng)?;
        }
        prior.update_global(&self.theta, &mut self.state, rng)
    }

    fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    fn loglik(&self) -> Result<f64> {
        let l = linalg::cholesky(&self.theta)
            .map_err(|k| Error::Numeric(format!("Θ is not positive definite (pivot {k})")))?;
        let tr = self.s.component_mul(&self.theta).sum();
        Ok(0.5 * self.n as f64 * linalg::log_det_from_cholesky(&l) - 0.5 * tr)
    }

    fn into_final(self) -> (DMatrix<f64>, ShrinkageState) {
        (self.theta, self.state)
    }
}

/// Runs the cyclical sampler from `Θ = I` on scatter matrix `s` of `n` samples.
pub fn cyclical_run(s: &ScatterMatrix, n: usize, prior: &PriorSpec, cfg: &ChainConfig) -> Result<ChainResult> {
    if n == 0 {
        return Err(Error::Input("sample size must be at least 1".into()));
    }
    let p = s.p();
    let chain = CyclicalChain {
        s: s.matrix(),
        n,
        theta: DMatrix::identity(p, p),
        state: ShrinkageState::initial(p),
    };
    drive(chain, prior, cfg)
}
