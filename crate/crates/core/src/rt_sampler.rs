//! The reverse-telescoping Gibbs sampler.
//!
//! Each sweep visits columns `j = p-1, …, 0` (zero-based). Column `j` of
//! `Θ̃` is drawn given the data and the later columns only: a GIG pivot
//! `θ̃_jj`, then `θ̃_•j` through [`fast_gaussian`]. The accumulator
//! `C` collects `θ̃_•j θ̃_•jᵀ / θ̃_jj` so that column `j` of `Θ` is
//! `θ̃_j + C_•j` as soon as column `j` is drawn.
//!
//!
//! These block conditionals leave out how the prior on earlier columns
//! depends on `θ̃_j` through `C`, so the chain is not an exact Gibbs sampler
//! for the element-wise posterior. The bias vanishes as `n/p` grows; with
//! `n < p` the accumulator typically overflows within a few sweeps and the
//! run stops with [`Error::Numeric`].
//!
//! [`fast_gaussian`]: crate::rand_dist::fast_gaussian

use nalgebra::{DMatrix, DVector};

use crate::chain::{drive, ChainConfig, ChainResult, Sweep};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::priors::{PriorSpec, ShrinkageState};
use crate::rand_dist::{fast_gaussian_view, sample_gamma, sample_gig, GigParams, RngStream};
use crate::telescoping::{
    forward_telescope_matrix, rank_one_upper, PrecisionMatrix, TelescopedMatrix,
};

/// Starting point `Θ₀ = (yᵀy + 0.01 I)⁻¹`, its telescoped form, unit scales.
pub fn rt_init(y: &DataMatrix) -> Result<(PrecisionMatrix, TelescopedMatrix, ShrinkageState)> {
    let p = y.p();
    let mut s = y.scatter().matrix().clone();
    for j in 0..p {
        s[(j, j)] += 0.01;
    }
    let theta = linalg::spd_inverse(&s)
        .map_err(|k| Error::Numeric(format!("yᵀy + 0.01 I is not positive definite (pivot {k})")))?;
    let ttheta = forward_telescope_matrix(&theta)?;
    Ok((
        PrecisionMatrix::from_matrix_unchecked(theta),
        TelescopedMatrix::from_matrix_unchecked(ttheta),
        ShrinkageState::initial(p),
    ))
}

fn diag_from_chi(j: usize, n: usize, chi: f64, psi: f64, rng: &mut RngStream) -> Result<f64> {
    let shape = n as f64 / 2.0 + 1.0;
    if !(psi > 0.0) {
        return Err(Error::Parameter(format!(
            "column {j} of the data has zero norm; its pivot conditional is improper"
        )));
    }
    if j == 0 {
        sample_gamma(shape, psi / 2.0, rng)
    } else {
        sample_gig(GigParams { lambda: shape, chi, psi }, rng)
    }
}

/// Draws `θ̃_jj`: `Gamma(n/2+1, rate y₀ᵀy₀/2)` for `j = 0`, otherwise
/// `GIG(n/2+1, χ = ‖y_{<j} θ̃_•j‖², ψ = y_jᵀy_j)`.
pub fn rt_sample_diag(j: usize, y: &DataMatrix, ttheta_col: &[f64], rng: &mut RngStream) -> Result<f64> {
    if j >= y.p() || ttheta_col.len() != j {
        return Err(Error::Shape(format!(
            "column {j} of {} needs {j} telescoped entries, got {}",
            y.p(),
            ttheta_col.len()
        )));
    }
    let yj = y.column(j);
    let psi: f64 = yj.iter().map(|v| v * v).sum();
    let chi = if j == 0 {
        0.0
    } else {
        let x = y.matrix().columns(0, j);
        (x * DVector::from_column_slice(ttheta_col)).norm_squared()
    };
    diag_from_chi(j, y.n(), chi, psi, rng)
}

/// Draws `θ̃_•j = √θ̃_jj β - γ_•j` with `β` from the Gaussian full conditional.
pub fn rt_sample_offdiag(
    j: usize,
    y: &DataMatrix,
    ttheta_jj: f64,
    gamma_col: &[f64],
    lambda2_col: &[f64],
    tau2: f64,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    if j == 0 || j >= y.p() || gamma_col.len() != j || lambda2_col.len() != j {
        return Err(Error::Shape(format!(
            "off-diagonal block of column {j} needs {j} entries, got gamma {} and lambda2 {}",
            gamma_col.len(),
            lambda2_col.len()
        )));
    }
    if !(ttheta_jj > 0.0) || !(tau2 > 0.0) {
        return Err(Error::Parameter(format!(
            "pivot and tau2 must be positive, got {ttheta_jj} and {tau2}"
        )));
    }
    let n = y.n();
    let sq = ttheta_jj.sqrt();
    let x = y.matrix().columns(0, j);
    let g = DVector::from_column_slice(gamma_col);
    // With X = -y_{<j} the law of FastGaussian(X, z) equals that of
    // FastGaussian(y_{<j}, -z).
    let mut neg_z = x * &g;
    neg_z /= sq;
    for (v, yv) in neg_z.iter_mut().zip(y.column(j)) {
        *v -= yv * sq;
    }
    debug_assert_eq!(neg_z.len(), n);
    let d: Vec<f64> = lambda2_col.iter().map(|l| tau2 * l / ttheta_jj).collect();
    let beta = fast_gaussian_view(x, neg_z.as_slice(), &d, rng)?;
    Ok(beta * sq - g)
}

struct RtChain<'a> {
    y: &'a DataMatrix,
    theta: DMatrix<f64>,
    ttheta: DMatrix<f64>,
    c: DMatrix<f64>,
    state: ShrinkageState,
    /// Column `j` holds `y_{<j} θ̃_•j` for the current `Θ̃`.
    fitted: DMatrix<f64>,
    col_norms: Vec<f64>,
    rows: Vec<usize>,
}

impl<'a> RtChain<'a> {
    fn new(y: &'a DataMatrix) -> Result<Self> {
        let (theta, ttheta, state) = rt_init(y)?;
        let (n, p) = (y.n(), y.p());
        let ttheta = ttheta.into_inner();
        let mut fitted = DMatrix::zeros(n, p);
        for j in 1..p {
            let col = ttheta.column(j).rows(0, j).into_owned();
            fitted.column_mut(j).gemv(1.0, &y.matrix().columns(0, j), &col, 0.0);
        }
        let col_norms = (0..p).map(|j| y.column(j).iter().map(|v| v * v).sum()).collect();
        Ok(Self {
            y,
            theta: theta.into_inner(),
            ttheta,
            c: DMatrix::zeros(p, p),
            state,
            fitted,
            col_norms,
            rows: (0..p).collect(),
        })
    }
}

impl Sweep for RtChain<'_> {
    fn sweep(&mut self, prior: &PriorSpec, rng: &mut RngStream) -> Result<()> {
        let (n, p) = (self.y.n(), self.y.p());
        self.c.fill(0.0);
        for j in (1..p).rev() {
            let chi = self.fitted.column(j).norm_squared();
            let t = diag_from_chi(j, n, chi, self.col_norms[j], rng)?;
            let gamma: Vec<f64> = self.c.as_slice()[j * p..j * p + j].to_vec();
            let gamma_jj = self.c[(j, j)];
            let lambda2: Vec<f64> = self.state.lambda2.as_slice()[j * p..j * p + j].to_vec();
            let col = rt_sample_offdiag(j, self.y, t, &gamma, &lambda2, self.state.tau2, rng)?;
            // Stop before the accumulator overflows.
            let size = col.amax().max(gamma.iter().fold(0.0, |a: f64, g| a.max(g.abs())));
            if !(size * size / t).is_finite() {
                return Err(Error::Numeric(format!(
                    "reverse-telescoping sweep diverged at column {j}: telescoped entries reached {size:.3e}"
                )));
            }
            rank_one_upper(&mut self.c, col.as_slice(), t, 1.0);
            for k in 0..j {
                self.ttheta[(k, j)] = col[k];
                self.ttheta[(j, k)] = col[k];
                let v = col[k] + gamma[k];
                self.theta[(k, j)] = v;
                self.theta[(j, k)] = v;
            }
            self.ttheta[(j, j)] = t;
            self.theta[(j, j)] = t + gamma_jj;
            self.fitted
                .column_mut(j)
                .gemv(1.0, &self.y.matrix().columns(0, j), &col, 0.0);
            prior.update_local(j, &self.rows[..j], &self.theta, &mut self.state, rng)?;
        }
        let t = diag_from_chi(0, n, 0.0, self.col_norms[0], rng)?;
        self.ttheta[(0, 0)] = t;
        self.theta[(0, 0)] = t + self.c[(0, 0)];
        prior.update_global(&self.theta, &mut self.state, rng)
    }

    fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    fn loglik(&self) -> Result<f64> {
        let n = self.y.n() as f64;
        let mut total = 0.0;
        for j in 0..self.y.p() {
            let t = self.ttheta[(j, j)];
            let r: f64 = self
                .y
                .column(j)
                .iter()
                .zip(self.fitted.column(j).iter())
                .map(|(a, b)| (a + b / t).powi(2))
                .sum();
            total += 0.5 * n * t.ln() - 0.5 * t * r;
        }
        Ok(total)
    }

    fn into_final(self) -> (DMatrix<f64>, ShrinkageState) {
        (self.theta, self.state)
    }
}

/// Runs the reverse-telescoping sampler on data `y`.
pub fn rt_run(y: &DataMatrix, prior: &PriorSpec, cfg: &ChainConfig) -> Result<ChainResult> {
    drive(RtChain::new(y)?, prior, cfg)
}
