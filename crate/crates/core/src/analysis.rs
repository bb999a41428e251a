//! Posterior summaries, likelihoods, distances and chain diagnostics.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::chain::ChainResult;
use crate::data::{DataMatrix, ScatterMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use crate::telescoping::{PrecisionMatrix, TelescopedMatrix};

/// Entrywise posterior mean, credible bounds and the selected edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub mean: DMatrix<f64>,
    /// Lower bound: the `(1 - ci)/2` quantile.
    pub lower: DMatrix<f64>,
    pub median: DMatrix<f64>,
    /// Upper bound: the `(1 + ci)/2` quantile.
    pub upper: DMatrix<f64>,
    /// Central credible mass; `0.5` gives the quartiles.
    pub ci: f64,
    /// Pairs `(j, k)`, `j < k`, whose interval excludes zero.
    pub edges: Vec<(usize, usize)>,
}

/// Nearest-rank empirical quantile of unsorted data (reorders `xs`).
pub fn nearest_rank_quantile(xs: &mut [f64], q: f64) -> f64 {
    let n = xs.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    let (_, v, _) = xs.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *v
}

/// Summary with the middle-50% rule.
pub fn summarize(result: &ChainResult) -> Result<PosteriorSummary> {
    let draws: Vec<&DMatrix<f64>> = result.draws.iter().map(PrecisionMatrix::matrix).collect();
    summarize_draws(&draws, 0.5)
}

/// Summary of arbitrary draws with central credible mass `ci`.
pub fn summarize_draws(draws: &[&DMatrix<f64>], ci: f64) -> Result<PosteriorSummary> {
    if draws.is_empty() {
        return Err(Error::Input("no stored draws to summarize".into()));
    }
    if !(ci > 0.0 && ci < 1.0) {
        return Err(Error::Config(format!("credible mass must lie in (0, 1), got {ci}")));
    }
    let p = draws[0].nrows();
    if draws.iter().any(|d| d.shape() != (p, p)) {
        return Err(Error::Shape("draws have inconsistent shapes".into()));
    }
    let (ql, qu) = ((1.0 - ci) / 2.0, (1.0 + ci) / 2.0);
    let mut mean = DMatrix::zeros(p, p);
    let mut lower = DMatrix::zeros(p, p);
    let mut median = DMatrix::zeros(p, p);
    let mut upper = DMatrix::zeros(p, p);
    let mut buf = vec![0.0; draws.len()];
    let mut edges = Vec::new();
    for j in 0..p {
        for i in 0..=j {
            for (b, d) in buf.iter_mut().zip(draws) {
                *b = d[(i, j)];
            }
            let m = buf.iter().sum::<f64>() / buf.len() as f64;
            let lo = nearest_rank_quantile(&mut buf, ql);
            let md = nearest_rank_quantile(&mut buf, 0.5);
            let hi = nearest_rank_quantile(&mut buf, qu);
            for (mat, v) in [(&mut mean, m), (&mut lower, lo), (&mut median, md), (&mut upper, hi)] {
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
            if i < j && (lo > 0.0 || hi < 0.0) {
                edges.push((i, j));
            }
        }
    }
    edges.sort_unstable();
    Ok(PosteriorSummary { mean, lower, median, upper, ci, edges })
}

/// `‖a - b‖_F`.
pub fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
}

/// `(n/2) log|Θ| - tr(SΘ)/2`; the `-(np/2) log 2π` constant is dropped.
pub fn log_likelihood_full(theta: &PrecisionMatrix, s: &ScatterMatrix, n: usize) -> Result<f64> {
    if theta.dim() != s.p() {
        return Err(Error::Shape(format!("Θ is {0}x{0}, S is {1}x{1}", theta.dim(), s.p())));
    }
    let l = linalg::cholesky(theta.matrix())
        .map_err(|k| Error::Domain(format!("Θ is not positive definite (pivot {k})")))?;
    let tr = s.matrix().component_mul(theta.matrix()).sum();
    Ok(0.5 * n as f64 * linalg::log_det_from_cholesky(&l) - 0.5 * tr)
}

/// Sum of the partial-regression log-likelihoods
/// `(n/2) log θ̃_jj - (θ̃_jj/2) ‖y_j + y_{<j} θ̃_•j / θ̃_jj‖²`, same constants dropped.
pub fn log_likelihood_telescoped(ttheta: &TelescopedMatrix, y: &DataMatrix) -> Result<f64> {
    let p = ttheta.dim();
    if p != y.p() {
        return Err(Error::Shape(format!("Θ̃ is {p}x{p}, data has {} columns", y.p())));
    }
    let n = y.n();
    let mut total = 0.0;
    let mut r = vec![0.0; n];
    for j in 0..p {
        let t = ttheta.pivot(j);
        r.copy_from_slice(y.column(j));
        for (k, &c) in ttheta.column_above(j).iter().enumerate() {
            let f = c / t;
            for (ri, yk) in r.iter_mut().zip(y.column(k)) {
                *ri += f * yk;
            }
        }
        total += 0.5 * n as f64 * t.ln() - 0.5 * t * r.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total)
}

/// Mixing summary of the log-likelihood trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDiagnostics {
    pub loglik: Vec<f64>,
    /// `None` when the trace is constant or shorter than three points.
    pub lag1_autocorrelation: Option<f64>,
    /// `M (1 - ρ₁) / (1 + ρ₁)`.
    pub effective_sample_size: Option<f64>,
    pub degenerate: bool,
}

pub fn lag1_autocorrelation(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let var: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    if !(var > 0.0) || !var.is_finite() {
        return None;
    }
    let cov: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    Some(cov / var)
}

pub fn trace_diagnostics(result: &ChainResult) -> TraceDiagnostics {
    let rho = lag1_autocorrelation(&result.loglik_trace);
    let m = result.loglik_trace.len() as f64;
    TraceDiagnostics {
        loglik: result.loglik_trace.clone(),
        lag1_autocorrelation: rho,
        effective_sample_size: rho.map(|r| m * (1.0 - r) / (1.0 + r)),
        degenerate: rho.is_none(),
    }
}

/// Writes `iteration,loglik` rows (iterations counted from 1).
pub fn write_trace_csv<W: Write>(trace: &[f64], mut w: W) -> io::Result<()> {
    writeln!(w, "iteration,loglik")?;
    for (i, v) in trace.iter().enumerate() {
        writeln!(w, "{},{:.16e}", i + 1, v)?;
    }
    Ok(())
}

/// Batch-means Monte Carlo standard error of the mean of a chain.
pub fn monte_carlo_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    let b = (n as f64).sqrt().floor().max(1.0) as usize;
    let a = n / b;
    if a < 2 {
        return f64::NAN;
    }
    let used = a * b;
    let mean = xs[..used].iter().sum::<f64>() / used as f64;
    let ss: f64 = xs[..used]
        .chunks_exact(b)
        .map(|c| (c.iter().sum::<f64>() / b as f64 - mean).powi(2))
        .sum();
    (b as f64 * ss / (a as f64 - 1.0) / used as f64).sqrt()
}
