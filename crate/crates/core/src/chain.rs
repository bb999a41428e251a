//! Chain configuration, results, and the sweep loop shared by both samplers.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::priors::{PriorSpec, ShrinkageState};
use crate::rand_dist::RngStream;
use crate::telescoping::{cholesky_pd_check, PrecisionMatrix};

/// Run-length, storage and reproducibility settings of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// Total sweeps `M`, burn-in included.
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Stream id of the chain's generator under `seed`.
    pub stream: u64,
    /// Keep every `thin`-th post-burn-in draw.
    pub thin: usize,
    /// Record the per-sweep log-likelihood and wall time.
    pub store_traces: bool,
    /// Keep the kept draws themselves (the posterior mean is always kept).
    pub store_draws: bool,
    /// Cholesky-check every `k`-th kept draw; `0` disables the check.
    pub pd_check_every: usize,
    /// Abort once the accumulated sweep time exceeds this many seconds.
    pub time_limit_seconds: Option<f64>,
}

impl ChainConfig {
    pub fn new(iterations: usize, burnin: usize, seed: u64) -> Self {
        Self {
            iterations,
            burnin,
            seed,
            stream: 0,
            thin: 1,
            store_traces: true,
            store_draws: true,
            pd_check_every: if cfg!(debug_assertions) { 1 } else { 50 },
            time_limit_seconds: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.burnin >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burnin, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if let Some(t) = self.time_limit_seconds {
            if !(t > 0.0) {
                return Err(Error::Config(format!("time limit must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn kept_draws(&self) -> usize {
        (self.iterations - self.burnin) / self.thin
    }
}

/// Output of a sampler run.
#[derive(Debug, Clone)]
pub struct ChainResult {
    /// Kept draws (empty when `store_draws` is off).
    pub draws: Vec<PrecisionMatrix>,
    /// Entrywise mean of the kept draws.
    pub posterior_mean: DMatrix<f64>,
    pub kept: usize,
    /// Log-likelihood `(n/2) log|Θ| - tr(SΘ)/2` after every sweep.
    pub loglik_trace: Vec<f64>,
    pub per_iter_seconds: Vec<f64>,
    /// Wall time of all sweeps, excluding storage and checks.
    pub total_seconds: f64,
    pub iterations: usize,
    pub final_theta: PrecisionMatrix,
    pub final_state: ShrinkageState,
    /// Number of kept draws that passed the Cholesky check.
    pub pd_checks: usize,
}

/// One Gibbs sweep over all columns plus the global update.
pub(crate) trait Sweep {
    fn sweep(&mut self, prior: &PriorSpec, rng: &mut RngStream) -> Result<()>;
    fn theta(&self) -> &DMatrix<f64>;
    fn loglik(&self) -> Result<f64>;
    fn into_final(self) -> (DMatrix<f64>, ShrinkageState);
}

pub(crate) fn drive<S: Sweep>(mut sampler: S, prior: &PriorSpec, cfg: &ChainConfig) -> Result<ChainResult> {
    cfg.validate()?;
    let mut rng = RngStream::new(cfg.seed, cfg.stream);
    let p = sampler.theta().nrows();
    let mut mean = DMatrix::<f64>::zeros(p, p);
    let mut draws = Vec::with_capacity(if cfg.store_draws { cfg.kept_draws() } else { 0 });
    let mut loglik = Vec::with_capacity(if cfg.store_traces { cfg.iterations } else { 0 });
    let mut times = Vec::with_capacity(loglik.capacity());
    let (mut total, mut kept, mut checks) = (0.0, 0usize, 0usize);
    for m in 1..=cfg.iterations {
        let t0 = Instant::now();
        sampler.sweep(prior, &mut rng)?;
        let dt = t0.elapsed().as_secs_f64();
        total += dt;
        if cfg.store_traces {
            times.push(dt);
            loglik.push(sampler.loglik()?);
        }
        if m > cfg.burnin && (m - cfg.burnin).is_multiple_of(cfg.thin) {
            let theta = sampler.theta();
            if cfg.pd_check_every > 0 && kept % cfg.pd_check_every == 0 {
                if !cholesky_pd_check(theta)? {
                    return Err(Error::Numeric(format!(
                        "kept draw {} (iteration {m}) is not positive definite",
                        kept + 1
                    )));
                }
                checks += 1;
            }
            kept += 1;
            mean += theta;
            if cfg.store_draws {
                draws.push(PrecisionMatrix::from_matrix_unchecked(theta.clone()));
            }
        }
        if let Some(limit) = cfg.time_limit_seconds {
            if total > limit {
                return Err(Error::TimeLimit { limit_seconds: limit, completed: m });
            }
        }
    }
    if kept > 0 {
        mean /= kept as f64;
    }
    let (theta, state) = sampler.into_final();
    Ok(ChainResult {
        draws,
        posterior_mean: mean,
        kept,
        loglik_trace: loglik,
        per_iter_seconds: times,
        total_seconds: total,
        iterations: cfg.iterations,
        final_theta: PrecisionMatrix::from_matrix_unchecked(theta),
        final_state: state,
        pd_checks: checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(10, 5, 1).validate().is_ok());
        assert!(ChainConfig::new(10, 10, 1).validate().is_err());
        assert!(ChainConfig::new(0, 0, 1).validate().is_err());
        let mut c = ChainConfig::new(10, 2, 1);
        c.thin = 0;
        assert!(c.validate().is_err());
        c.thin = 3;
        assert_eq!(c.kept_draws(), 2);
    }
}
