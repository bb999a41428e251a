//! Element-wise shrinkage priors `θ_jk | λ_jk, τ ~ N(0, λ²_jk τ²)`.
//!
//! Local and global scale updates are shared verbatim by both samplers
//! through [`PriorSpec`]. The horseshoe uses the inverse-gamma auxiliary
//! representation of the half-Cauchy: `λ² | ν ~ IG(1/2, 1/ν)`,
//! `ν ~ IG(1/2, 1)`, and likewise `τ² | ξ`, `ξ`. The graphical lasso mixes
//! with `λ² ~ Exp(1)`, whose full conditional is GIG.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rand_dist::{sample_gig, sample_inverse_gamma, GigParams, RngStream};

/// Local, global and auxiliary scales of an element-wise prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageState {
    /// Local variances `λ²`, symmetric with unit diagonal.
    pub lambda2: DMatrix<f64>,
    /// Global variance `τ²`.
    pub tau2: f64,
    /// Horseshoe auxiliaries `ν_jk`, symmetric.
    pub nu: DMatrix<f64>,
    /// Horseshoe auxiliary `ξ` of the global scale.
    pub xi: f64,
}

impl ShrinkageState {
    /// All scales and auxiliaries equal to one.
    pub fn initial(p: usize) -> Self {
        Self {
            lambda2: DMatrix::from_element(p, p, 1.0),
            tau2: 1.0,
            nu: DMatrix::from_element(p, p, 1.0),
            xi: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda2.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        if self.lambda2.shape() != (p, p) || self.nu.shape() != (p, p) {
            return Err(Error::State("scale matrices must be square and equally sized".into()));
        }
        if !(self.tau2 > 0.0 && self.tau2.is_finite()) || !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::State(format!(
                "global scales must be positive, got tau2={}, xi={}",
                self.tau2, self.xi
            )));
        }
        for j in 0..p {
            if self.lambda2[(j, j)] != 1.0 {
                return Err(Error::State(format!("lambda2[{j},{j}] must be 1")));
            }
            for k in 0..j {
                let (a, b) = (self.lambda2[(k, j)], self.lambda2[(j, k)]);
                if !(a > 0.0 && a.is_finite()) || a != b {
                    return Err(Error::State(format!("lambda2[{k},{j}] invalid or asymmetric")));
                }
                if !(self.nu[(k, j)] > 0.0) || self.nu[(k, j)] != self.nu[(j, k)] {
                    return Err(Error::State(format!("nu[{k},{j}] invalid or asymmetric")));
                }
            }
        }
        Ok(())
    }

    fn set_lambda2(&mut self, k: usize, j: usize, v: f64) {
        self.lambda2[(k, j)] = v;
        self.lambda2[(j, k)] = v;
    }

    fn set_nu(&mut self, k: usize, j: usize, v: f64) {
        self.nu[(k, j)] = v;
        self.nu[(j, k)] = v;
    }
}

/// The built-in prior families plus the plugin slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriorKind {
    /// Graphical horseshoe.
    Ghs,
    /// Bayesian graphical lasso.
    Bgl,
    /// Graphical horseshoe-like; local updates must come from a plugin.
    Ghsl,
}

impl PriorKind {
    pub fn name(self) -> &'static str {
        match self {
            PriorKind::Ghs => "ghs",
            PriorKind::Bgl => "bgl",
            PriorKind::Ghsl => "ghsl",
        }
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ghs" => Ok(PriorKind::Ghs),
            "bgl" => Ok(PriorKind::Bgl),
            "ghsl" => Ok(PriorKind::Ghsl),
            other => Err(Error::Config(format!("unknown prior '{other}' (expected ghs, bgl or ghsl)"))),
        }
    }
}

/// Externally supplied scale updates.
///
/// `update_local` must refresh `λ²_kj` for every `k` in `rows`, reading
/// the current `θ_kj` from `theta`, and keep `λ²` symmetric.
pub trait LocalScalePlugin: Send + Sync {
    fn update_local(
        &self,
        j: usize,
        rows: &[usize],
        theta: &DMatrix<f64>,
        state: &mut ShrinkageState,
        rng: &mut RngStream,
    ) -> Result<()>;

    fn update_global(
        &self,
        theta: &DMatrix<f64>,
        state: &mut ShrinkageState,
        rng: &mut RngStream,
    ) -> Result<()> {
        update_global_halfcauchy(theta, state, rng)
    }
}

/// A prior ready to be driven by either sampler.
#[derive(Clone)]
pub struct PriorSpec {
    kind: PriorKind,
    plugin: Option<Arc<dyn LocalScalePlugin>>,
}

impl fmt::Debug for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PriorSpec")
            .field("kind", &self.kind)
            .field("plugin", &self.plugin.is_some())
            .finish()
    }
}

/// Builds a prior. GHSL requires a plugin; GHS and BGL reject one.
pub fn make_prior(kind: PriorKind, plugin: Option<Arc<dyn LocalScalePlugin>>) -> Result<PriorSpec> {
    match (kind, plugin.is_some()) {
        (PriorKind::Ghsl, false) => Err(Error::Config(
            "the GHSL prior needs plugin callbacks for its local-scale update".into(),
        )),
        (PriorKind::Ghs | PriorKind::Bgl, true) => Err(Error::Config(format!(
            "the {kind} prior has built-in updates and takes no plugin"
        ))),
        _ => Ok(PriorSpec { kind, plugin }),
    }
}

impl PriorSpec {
    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    /// Refreshes the local scales of pairs `(k, j)`, `k ∈ rows`.
    pub fn update_local(
        &self,
        j: usize,
        rows: &[usize],
        theta: &DMatrix<f64>,
        state: &mut ShrinkageState,
        rng: &mut RngStream,
    ) -> Result<()> {
        check_tau(state)?;
        match (&self.plugin, self.kind) {
            (Some(p), _) => p.update_local(j, rows, theta, state, rng),
            (None, PriorKind::Ghs) => {
                for &k in rows {
                    ghs_pair(k, j, theta[(k, j)], state, rng)?;
                }
                Ok(())
            }
            (None, PriorKind::Bgl) => {
                for &k in rows {
                    bgl_pair(k, j, theta[(k, j)], state, rng)?;
                }
                Ok(())
            }
            (None, PriorKind::Ghsl) => unreachable!("make_prior guarantees a plugin"),
        }
    }

    /// Refreshes `τ²` (and its auxiliary) once per sweep.
    pub fn update_global(
        &self,
        theta: &DMatrix<f64>,
        state: &mut ShrinkageState,
        rng: &mut RngStream,
    ) -> Result<()> {
        match &self.plugin {
            Some(p) => p.update_global(theta, state, rng),
            None => update_global_halfcauchy(theta, state, rng),
        }
    }
}

fn check_tau(state: &ShrinkageState) -> Result<()> {
    if !(state.tau2 > 0.0 && state.tau2.is_finite()) {
        return Err(Error::State(format!("tau2 must be positive, got {}", state.tau2)));
    }
    Ok(())
}

fn check_col(theta_col: &[f64], state: &ShrinkageState, j: usize) -> Result<()> {
    if theta_col.len() != j || j >= state.dim() {
        return Err(Error::Shape(format!(
            "column {j} of a {p}x{p} state needs {j} entries, got {}",
            theta_col.len(),
            p = state.dim()
        )));
    }
    check_tau(state)
}

fn ghs_pair(k: usize, j: usize, theta: f64, state: &mut ShrinkageState, rng: &mut RngStream) -> Result<()> {
    let rate = 1.0 / state.nu[(k, j)] + theta * theta / (2.0 * state.tau2);
    let l2 = sample_inverse_gamma(1.0, rate, rng)?;
    state.set_lambda2(k, j, l2);
    let nu = sample_inverse_gamma(1.0, 1.0 + 1.0 / l2, rng)?;
    state.set_nu(k, j, nu);
    Ok(())
}

fn bgl_pair(k: usize, j: usize, theta: f64, state: &mut ShrinkageState, rng: &mut RngStream) -> Result<()> {
    let chi = theta * theta / state.tau2;
    let l2 = sample_gig(GigParams { lambda: 0.5, chi, psi: 2.0 }, rng)?;
    state.set_lambda2(k, j, l2);
    Ok(())
}

/// Horseshoe local update for `k < j`, given `θ_•j` (length `j`).
pub fn update_local_ghs(
    theta_col: &[f64],
    state: &mut ShrinkageState,
    j: usize,
    rng: &mut RngStream,
) -> Result<()> {
    check_col(theta_col, state, j)?;
    for (k, &t) in theta_col.iter().enumerate() {
        ghs_pair(k, j, t, state, rng)?;
    }
    Ok(())
}

/// Graphical-lasso local update `λ²_kj ~ GIG(1/2, θ²_kj/τ², 2)` for `k < j`.
pub fn update_local_bgl(
    theta_col: &[f64],
    state: &mut ShrinkageState,
    j: usize,
    rng: &mut RngStream,
) -> Result<()> {
    check_col(theta_col, state, j)?;
    for (k, &t) in theta_col.iter().enumerate() {
        bgl_pair(k, j, t, state, rng)?;
    }
    Ok(())
}

/// Half-Cauchy global update over the `m = p(p-1)/2` off-diagonal pairs.
pub fn update_global_halfcauchy(
    theta: &DMatrix<f64>,
    state: &mut ShrinkageState,
    rng: &mut RngStream,
) -> Result<()> {
    let p = state.dim();
    if theta.shape() != (p, p) {
        return Err(Error::Shape(format!(
            "theta is {}x{}, state is {p}x{p}",
            theta.nrows(),
            theta.ncols()
        )));
    }
    if !(state.xi > 0.0) {
        return Err(Error::State(format!("xi must be positive, got {}", state.xi)));
    }
    let m = (p * (p - 1) / 2) as f64;
    let mut ss = 0.0;
    for j in 1..p {
        for k in 0..j {
            let t = theta[(k, j)];
            ss += t * t / (2.0 * state.lambda2[(k, j)]);
        }
    }
    state.tau2 = sample_inverse_gamma((m + 1.0) / 2.0, 1.0 / state.xi + ss, rng)?;
    state.xi = sample_inverse_gamma(1.0, 1.0 + 1.0 / state.tau2, rng)?;
    Ok(())
}

/// Draws of the `(0, 1)` pair from a prior-only chain.
#[derive(Debug, Clone, Default)]
pub struct PriorDraws {
    pub theta: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub tau2: Vec<f64>,
}

/// Gibbs sampling of the prior alone: `θ_jk ~ N(0, τ²λ²_jk)` for every pair
/// followed by the same local and global updates the samplers use.
///
/// Keeps every `thin`-th step of the pair `(0, 1)`.
pub fn simulate_prior(
    prior: &PriorSpec,
    p: usize,
    draws: usize,
    thin: usize,
    rng: &mut RngStream,
) -> Result<PriorDraws> {
    if p < 2 || thin == 0 {
        return Err(Error::Config("prior simulation needs p >= 2 and thin >= 1".into()));
    }
    let mut state = ShrinkageState::initial(p);
    let mut theta = DMatrix::<f64>::identity(p, p);
    let rows: Vec<usize> = (0..p).collect();
    let mut out = PriorDraws::default();
    for step in 1..=draws * thin {
        for j in 1..p {
            for k in 0..j {
                let sd = (state.tau2 * state.lambda2[(k, j)]).sqrt();
                let v = sd * rng.standard_normal();
                theta[(k, j)] = v;
                theta[(j, k)] = v;
            }
        }
        for j in 1..p {
            prior.update_local(j, &rows[..j], &theta, &mut state, rng)?;
        }
        prior.update_global(&theta, &mut state, rng)?;
        if step % thin == 0 {
            out.theta.push(theta[(0, 1)]);
            out.lambda2.push(state.lambda2[(0, 1)]);
            out.tau2.push(state.tau2);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);

    impl LocalScalePlugin for Counting {
        fn update_local(
            &self,
            _j: usize,
            _rows: &[usize],
            _theta: &DMatrix<f64>,
            _state: &mut ShrinkageState,
            _rng: &mut RngStream,
        ) -> Result<()> {
            self.0.fetch_add(1, Ordering::Relaxed);
            Ok(())
        }
    }

    #[test]
    fn make_prior_rules() {
        assert_eq!(make_prior(PriorKind::Ghs, None).unwrap().kind(), PriorKind::Ghs);
        assert_eq!(make_prior(PriorKind::Bgl, None).unwrap().kind(), PriorKind::Bgl);
        assert!(matches!(make_prior(PriorKind::Ghsl, None), Err(Error::Config(_))));
        let cb: Arc<dyn LocalScalePlugin> = Arc::new(Counting(AtomicUsize::new(0)));
        assert!(make_prior(PriorKind::Ghsl, Some(cb.clone())).is_ok());
        assert!(make_prior(PriorKind::Ghs, Some(cb)).is_err());
        assert_eq!("BGL".parse::<PriorKind>().unwrap(), PriorKind::Bgl);
        assert!("lasso".parse::<PriorKind>().is_err());
    }

    #[test]
    fn ghs_without_signal_has_unit_precision_mean() {
        // θ = 0, ν = 1 gives λ² ~ IG(1, 1), so 1/λ² ~ Exp(1).
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut s = ShrinkageState::initial(2);
            update_local_ghs(&[0.0], &mut s, 1, &mut rng).unwrap();
            acc += 1.0 / s.lambda2[(0, 1)];
        }
        let mean = acc / n as f64;
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn bgl_without_signal_is_gamma_half() {
        let mut rng = RngStream::new(4, 0);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut s = ShrinkageState::initial(2);
            update_local_bgl(&[0.0], &mut s, 1, &mut rng).unwrap();
            acc += s.lambda2[(0, 1)];
        }
        // Gamma(1/2, rate 1): mean 1/2, sd √(1/2).
        let mean = acc / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * 0.5_f64.sqrt() / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn updates_keep_state_valid() {
        let mut rng = RngStream::new(5, 0);
        let mut s = ShrinkageState::initial(4);
        let theta = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.1 * (i + j) as f64 });
        let ghs = make_prior(PriorKind::Ghs, None).unwrap();
        let bgl = make_prior(PriorKind::Bgl, None).unwrap();
        for j in 0..4 {
            let rows: Vec<usize> = (0..4).filter(|&k| k != j).collect();
            ghs.update_local(j, &rows, &theta, &mut s, &mut rng).unwrap();
            bgl.update_local(j, &rows, &theta, &mut s, &mut rng).unwrap();
        }
        ghs.update_global(&theta, &mut s, &mut rng).unwrap();
        s.validate().unwrap();
        s.tau2 = 0.0;
        assert!(matches!(update_local_ghs(&[0.1], &mut s, 1, &mut rng), Err(Error::State(_))));
    }

    #[test]
    fn global_update_is_deterministic_given_seed() {
        let theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let run = || {
            let mut rng = RngStream::new(6, 2);
            let mut s = ShrinkageState::initial(2);
            update_global_halfcauchy(&theta, &mut s, &mut rng).unwrap();
            (s.tau2, s.xi)
        };
        assert_eq!(run(), run());
        // With θ = 0 and m = 1 the update is τ² ~ IG(1, 1/ξ).
        let mut a = RngStream::new(6, 2);
        let mut s = ShrinkageState::initial(2);
        update_global_halfcauchy(&theta, &mut s, &mut a).unwrap();
        let mut b = RngStream::new(6, 2);
        assert_eq!(s.tau2, sample_inverse_gamma(1.0, 1.0, &mut b).unwrap());
    }

    #[test]
    fn plugin_receives_each_column() {
        let counter = Arc::new(Counting(AtomicUsize::new(0)));
        let prior = make_prior(PriorKind::Ghsl, Some(counter.clone())).unwrap();
        let mut rng = RngStream::new(1, 1);
        simulate_prior(&prior, 4, 10, 1, &mut rng).unwrap();
        assert_eq!(counter.0.load(Ordering::Relaxed), 10 * 3);
    }
}
