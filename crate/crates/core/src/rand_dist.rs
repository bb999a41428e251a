//! Random variate generators used by the samplers.
//!
//! Gamma and normal variates come from `rand_distr`; the generalized
//! inverse Gaussian sampler follows Hörmann and Leydold's ratio-of-uniforms
//! scheme (with and without mode shift) plus their three-piece rejection
//! hat for small `ω` and `λ < 1`.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;

/// Below this `χ` the GIG draw is taken from its Gamma limit.
pub const GIG_CHI_GAMMA_LIMIT: f64 = 1e-10;

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Distinct stream ids under one seed are independent ChaCha8 streams,
/// so every chain or replicate can own its generator.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn open01(&mut self) -> f64 {
        self.sample(Open01)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draw from Gamma with the given shape and rate (mean `shape / rate`).
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Parameter(format!(
            "gamma needs positive finite shape and rate, got shape={shape}, rate={rate}"
        )));
    }
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Parameter(format!("gamma(shape={shape}, rate={rate}): {e}")))?;
    Ok(g.sample(rng))
}

/// Draw from the inverse Gamma with density `∝ x^{-shape-1} e^{-scale/x}`.
pub fn sample_inverse_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    Ok(1.0 / sample_gamma(shape, scale, rng)?)
}

/// Parameters of the GIG density `∝ x^{λ-1} exp{-(χ/x + ψx)/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    pub lambda: f64,
    pub chi: f64,
    pub psi: f64,
}

impl GigParams {
    pub fn new(lambda: f64, chi: f64, psi: f64) -> Result<Self> {
        let p = Self { lambda, chi, psi };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let Self { lambda, chi, psi } = *self;
        if !lambda.is_finite() || !(chi >= 0.0 && chi.is_finite()) || !(psi > 0.0 && psi.is_finite()) {
            return Err(Error::Parameter(format!(
                "GIG needs finite lambda, chi >= 0 and psi > 0; got ({lambda}, {chi}, {psi})"
            )));
        }
        if chi == 0.0 && lambda <= 0.0 {
            return Err(Error::Parameter(format!(
                "GIG with chi = 0 is proper only for lambda > 0, got lambda={lambda}"
            )));
        }
        Ok(())
    }
}

/// Draw from `GIG(λ, χ, ψ)`.
pub fn sample_gig(params: GigParams, rng: &mut RngStream) -> Result<f64> {
    params.validate()?;
    let GigParams { lambda, chi, psi } = params;
    if chi < GIG_CHI_GAMMA_LIMIT && lambda > 0.0 {
        return sample_gamma(lambda, psi / 2.0, rng);
    }
    let omega = (chi * psi).sqrt();
    let alpha = (chi / psi).sqrt();
    let lam = lambda.abs();
    let y = if lam > 2.0 || omega > 3.0 {
        rou_shift(lam, omega, rng)
    } else if lam >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lam, omega, rng)
    } else {
        three_piece(lam, omega, rng)
    };
    Ok(if lambda < 0.0 { alpha / y } else { alpha * y })
}

/// Mode of `x^{λ-1} exp{-ω(x + 1/x)/2}`.
fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn rou_noshift(lambda: f64, omega: f64, rng: &mut RngStream) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.open01();
        let v = rng.open01();
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift(lambda: f64, omega: f64, rng: &mut RngStream) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    // Roots of the cubic locating the extremes of the shifted region.
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-p * p * p / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.open01() * (uplus - uminus);
        let v = rng.open01();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a constant / power / exponential hat; needs `0 ≤ λ < 1`.
fn three_piece(lambda: f64, omega: f64, rng: &mut RngStream) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0_f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    let tail_start = x0.max(2.0 / omega);
    loop {
        let mut v = total * rng.open01();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                x = -2.0 / omega * ((-omega / 2.0 * tail_start).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        let u = rng.open01() * hx;
        if x > 0.0 && x.is_finite() && u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// Exact draw from `N(A⁻¹Xᵀz, A⁻¹)` with `A = XᵀX + D⁻¹`, `D = diag(lambda2)`.
///
/// Works through the `n×n` system `(XDXᵀ + I)ζ = z - v` so no `q×q`
/// matrix is ever formed. Consumes `q` normals for `u` then `n` for `δ`.
pub fn fast_gaussian(
    x: &DMatrix<f64>,
    z: &DVector<f64>,
    lambda2: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    fast_gaussian_view(x.as_view(), z.as_slice(), lambda2.as_slice(), rng)
}

pub(crate) fn fast_gaussian_view(
    x: DMatrixView<'_, f64>,
    z: &[f64],
    d: &[f64],
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let (n, q) = x.shape();
    if n == 0 || q == 0 || z.len() != n || d.len() != q {
        return Err(Error::Shape(format!(
            "fast_gaussian: X is {n}x{q}, z has {}, lambda2 has {}",
            z.len(),
            d.len()
        )));
    }
    if let Some(bad) = d.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Parameter(format!("prior variances must be positive, got {bad}")));
    }
    let sd: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let u = DVector::from_iterator(q, sd.iter().map(|s| s * rng.standard_normal()));
    let mut r = DVector::from_fn(n, |_, _| -rng.standard_normal());
    // r = z - (Xu + δ)
    r.gemv(-1.0, &x, &u, 1.0);
    for (ri, zi) in r.iter_mut().zip(z) {
        *ri += zi;
    }
    let mut b = x.into_owned();
    for (mut col, s) in b.column_iter_mut().zip(&sd) {
        col *= *s;
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    linalg::syrk_lower(&mut m, 1.0, &b);
    linalg::cholesky_in_place(&mut m, linalg::PIVOT_TOL).map_err(|k| {
        Error::Numeric(format!("fast_gaussian: XDXᵀ + I lost positive definiteness at pivot {k}"))
    })?;
    linalg::solve_lower_in_place(&m, r.as_mut_slice());
    linalg::solve_lower_transpose_in_place(&m, r.as_mut_slice());
    let xt_zeta = x.tr_mul(&r);
    Ok(DVector::from_fn(q, |i, _| u[i] + d[i] * xt_zeta[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..5).map({
            let mut r = RngStream::new(7, 3);
            move |_| r.next_u64()
        }).collect();
        let mut r2 = RngStream::new(7, 3);
        let b: Vec<u64> = (0..5).map(|_| r2.next_u64()).collect();
        let mut r3 = RngStream::new(7, 4);
        let c: Vec<u64> = (0..5).map(|_| r3.next_u64()).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!((r2.seed(), r2.stream()), (7, 3));
    }

    #[test]
    fn gamma_moments() {
        let mut rng = RngStream::new(1, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(1.0, 1.0, &mut rng).unwrap()).collect();
        assert!((mean_and_se(&xs).0 - 1.0).abs() < 0.02);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(6.0, 5.0, &mut rng).unwrap()).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 1.2).abs() < 3.0 * se, "{m} {se}");
        assert!(sample_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(sample_gamma(1.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn inverse_gamma_mean() {
        let mut rng = RngStream::new(2, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_inverse_gamma(3.0, 2.0, &mut rng).unwrap())
            .collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 1.0).abs() < 3.0 * se, "{m} {se}");
    }

    #[test]
    fn gig_parameter_validation() {
        assert!(GigParams::new(1.0, -1.0, 1.0).is_err());
        assert!(GigParams::new(1.0, 1.0, 0.0).is_err());
        assert!(GigParams::new(-0.5, 0.0, 1.0).is_err());
        assert!(GigParams::new(0.5, 0.0, 1.0).is_ok());
    }

    #[test]
    fn gig_gamma_limit_is_exact_gamma() {
        let p = GigParams::new(2.5, 1e-12, 3.0).unwrap();
        let mut a = RngStream::new(5, 1);
        let mut b = RngStream::new(5, 1);
        for _ in 0..100 {
            let x = sample_gig(p, &mut a).unwrap();
            let y = sample_gamma(2.5, 1.5, &mut b).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn gig_regimes_produce_positive_finite_draws() {
        let mut rng = RngStream::new(9, 0);
        for &(l, c, p) in &[(0.3, 1e-6, 1e-3), (0.0, 1e-4, 1.0), (-0.7, 0.01, 0.5), (5.0, 1.0, 1.0), (0.5, 0.2, 0.2), (-30.0, 50.0, 2.0)] {
            for _ in 0..1000 {
                let x = sample_gig(GigParams::new(l, c, p).unwrap(), &mut rng).unwrap();
                assert!(x > 0.0 && x.is_finite(), "({l},{c},{p}) -> {x}");
            }
        }
    }

    #[test]
    fn fast_gaussian_zero_design_returns_prior_draw() {
        let x = DMatrix::zeros(3, 2);
        let z = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let d = DVector::from_vec(vec![4.0, 0.25]);
        let mut a = RngStream::new(3, 0);
        let mut b = RngStream::new(3, 0);
        let beta = fast_gaussian(&x, &z, &d, &mut a).unwrap();
        let u0 = 2.0 * b.standard_normal();
        let u1 = 0.5 * b.standard_normal();
        assert_eq!(beta.as_slice(), &[u0, u1]);
    }

    #[test]
    fn fast_gaussian_scalar_posterior_mean() {
        let (x0, z0, l2) = (1.5, 0.8, 2.0);
        let x = DMatrix::from_element(1, 1, x0);
        let z = DVector::from_element(1, z0);
        let d = DVector::from_element(1, l2);
        let mut rng = RngStream::new(4, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| fast_gaussian(&x, &z, &d, &mut rng).unwrap()[0])
            .collect();
        let (m, se) = mean_and_se(&xs);
        let target = x0 * z0 / (x0 * x0 + 1.0 / l2);
        assert!((m - target).abs() < 3.5 * se, "{m} vs {target}");
    }

    #[test]
    fn fast_gaussian_shape_errors() {
        let mut rng = RngStream::new(4, 0);
        let x = DMatrix::zeros(2, 2);
        let z = DVector::zeros(3);
        let d = DVector::from_element(2, 1.0);
        assert!(matches!(fast_gaussian(&x, &z, &d, &mut rng), Err(Error::Shape(_))));
        let z = DVector::zeros(2);
        let d = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(fast_gaussian(&x, &z, &d, &mut rng), Err(Error::Parameter(_))));
    }
}
