//! Reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Trapezoid integral of `exp(h(t))` over the real line, returned as a log.
///
/// `h` must be unimodal with its maximum near `mode`; the grid walks outward
/// in steps of `step` until the integrand falls below `e^-60` of the peak.
fn log_integral(h: impl Fn(f64) -> f64, mode: f64, step: f64) -> f64 {
    let peak = h(mode);
    let mut sum = 1.0;
    for dir in [-1.0, 1.0] {
        let mut k = 1.0;
        loop {
            let v = h(mode + dir * k * step) - peak;
            sum += v.exp();
            if v < -60.0 || k > 4e6 {
                break;
            }
            k += 1.0;
        }
    }
    peak + (sum * step).ln()
}

/// Maximizer of a strictly concave function with decreasing derivative `dh`.
fn root_of_decreasing(dh: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, 1.0);
    while dh(lo) < 0.0 {
        lo *= 2.0;
    }
    while dh(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dh(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `log ∫ x^{a-1} exp(-(χ/x + ψx)/2) dx` by quadrature in `t = ln x`.
fn gig_log_kernel_integral(a: f64, chi: f64, psi: f64) -> f64 {
    let h = |t: f64| a * t - 0.5 * (chi * (-t).exp() + psi * t.exp());
    let dh = |t: f64| a + 0.5 * chi * (-t).exp() - 0.5 * psi * t.exp();
    let mode = root_of_decreasing(dh);
    let curv = 0.5 * (chi * (-mode).exp() + psi * mode.exp());
    let width = 1.0 / curv.max(1e-12).sqrt();
    // Linear tails decay at rate |a|; keep the step small against both scales.
    let step = (width / 40.0).min(0.05);
    log_integral(h, mode, step)
}

/// `E[X^k]` for `X ~ GIG(λ, χ, ψ)` by quadrature.
pub fn gig_moment_quadrature(lambda: f64, chi: f64, psi: f64, k: f64) -> f64 {
    (gig_log_kernel_integral(lambda + k, chi, psi) - gig_log_kernel_integral(lambda, chi, psi)).exp()
}

/// `log K_ν(z)` from `K_ν(z) = ∫₀^∞ exp(-z cosh u) cosh(νu) du`.
pub fn log_bessel_k(nu: f64, z: f64) -> f64 {
    let nu = nu.abs();
    let log_cosh = |x: f64| x + (0.5 * (1.0 + (-2.0 * x).exp())).ln();
    let h = |u: f64| -z * u.cosh() + log_cosh(nu * u);
    let dh = |u: f64| -z * u.sinh() + nu * (nu * u).tanh();
    let mut peak_at = 0.0;
    if nu * nu > z {
        let (mut lo, mut hi) = (1e-12, 1.0);
        while dh(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dh(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        peak_at = lo;
    }
    let peak = h(peak_at);
    let step = 1e-3 / (1.0 + nu).sqrt();
    let mut sum = 0.5 * (h(0.0) - peak).exp();
    let mut k = 1.0;
    loop {
        let u = k * step;
        let v = h(u) - peak;
        sum += v.exp();
        if u > peak_at && v < -60.0 {
            break;
        }
        k += 1.0;
    }
    peak + (sum * step).ln()
}

/// `E[X]` for `X ~ GIG(λ, χ, ψ)` by the Bessel-function ratio.
pub fn gig_mean_bessel(lambda: f64, chi: f64, psi: f64) -> f64 {
    let w = (chi * psi).sqrt();
    (chi / psi).sqrt() * (log_bessel_k(lambda + 1.0, w) - log_bessel_k(lambda, w)).exp()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// One-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn half_cauchy_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        2.0 / std::f64::consts::PI * x.atan()
    }
}

pub fn exponential_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-x).exp()
    }
}

/// Mean and covariance of `N(A⁻¹ b, A⁻¹)` by explicit inversion.
pub fn gaussian_from_precision(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let cov = a.clone().try_inverse().expect("invertible precision");
    (&cov * b, cov)
}

/// Sample mean vector and covariance matrix of the rows of `draws`.
pub fn sample_moments(draws: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let q = draws[0].len();
    let n = draws.len() as f64;
    let mut m = DVector::zeros(q);
    for d in draws {
        m += d;
    }
    m /= n;
    let mut c = DMatrix::zeros(q, q);
    for d in draws {
        let e = d - &m;
        c += &e * e.transpose();
    }
    (m, c / (n - 1.0))
}
