mod common;

use common::{exponential_cdf, gig_mean_bessel, half_cauchy_cdf, ks_critical_1pct, ks_statistic, mean};
use ggm_core::priors::{simulate_prior, update_local_bgl, PriorDraws};
use ggm_core::{make_prior, PriorKind, RngStream, ShrinkageState};

fn prior_chain(kind: PriorKind, draws: usize, thin: usize, seed: u64) -> PriorDraws {
    let prior = make_prior(kind, None).unwrap();
    simulate_prior(&prior, 2, draws, thin, &mut RngStream::new(seed, 0)).unwrap()
}

/// Two-sample KS statistic of sorted copies.
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn ghs_local_and_global_scales_are_half_cauchy() {
    let n = 20_000;
    let d = prior_chain(PriorKind::Ghs, n, 20, 1);
    let lam: Vec<f64> = d.lambda2.iter().map(|v| v.sqrt()).collect();
    let tau: Vec<f64> = d.tau2.iter().map(|v| v.sqrt()).collect();
    let crit = ks_critical_1pct(n);
    let kl = ks_statistic(&lam, half_cauchy_cdf);
    let kt = ks_statistic(&tau, half_cauchy_cdf);
    assert!(kl < crit, "λ: D = {kl}, critical {crit}");
    assert!(kt < crit, "τ: D = {kt}, critical {crit}");
}

#[test]
fn bgl_local_scale_is_exponential() {
    let n = 20_000;
    let d = prior_chain(PriorKind::Bgl, n, 20, 2);
    let k = ks_statistic(&d.lambda2, exponential_cdf);
    assert!(k < ks_critical_1pct(n), "D = {k}");
}

#[test]
fn theta_marginals_match_direct_hierarchy_draws() {
    let n = 20_000;
    let mut rng = RngStream::new(3, 1);
    let half_cauchy = |rng: &mut RngStream| (std::f64::consts::FRAC_PI_2 * rng.open01()).tan();
    for kind in [PriorKind::Ghs, PriorKind::Bgl] {
        let chain = prior_chain(kind, n, 20, 4 + kind as u64);
        let direct: Vec<f64> = (0..n)
            .map(|_| {
                let tau = half_cauchy(&mut rng);
                let lam = match kind {
                    PriorKind::Ghs => half_cauchy(&mut rng),
                    _ => (-rng.open01().ln()).sqrt(),
                };
                tau * lam * rng.standard_normal()
            })
            .collect();
        let d = ks_two_sample(&chain.theta, &direct);
        let crit = 1.628 * (2.0 / n as f64).sqrt();
        assert!(d < crit, "{kind}: D = {d}, critical {crit}");
    }
}

#[test]
fn bgl_conditional_mean_matches_bessel_oracle() {
    // θ²/τ² = 4 gives λ² | rest ~ GIG(1/2, 4, 2).
    let oracle = gig_mean_bessel(0.5, 4.0, 2.0);
    let mut state = ShrinkageState::initial(2);
    let mut rng = RngStream::new(5, 0);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| {
            update_local_bgl(&[2.0], &mut state, 1, &mut rng).unwrap();
            state.lambda2[(0, 1)]
        })
        .collect();
    assert!((mean(&xs) / oracle - 1.0).abs() < 0.01, "{} vs {oracle}", mean(&xs));
}
