mod common;

use common::{gig_mean_bessel, gig_moment_quadrature, mean};
use ggm_core::rand_dist::{sample_gig, GigParams};
use ggm_core::RngStream;

const LAMBDAS: [f64; 4] = [-1.0, 0.5, 3.0, 51.0];
const CHIS: [f64; 3] = [1e-8, 1.0, 100.0];
const PSIS: [f64; 3] = [0.1, 1.0, 100.0];

#[test]
fn quadrature_agrees_with_bessel_ratio() {
    for &l in &LAMBDAS {
        for &c in &CHIS[1..] {
            for &s in &PSIS {
                let q = gig_moment_quadrature(l, c, s, 1.0);
                let b = gig_mean_bessel(l, c, s);
                assert!((q / b - 1.0).abs() < 1e-7, "λ={l} χ={c} ψ={s}: {q} vs {b}");
            }
        }
    }
}

#[test]
fn quadrature_reduces_to_gamma_and_inverse_gamma() {
    // χ → 0 with λ > 0 is Gamma(λ, rate ψ/2).
    for &(l, s) in &[(0.5, 1.0), (3.0, 0.1), (51.0, 100.0)] {
        let q = gig_moment_quadrature(l, 1e-14, s, 1.0);
        assert!((q / (2.0 * l / s) - 1.0).abs() < 1e-6, "{q}");
    }
    // ψ → 0 with λ < 0 is inverse gamma(-λ, scale χ/2); mean χ/(2(-λ-1)).
    let q = gig_moment_quadrature(-3.0, 4.0, 1e-14, 1.0);
    assert!((q - 1.0).abs() < 1e-6, "{q}");
}

#[test]
fn sample_means_match_quadrature_on_full_grid() {
    let draws = 20_000;
    let mut cell = 0;
    for &l in &LAMBDAS {
        for &c in &CHIS {
            for &s in &PSIS {
                let mut rng = RngStream::new(2024, cell);
                cell += 1;
                let p = GigParams::new(l, c, s).unwrap();
                let xs: Vec<f64> = (0..draws).map(|_| sample_gig(p, &mut rng).unwrap()).collect();
                let m1 = gig_moment_quadrature(l, c, s, 1.0);
                let m2 = gig_moment_quadrature(l, c, s, 2.0);
                let se = ((m2 - m1 * m1).max(0.0) / draws as f64).sqrt();
                let z = (mean(&xs) - m1) / se;
                assert!(z.abs() < 4.5, "λ={l} χ={c} ψ={s}: mean {} oracle {m1} z={z}", mean(&xs));
                assert!(xs.iter().all(|x| x.is_finite() && *x > 0.0));
            }
        }
    }
}

#[test]
fn second_moment_matches_in_each_regime() {
    // One cell per generator branch: large λ, large ω, and the small-ω hat.
    for (i, &(l, c, s)) in [(3.0, 1.0, 1.0), (0.5, 100.0, 100.0), (0.1, 0.01, 0.01)].iter().enumerate() {
        let mut rng = RngStream::new(77, i as u64);
        let p = GigParams::new(l, c, s).unwrap();
        let xs: Vec<f64> = (0..200_000).map(|_| sample_gig(p, &mut rng).unwrap()).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let m2 = gig_moment_quadrature(l, c, s, 2.0);
        let m4 = gig_moment_quadrature(l, c, s, 4.0);
        let se = ((m4 - m2 * m2) / sq.len() as f64).sqrt();
        assert!(((mean(&sq) - m2) / se).abs() < 4.5, "λ={l}: {} vs {m2}", mean(&sq));
    }
}
