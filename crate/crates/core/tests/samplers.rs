use ggm_core::analysis::monte_carlo_se;
use ggm_core::cyclical_sampler::cyclical_run;
use ggm_core::rt_sampler::rt_run;
use ggm_core::simulation::{make_structure, sample_mvn_data, StructureKind, StructureSpec};
use ggm_core::{make_prior, ChainConfig, ChainResult, DataMatrix, Error, PriorKind, RngStream};
use nalgebra::DMatrix;

fn entry_trace(r: &ChainResult, i: usize, j: usize) -> Vec<f64> {
    r.draws.iter().map(|d| d.matrix()[(i, j)]).collect()
}

#[test]
fn single_variable_posterior_is_conjugate_gamma() {
    let y = DataMatrix::new(DMatrix::from_column_slice(8, 1, &[0.3, -1.2, 0.8, 2.1, -0.4, 0.9, -1.7, 0.2])).unwrap();
    let yty: f64 = y.column(0).iter().map(|v| v * v).sum();
    let exact = (8.0 / 2.0 + 1.0) / (yty / 2.0);
    let prior = make_prior(PriorKind::Ghs, None).unwrap();
    let cfg = ChainConfig::new(11_000, 1_000, 6);
    for r in [rt_run(&y, &prior, &cfg).unwrap(), cyclical_run(&y.scatter(), 8, &prior, &cfg).unwrap()] {
        let xs = entry_trace(&r, 0, 0);
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = monte_carlo_se(&xs);
        assert!((m - exact).abs() < 3.0 * se, "{m} vs {exact} (MCSE {se})");
    }
}

#[test]
fn samplers_agree_on_a_bivariate_posterior() {
    let theta0 = make_structure(&StructureSpec::new(StructureKind::Tridiagonal, 3)).unwrap();
    let y = sample_mvn_data(&theta0, 15, &mut RngStream::new(21, 0)).unwrap();
    for kind in [PriorKind::Ghs, PriorKind::Bgl] {
        let prior = make_prior(kind, None).unwrap();
        let mut cfg = ChainConfig::new(21_000, 1_000, 22);
        let rt = rt_run(&y, &prior, &cfg).unwrap();
        cfg.stream = 1;
        let cyc = cyclical_run(&y.scatter(), 15, &prior, &cfg).unwrap();
        for i in 0..3 {
            for j in i..3 {
                let (a, b) = (entry_trace(&rt, i, j), entry_trace(&cyc, i, j));
                let se = (monte_carlo_se(&a).powi(2) + monte_carlo_se(&b).powi(2)).sqrt();
                let gap = rt.posterior_mean[(i, j)] - cyc.posterior_mean[(i, j)];
                assert!(gap.abs() < 4.5 * se, "{kind} ({i},{j}): gap {gap}, se {se}");
            }
        }
    }
}

#[test]
fn wide_data_cyclical_stays_positive_definite_and_rt_reports_divergence() {
    let mut rng = RngStream::new(30, 0);
    let y = DataMatrix::new(DMatrix::from_fn(5, 20, |_, _| rng.standard_normal())).unwrap();
    let prior = make_prior(PriorKind::Ghs, None).unwrap();
    let mut cfg = ChainConfig::new(300, 100, 31);
    cfg.pd_check_every = 1;
    let cyc = cyclical_run(&y.scatter(), 5, &prior, &cfg).unwrap();
    assert_eq!(cyc.pd_checks, 200);
    match rt_run(&y, &prior, &cfg) {
        Err(Error::Numeric(msg)) => assert!(msg.contains("diverged"), "{msg}"),
        other => panic!("expected a divergence error, got {other:?}"),
    }
}

#[test]
fn thinning_and_storage_flags() {
    let mut rng = RngStream::new(40, 0);
    let y = DataMatrix::new(DMatrix::from_fn(10, 4, |_, _| rng.standard_normal())).unwrap();
    let prior = make_prior(PriorKind::Bgl, None).unwrap();
    let mut cfg = ChainConfig::new(100, 40, 41);
    cfg.thin = 7;
    let r = rt_run(&y, &prior, &cfg).unwrap();
    assert_eq!(r.kept, 8);
    assert_eq!(r.draws.len(), 8);
    assert_eq!(r.loglik_trace.len(), 100);
    let mean = r.draws.iter().fold(DMatrix::zeros(4, 4), |acc, d| acc + d.matrix()) / 8.0;
    assert!((mean - &r.posterior_mean).amax() < 1e-12);
    cfg.store_draws = false;
    cfg.store_traces = false;
    let lean = rt_run(&y, &prior, &cfg).unwrap();
    assert!(lean.draws.is_empty() && lean.loglik_trace.is_empty());
    assert_eq!(lean.posterior_mean, r.posterior_mean);
}
