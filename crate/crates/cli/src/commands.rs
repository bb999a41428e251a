//! The four subcommands.

use std::fmt::Write as _;
use std::path::Path;

use ggm_core::analysis::{self, summarize_draws, PosteriorSummary};
use ggm_core::benchmark::{self, BenchmarkPlan, SamplerKind};
use ggm_core::cyclical_sampler::cyclical_run;
use ggm_core::rt_sampler::rt_run;
use ggm_core::simulation::{make_structure, sample_mvn_data, StructureSpec};
use ggm_core::{make_prior, ChainConfig, DataMatrix, RngStream};
use nalgebra::DMatrix;

use crate::config::{BenchmarkConfig, DataSource, SampleConfig, SimulateConfig, SummarizeConfig};
use crate::error::{CliError, CliResult};
use crate::io::{self, DrawsLayout, Manifest, DRAWS_FILE, MANIFEST};

/// Stream ids under the run seed.
const DATA_STREAM: u64 = 0;
const CHAIN_STREAM: u64 = 1;

pub fn simulate(cfg: &SimulateConfig) -> CliResult<()> {
    let theta0 = make_structure(&StructureSpec::new(cfg.structure, cfg.p))?;
    let mut manifest = Manifest::new("simulate", Some(cfg.seed), cfg)?;
    manifest.write(&cfg.out, "theta0.csv", io::matrix_csv(theta0.matrix()).as_bytes())?;
    for r in 1..=cfg.replicates {
        let y = sample_mvn_data(&theta0, cfg.n, &mut RngStream::new(cfg.seed, r as u64))?;
        manifest.write(&cfg.out, &format!("data_{r}.csv"), io::matrix_csv(y.matrix()).as_bytes())?;
    }
    manifest.save(&cfg.out, MANIFEST)?;
    println!("wrote Θ₀ and {} data set(s) to {}", cfg.replicates, cfg.out.display());
    Ok(())
}

/// Writes the mean, interval and edge files shared by `sample` and `summarize`.
fn write_summary(manifest: &mut Manifest, dir: &Path, s: &PosteriorSummary) -> CliResult<()> {
    manifest.write(dir, "posterior_mean.csv", io::matrix_csv(&s.mean).as_bytes())?;
    manifest.write(dir, "lower.csv", io::matrix_csv(&s.lower).as_bytes())?;
    manifest.write(dir, "median.csv", io::matrix_csv(&s.median).as_bytes())?;
    manifest.write(dir, "upper.csv", io::matrix_csv(&s.upper).as_bytes())?;
    let mut edges = String::from("row,col,mean,lower,upper\n");
    for &(i, j) in &s.edges {
        writeln!(
            edges,
            "{},{},{:.16e},{:.16e},{:.16e}",
            i + 1,
            j + 1,
            s.mean[(i, j)],
            s.lower[(i, j)],
            s.upper[(i, j)]
        )
        .unwrap();
    }
    manifest.write(dir, "edges.csv", edges.as_bytes())?;
    Ok(())
}

pub fn sample(cfg: &SampleConfig) -> CliResult<()> {
    let mut manifest = Manifest::new("sample", Some(cfg.seed), cfg)?;
    let (mut y, theta0) = match &cfg.source {
        DataSource::File(path) => (DataMatrix::new(io::read_matrix_csv(path)?)?, None),
        DataSource::Simulated { structure, n, p } => {
            let theta0 = make_structure(&StructureSpec::new(*structure, *p))?;
            let y = sample_mvn_data(&theta0, *n, &mut RngStream::new(cfg.seed, DATA_STREAM))?;
            manifest.write(&cfg.out, "theta0.csv", io::matrix_csv(theta0.matrix()).as_bytes())?;
            manifest.write(&cfg.out, "data.csv", io::matrix_csv(y.matrix()).as_bytes())?;
            (y, Some(theta0))
        }
    };
    if cfg.standardize {
        y = y.standardized()?;
    }
    let prior = make_prior(cfg.prior, None)?;
    let mut chain = ChainConfig::new(cfg.iters, cfg.burnin, cfg.seed);
    chain.stream = CHAIN_STREAM;
    chain.thin = cfg.thin;
    chain.time_limit_seconds = cfg.limit_seconds;
    let result = match cfg.sampler {
        SamplerKind::Rt => rt_run(&y, &prior, &chain)?,
        SamplerKind::Cyclical => cyclical_run(&y.scatter(), y.n(), &prior, &chain)?,
    };
    let draws: Vec<&DMatrix<f64>> = result.draws.iter().map(|d| d.matrix()).collect();
    let summary = summarize_draws(&draws, cfg.ci)?;
    write_summary(&mut manifest, &cfg.out, &summary)?;

    let mut trace = Vec::new();
    analysis::write_trace_csv(&result.loglik_trace, &mut trace).map_err(|e| CliError::config(e.to_string()))?;
    manifest.write(&cfg.out, "trace.csv", &trace)?;
    if cfg.write_draws {
        let mut bytes = Vec::with_capacity(draws.len() * io::packed_len(y.p()) * 8);
        for d in &draws {
            io::pack_upper(d, &mut bytes);
        }
        manifest.write(&cfg.out, DRAWS_FILE, &bytes)?;
        manifest.draws = Some(DrawsLayout::new(y.p(), draws.len()));
    }
    manifest.save(&cfg.out, MANIFEST)?;

    let diag = analysis::trace_diagnostics(&result);
    println!(
        "{} sampler, {} prior: {} sweeps in {:.3} s, {} draws kept, {} edges at ci {}",
        cfg.sampler,
        cfg.prior,
        result.iterations,
        result.total_seconds,
        result.kept,
        summary.edges.len(),
        cfg.ci
    );
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"));
    println!(
        "log-likelihood trace: lag-1 autocorrelation {}, effective sample size {}",
        fmt(diag.lag1_autocorrelation),
        fmt(diag.effective_sample_size)
    );
    if let Some(theta0) = theta0 {
        println!("‖Θ̂ - Θ₀‖_F = {:.4}", analysis::frobenius(&summary.mean, theta0.matrix())?);
    }
    Ok(())
}

pub fn summarize(cfg: &SummarizeConfig) -> CliResult<()> {
    let source = Manifest::load(&cfg.input.join(MANIFEST))?;
    let layout = source.draws.clone().ok_or_else(|| {
        CliError::data(format!("{} records no stored draws; rerun sample without --no-draws", cfg.input.display()))
    })?;
    let bytes = source.read_verified(&cfg.input, &layout.file)?;
    let draws = io::unpack_draws(&bytes, layout.p, layout.count)?;
    let refs: Vec<&DMatrix<f64>> = draws.iter().collect();
    let summary = summarize_draws(&refs, cfg.ci)?;
    let mut manifest = Manifest::new("summarize", source.seed, cfg)?;
    write_summary(&mut manifest, &cfg.out, &summary)?;
    manifest.save(&cfg.out, "summary_manifest.json")?;
    println!("{} draws, {} edges at ci {}", layout.count, summary.edges.len(), cfg.ci);
    Ok(())
}

pub fn benchmark(cfg: &BenchmarkConfig) -> CliResult<()> {
    let plan = BenchmarkPlan {
        dims: cfg.dims.clone(),
        structures: cfg.structures.clone(),
        priors: cfg.priors.clone(),
        replicates: cfg.replicates,
        iterations: cfg.iters,
        burnin: cfg.burnin,
        wall_clock_limit: cfg.limit_seconds,
        samplers: cfg.samplers.clone(),
        threads: cfg.threads,
    };
    plan.validate()?;
    let records = benchmark::run_benchmark(&plan, cfg.seed)?;
    let mut manifest = Manifest::new("benchmark", Some(cfg.seed), cfg)?;
    for path in benchmark::emit_report(&records, &cfg.out)? {
        manifest.record(&path)?;
    }
    manifest.save(&cfg.out, MANIFEST)?;

    let timed_out = records.iter().filter(|r| r.timed_out).count();
    println!("{} chains, {timed_out} timed out, report in {}", records.len(), cfg.out.display());
    for r in records.iter().filter(|r| r.error.is_some()) {
        println!(
            "failed: {} {} n={} p={} replicate {} {}: {}",
            r.structure,
            r.prior,
            r.n,
            r.p,
            r.replicate,
            r.sampler,
            r.error.as_deref().unwrap_or_default()
        );
    }
    for &sampler in &cfg.samplers {
        match benchmark::fit_scaling_exponent(&records, sampler) {
            Ok(slope) => println!("scaling exponent {sampler}: {slope:.3}"),
            Err(e) => println!("scaling exponent {sampler}: unavailable ({e})"),
        }
    }
    Ok(())
}
