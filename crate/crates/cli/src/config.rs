//! Command-line flags, the optional TOML config file, and their resolution.
//!
//! Every flag can also be set in the file given by `--config`, using the flag
//! name with dashes replaced by underscores. Flags win over the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use ggm_core::benchmark::SamplerKind;
use ggm_core::simulation::StructureKind;
use ggm_core::PriorKind;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ggm", version, about = "Gibbs samplers for sparse Gaussian graphical models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a true precision matrix and replicate data sets.
    Simulate(SimulateArgs),
    /// Run one chain on a CSV file or on freshly simulated data.
    Sample(SampleArgs),
    /// Run the replicate benchmark grid and write report tables.
    Benchmark(BenchmarkArgs),
    /// Recompute summaries from the draws stored by `sample`.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// tridiagonal, hubs, cliques_positive or cliques_negative.
    #[arg(long)]
    pub structure: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// n×p CSV of observations; excludes --structure.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Simulate data from this structure instead of reading --input.
    #[arg(long)]
    pub structure: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// ghs or bgl.
    #[arg(long)]
    pub prior: Option<String>,
    /// rt or cyclical.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Centre and scale every column to unit variance first.
    #[arg(long)]
    #[serde(default)]
    pub standardize: bool,
    /// Central credible mass used for the intervals and edge selection.
    #[arg(long)]
    pub ci: Option<f64>,
    #[arg(long)]
    pub limit_seconds: Option<f64>,
    /// Skip writing the packed draws file.
    #[arg(long)]
    #[serde(default)]
    pub no_draws: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Sample sizes: one value for all p, or one per p.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub structure: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub prior: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub sampler: Option<Vec<String>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Per-chain limit on sampling time.
    #[arg(long)]
    pub limit_seconds: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarizeArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory of a previous `sample` run.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub ci: Option<f64>,
    /// Defaults to the input directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn as_text<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn as_text_list<T: std::fmt::Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn load_file<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn parse<T: FromStr>(what: &str, s: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| CliError::config(format!("invalid {what} '{s}': {e}")))
}

fn required<T>(what: &str, v: Option<T>) -> CliResult<T> {
    v.ok_or_else(|| CliError::config(format!("--{what} is required")))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateConfig {
    #[serde(serialize_with = "as_text")]
    pub structure: StructureKind,
    pub n: usize,
    pub p: usize,
    pub replicates: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl SimulateConfig {
    pub fn resolve(cli: SimulateArgs) -> CliResult<Self> {
        let file: SimulateArgs = load_file(cli.config.as_deref())?;
        let replicates = cli.replicates.or(file.replicates).unwrap_or(1);
        if replicates == 0 {
            return Err(CliError::config("--replicates must be at least 1"));
        }
        Ok(Self {
            structure: parse("structure", &required("structure", cli.structure.or(file.structure))?)?,
            n: required("n", cli.n.or(file.n))?,
            p: required("p", cli.p.or(file.p))?,
            replicates,
            seed: cli.seed.or(file.seed).unwrap_or(0),
            out: required("out", cli.out.or(file.out))?,
        })
    }
}

/// Where `sample` gets its observations.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    File(PathBuf),
    Simulated {
        #[serde(serialize_with = "as_text")]
        structure: StructureKind,
        n: usize,
        p: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleConfig {
    pub source: DataSource,
    #[serde(serialize_with = "as_text")]
    pub prior: PriorKind,
    #[serde(serialize_with = "as_text")]
    pub sampler: SamplerKind,
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub standardize: bool,
    pub ci: f64,
    pub limit_seconds: Option<f64>,
    pub write_draws: bool,
    pub out: PathBuf,
}

fn check_ci(ci: f64) -> CliResult<f64> {
    if ci > 0.0 && ci < 1.0 {
        Ok(ci)
    } else {
        Err(CliError::config(format!("--ci must lie strictly between 0 and 1, got {ci}")))
    }
}

impl SampleConfig {
    pub fn resolve(cli: SampleArgs) -> CliResult<Self> {
        let file: SampleArgs = load_file(cli.config.as_deref())?;
        let input = cli.input.or(file.input);
        let structure = cli.structure.or(file.structure);
        let source = match (input, structure) {
            (Some(path), None) => DataSource::File(path),
            (None, Some(s)) => DataSource::Simulated {
                structure: parse("structure", &s)?,
                n: required("n", cli.n.or(file.n))?,
                p: required("p", cli.p.or(file.p))?,
            },
            (Some(_), Some(_)) => return Err(CliError::config("--input and --structure are mutually exclusive")),
            (None, None) => return Err(CliError::config("one of --input or --structure is required")),
        };
        let prior: PriorKind = parse("prior", cli.prior.or(file.prior).as_deref().unwrap_or("ghs"))?;
        if prior == PriorKind::Ghsl {
            return Err(CliError::config("prior ghsl needs a local-scale plugin; use ghs or bgl"));
        }
        Ok(Self {
            source,
            prior,
            sampler: parse("sampler", cli.sampler.or(file.sampler).as_deref().unwrap_or("rt"))?,
            iters: cli.iters.or(file.iters).unwrap_or(5000),
            burnin: cli.burnin.or(file.burnin).unwrap_or(1000),
            thin: cli.thin.or(file.thin).unwrap_or(1),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            standardize: cli.standardize || file.standardize,
            ci: check_ci(cli.ci.or(file.ci).unwrap_or(0.5))?,
            limit_seconds: cli.limit_seconds.or(file.limit_seconds),
            write_draws: !(cli.no_draws || file.no_draws),
            out: required("out", cli.out.or(file.out))?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkConfig {
    pub dims: Vec<(usize, usize)>,
    #[serde(serialize_with = "as_text_list")]
    pub structures: Vec<StructureKind>,
    #[serde(serialize_with = "as_text_list")]
    pub priors: Vec<PriorKind>,
    #[serde(serialize_with = "as_text_list")]
    pub samplers: Vec<SamplerKind>,
    pub replicates: usize,
    pub iters: usize,
    pub burnin: usize,
    pub limit_seconds: f64,
    pub threads: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

fn parse_list<T: FromStr>(what: &str, v: Option<Vec<String>>, default: &[&str]) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    match v {
        Some(items) => items.iter().map(|s| parse(what, s)).collect(),
        None => default.iter().map(|s| parse(what, s)).collect(),
    }
}

impl BenchmarkConfig {
    pub fn resolve(cli: BenchmarkArgs) -> CliResult<Self> {
        let file: BenchmarkArgs = load_file(cli.config.as_deref())?;
        let ps = cli.p.or(file.p).unwrap_or_else(|| vec![50, 100, 200]);
        let ns = cli.n.or(file.n).unwrap_or_else(|| vec![250]);
        let dims = match ns.len() {
            1 => ps.iter().map(|&p| (ns[0], p)).collect(),
            k if k == ps.len() => ns.into_iter().zip(ps).collect(),
            _ => return Err(CliError::config("--n needs one value or exactly one value per --p")),
        };
        Ok(Self {
            dims,
            structures: parse_list("structure", cli.structure.or(file.structure), &["tridiagonal"])?,
            priors: parse_list("prior", cli.prior.or(file.prior), &["ghs"])?,
            samplers: parse_list("sampler", cli.sampler.or(file.sampler), &["rt", "cyclical"])?,
            replicates: cli.replicates.or(file.replicates).unwrap_or(3),
            iters: cli.iters.or(file.iters).unwrap_or(200),
            burnin: cli.burnin.or(file.burnin).unwrap_or(100),
            limit_seconds: cli.limit_seconds.or(file.limit_seconds).unwrap_or(4.0 * 3600.0),
            threads: cli.threads.or(file.threads),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            out: required("out", cli.out.or(file.out))?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummarizeConfig {
    pub input: PathBuf,
    pub ci: f64,
    pub out: PathBuf,
}

impl SummarizeConfig {
    pub fn resolve(cli: SummarizeArgs) -> CliResult<Self> {
        let file: SummarizeArgs = load_file(cli.config.as_deref())?;
        let input = required("input", cli.input.or(file.input))?;
        Ok(Self {
            ci: check_ci(cli.ci.or(file.ci).unwrap_or(0.5))?,
            out: cli.out.or(file.out).unwrap_or_else(|| input.clone()),
            input,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "structure = \"hubs\"\nn = 40\np = 20\niters = 900\nprior = \"bgl\"\nout = \"x\"\n").unwrap();
        let cli = SampleArgs { config: Some(path), iters: Some(300), ..Default::default() };
        let cfg = SampleConfig::resolve(cli).unwrap();
        assert_eq!(cfg.iters, 300);
        assert_eq!(cfg.prior, PriorKind::Bgl);
        assert!(matches!(cfg.source, DataSource::Simulated { structure: StructureKind::Hubs, n: 40, p: 20 }));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(&path, "iterations = 5\n").unwrap();
        let cli = SampleArgs { config: Some(path), ..Default::default() };
        assert!(SampleConfig::resolve(cli).unwrap_err().message.contains("iterations"));
    }

    #[test]
    fn benchmark_dims_pair_a_single_n_with_every_p() {
        let cli = BenchmarkArgs {
            n: Some(vec![30]),
            p: Some(vec![10, 20]),
            out: Some("o".into()),
            ..Default::default()
        };
        assert_eq!(BenchmarkConfig::resolve(cli).unwrap().dims, vec![(30, 10), (30, 20)]);
        let bad = BenchmarkArgs {
            n: Some(vec![1, 2, 3]),
            p: Some(vec![10, 20]),
            out: Some("o".into()),
            ..Default::default()
        };
        assert!(BenchmarkConfig::resolve(bad).is_err());
    }
}
