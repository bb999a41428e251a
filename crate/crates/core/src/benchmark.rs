//! Replicated simulation benchmark: accuracy metrics, runtimes, scaling fits
//! and report tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use crate::analysis::{frobenius, nearest_rank_quantile};
use crate::chain::{ChainConfig, ChainResult};
use crate::cyclical_sampler::cyclical_run;
use crate::error::{Error, Result};
use crate::priors::{make_prior, PriorKind};
use crate::rand_dist::RngStream;
use crate::rt_sampler::rt_run;
use crate::simulation::{make_structure, sample_mvn_data, StructureKind, StructureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerKind {
    Rt,
    Cyclical,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 2] = [SamplerKind::Rt, SamplerKind::Cyclical];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Rt => "rt",
            SamplerKind::Cyclical => "cyclical",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rt" => Ok(SamplerKind::Rt),
            "cyclical" | "cyc" => Ok(SamplerKind::Cyclical),
            _ => Err(Error::Config(format!("unknown sampler '{s}' (expected rt or cyclical)"))),
        }
    }
}

/// The grid of cells to run and how to run each chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPlan {
    /// `(n, p)` pairs.
    pub dims: Vec<(usize, usize)>,
    pub structures: Vec<StructureKind>,
    pub priors: Vec<PriorKind>,
    pub replicates: usize,
    pub iterations: usize,
    pub burnin: usize,
    /// Per-chain limit on sampling time, in seconds.
    pub wall_clock_limit: f64,
    pub samplers: Vec<SamplerKind>,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl BenchmarkPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if !(self.wall_clock_limit > 0.0) {
            return Err(Error::Config(format!(
                "wall-clock limit must be positive, got {}",
                self.wall_clock_limit
            )));
        }
        if self.dims.is_empty() || self.structures.is_empty() || self.priors.is_empty() || self.samplers.is_empty() {
            return Err(Error::Config("benchmark plan has an empty axis".into()));
        }
        if self.replicates >= 1 << 24 {
            return Err(Error::Config("too many replicates".into()));
        }
        if let Some(&k) = self.priors.iter().find(|k| **k == PriorKind::Ghsl) {
            return Err(Error::Config(format!("{k} needs a plugin and cannot be benchmarked")));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        for &(n, p) in &self.dims {
            if n == 0 {
                return Err(Error::Config("sample size n must be at least 1".into()));
            }
            for &kind in &self.structures {
                StructureSpec::new(kind, p).validate()?;
            }
        }
        ChainConfig::new(self.iterations, self.burnin, 0).validate()
    }

    fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (di, &(n, p)) in self.dims.iter().enumerate() {
            for (si, &structure) in self.structures.iter().enumerate() {
                for (pi, &prior) in self.priors.iter().enumerate() {
                    for replicate in 0..self.replicates {
                        out.push(Cell {
                            data_cell: (di * self.structures.len() + si) as u64,
                            prior_index: pi as u64,
                            n,
                            p,
                            structure,
                            prior,
                            replicate,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    data_cell: u64,
    prior_index: u64,
    n: usize,
    p: usize,
    structure: StructureKind,
    prior: PriorKind,
    replicate: usize,
}

impl Cell {
    /// Data depend on `(dims, structure, replicate)` only, so every prior and
    /// sampler sees the same replicate data set.
    fn stream(&self, purpose: u64) -> u64 {
        (self.data_cell << 32) | ((self.replicate as u64) << 8) | purpose
    }

    fn chain_stream(&self, sampler: SamplerKind) -> u64 {
        let s = match sampler {
            SamplerKind::Rt => 0,
            SamplerKind::Cyclical => 1,
        };
        self.stream(1 + 2 * self.prior_index + s)
    }
}

/// One sampler run on one replicate data set.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub structure: StructureKind,
    pub prior: PriorKind,
    pub n: usize,
    pub p: usize,
    pub replicate: usize,
    pub sampler: SamplerKind,
    /// `‖Θ̂‖_F`.
    pub frob_theta: Option<f64>,
    /// `‖Θ̂ - Θ₀‖_F`.
    pub frob_err: Option<f64>,
    /// `‖Θ̂_RT - Θ̂_Cyc‖_F`, present when both samplers finished.
    pub frob_rt_vs_cyc: Option<f64>,
    /// Sampling-loop wall time.
    pub seconds: Option<f64>,
    pub iterations: usize,
    /// `seconds` over the mean time of the same sampler at the smallest `p`.
    pub relative_seconds: Option<f64>,
    pub timed_out: bool,
    pub error: Option<String>,
}

impl BenchmarkRecord {
    /// Amortized seconds per sweep.
    pub fn per_iteration_seconds(&self) -> Option<f64> {
        self.seconds.map(|s| s / self.iterations as f64)
    }

    fn sort_key(&self) -> (usize, usize, StructureKind, PriorKind, usize, SamplerKind) {
        (self.p, self.n, self.structure, self.prior, self.replicate, self.sampler)
    }
}

fn run_cell(plan: &BenchmarkPlan, cell: &Cell, master_seed: u64) -> Vec<BenchmarkRecord> {
    let blank = |sampler| BenchmarkRecord {
        structure: cell.structure,
        prior: cell.prior,
        n: cell.n,
        p: cell.p,
        replicate: cell.replicate,
        sampler,
        frob_theta: None,
        frob_err: None,
        frob_rt_vs_cyc: None,
        seconds: None,
        iterations: plan.iterations,
        relative_seconds: None,
        timed_out: false,
        error: None,
    };
    let setup = (|| {
        let theta0 = make_structure(&StructureSpec::new(cell.structure, cell.p))?;
        let y = sample_mvn_data(&theta0, cell.n, &mut RngStream::new(master_seed, cell.stream(0)))?;
        let prior = make_prior(cell.prior, None)?;
        Ok::<_, Error>((theta0, y, prior))
    })();
    let (theta0, y, prior) = match setup {
        Ok(v) => v,
        Err(e) => {
            return plan
                .samplers
                .iter()
                .map(|&s| BenchmarkRecord { error: Some(e.to_string()), ..blank(s) })
                .collect();
        }
    };
    let scatter = y.scatter();
    let mut records = Vec::new();
    let mut means = Vec::new();
    for &sampler in &plan.samplers {
        let mut cfg = ChainConfig::new(plan.iterations, plan.burnin, master_seed);
        cfg.stream = cell.chain_stream(sampler);
        cfg.store_draws = false;
        cfg.store_traces = false;
        cfg.time_limit_seconds = Some(plan.wall_clock_limit);
        let run: Result<ChainResult> = match sampler {
            SamplerKind::Rt => rt_run(&y, &prior, &cfg),
            SamplerKind::Cyclical => cyclical_run(&scatter, cell.n, &prior, &cfg),
        };
        let mut rec = blank(sampler);
        match run {
            Ok(r) => {
                rec.frob_theta = Some(r.posterior_mean.norm());
                rec.frob_err = frobenius(&r.posterior_mean, theta0.matrix()).ok();
                rec.seconds = Some(r.total_seconds);
                means.push((sampler, r.posterior_mean));
            }
            Err(Error::TimeLimit { .. }) => rec.timed_out = true,
            Err(e) => rec.error = Some(e.to_string()),
        }
        records.push(rec);
    }
    let rt = means.iter().find(|m| m.0 == SamplerKind::Rt);
    let cyc = means.iter().find(|m| m.0 == SamplerKind::Cyclical);
    if let (Some(a), Some(b)) = (rt, cyc) {
        let gap = frobenius(&a.1, &b.1).ok();
        for r in &mut records {
            r.frob_rt_vs_cyc = gap;
        }
    }
    records
}

/// Runs every `(dims, structure, prior, replicate)` cell on a worker pool.
///
/// Records come back sorted by `(p, n, structure, prior, replicate, sampler)`.
pub fn run_benchmark(plan: &BenchmarkPlan, master_seed: u64) -> Result<Vec<BenchmarkRecord>> {
    plan.validate()?;
    let cells = plan.cells();
    let workers = plan
        .threads
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
        .min(cells.len());
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, cells) = (&next, &cells);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                if tx.send(run_cell(plan, cell, master_seed)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut records: Vec<BenchmarkRecord> = rx.into_iter().flatten().collect();
    records.sort_by_key(BenchmarkRecord::sort_key);
    fill_relative(&mut records);
    Ok(records)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Mean raw seconds per `(sampler, p, n)` over finished records.
fn raw_means(records: &[BenchmarkRecord]) -> BTreeMap<(SamplerKind, usize, usize), f64> {
    let mut groups: BTreeMap<(SamplerKind, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(s) = r.seconds {
            groups.entry((r.sampler, r.p, r.n)).or_default().push(s);
        }
    }
    groups.into_iter().filter_map(|(k, v)| mean(&v).map(|m| (k, m))).collect()
}

/// Mean raw seconds of each sampler at its smallest finished `p`.
fn baselines(means: &BTreeMap<(SamplerKind, usize, usize), f64>) -> BTreeMap<SamplerKind, f64> {
    let mut out = BTreeMap::new();
    for (&(s, _, _), &m) in means {
        out.entry(s).or_insert(m);
    }
    out
}

fn fill_relative(records: &mut [BenchmarkRecord]) {
    let base = baselines(&raw_means(records));
    for r in records {
        r.relative_seconds = match (r.seconds, base.get(&r.sampler)) {
            (Some(s), Some(&b)) if b > 0.0 => Some(s / b),
            _ => None,
        };
    }
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Input("log-log fit needs at least two positive points".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|v| v.0).sum::<f64>() / k;
    let my = logs.iter().map(|v| v.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|v| (v.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("log-log fit needs distinct x values".into()));
    }
    Ok(logs.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum::<f64>() / sxx)
}

/// Slope of log median per-iteration seconds against `log p`.
pub fn fit_scaling_exponent(records: &[BenchmarkRecord], sampler: SamplerKind) -> Result<f64> {
    let mut by_p: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut ns = Vec::new();
    for r in records.iter().filter(|r| r.sampler == sampler) {
        if let Some(t) = r.per_iteration_seconds() {
            by_p.entry(r.p).or_default().push(t);
            if !ns.contains(&r.n) {
                ns.push(r.n);
            }
        }
    }
    if ns.len() > 1 {
        return Err(Error::Input(format!("{sampler} timings mix sample sizes {ns:?}")));
    }
    if by_p.len() < 3 {
        return Err(Error::Input(format!(
            "{sampler} has finished timings at {} distinct p, need at least 3",
            by_p.len()
        )));
    }
    let points: Vec<(f64, f64)> = by_p
        .into_iter()
        .map(|(p, mut ts)| (p as f64, nearest_rank_quantile(&mut ts, 0.5)))
        .collect();
    log_log_slope(&points)
}

/// One cell of a report table: estimate and Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: Option<f64>,
}

/// Mean, variance and quartiles of replicate values, in that order.
///
/// Variance and all standard errors are absent with a single replicate.
pub fn replicate_statistics(xs: &[f64]) -> [Option<Estimate>; 5] {
    let r = xs.len();
    if r == 0 {
        return [None; 5];
    }
    let rf = r as f64;
    let m = xs.iter().sum::<f64>() / rf;
    let var = (r > 1).then(|| xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (rf - 1.0));
    let sd = var.map(f64::sqrt);
    let quantile_se = |q: f64, x: f64| {
        sd.map(|s| {
            if s == 0.0 {
                return 0.0;
            }
            let z = (x - m) / s;
            let density = (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            (q * (1.0 - q) / rf).sqrt() / density
        })
    };
    let mut buf = xs.to_vec();
    let mut quart = |q: f64| {
        let x = nearest_rank_quantile(&mut buf, q);
        Some(Estimate { value: x, se: quantile_se(q, x) })
    };
    let (q1, q2, q3) = (quart(0.25), quart(0.5), quart(0.75));
    [
        Some(Estimate { value: m, se: sd.map(|s| s / rf.sqrt()) }),
        var.map(|v| Estimate { value: v, se: Some(v * (2.0 / (rf - 1.0)).sqrt()) }),
        q1,
        q2,
        q3,
    ]
}

pub const STATISTIC_NAMES: [&str; 5] = ["Mean", "Var", "25%", "50%", "75%"];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.16e}"))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes `metrics.csv`, `runtime.csv` and one `table_<structure>_<prior>.csv`
/// per structure and prior into `dir`, returning the paths written.
pub fn emit_report(records: &[BenchmarkRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();

    let mut metrics =
        String::from("structure,prior,n,p,replicate,sampler,frob_theta,frob_err,frob_rt_vs_cyc,seconds\n");
    for r in records {
        metrics.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.structure,
            r.prior,
            r.n,
            r.p,
            r.replicate,
            r.sampler,
            opt(r.frob_theta),
            opt(r.frob_err),
            opt(r.frob_rt_vs_cyc),
            opt(r.seconds)
        ));
    }
    let path = dir.join("metrics.csv");
    write_file(&path, &metrics)?;
    written.push(path);

    let means = raw_means(records);
    let base = baselines(&means);
    let mut cells: Vec<(SamplerKind, usize, usize)> = records.iter().map(|r| (r.sampler, r.p, r.n)).collect();
    cells.sort_unstable();
    cells.dedup();
    let mut runtime = String::from("sampler,p,n,raw_seconds_mean,relative_mean\n");
    for key in cells {
        let raw = means.get(&key).copied();
        let rel = match (raw, base.get(&key.0)) {
            (Some(m), Some(&b)) if b > 0.0 => Some(m / b),
            _ => None,
        };
        runtime.push_str(&format!("{},{},{},{},{}\n", key.0, key.1, key.2, opt(raw), opt(rel)));
    }
    let path = dir.join("runtime.csv");
    write_file(&path, &runtime)?;
    written.push(path);

    let mut tables: BTreeMap<(StructureKind, PriorKind), Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        tables.entry((r.structure, r.prior)).or_default().push(r);
    }
    for ((structure, prior), recs) in tables {
        let mut groups: BTreeMap<(usize, usize, SamplerKind), Vec<&BenchmarkRecord>> = BTreeMap::new();
        for r in recs {
            groups.entry((r.p, r.n, r.sampler)).or_default().push(r);
        }
        let mut body = String::from(
            "n,p,sampler,statistic,frob_theta,frob_theta_se,frob_err,frob_err_se,frob_rt_vs_cyc,frob_rt_vs_cyc_se\n",
        );
        for ((p, n, sampler), rs) in groups {
            let column = |f: fn(&BenchmarkRecord) -> Option<f64>| {
                let xs: Vec<f64> = rs.iter().filter_map(|r| f(r)).collect();
                replicate_statistics(&xs)
            };
            let cols = [column(|r| r.frob_theta), column(|r| r.frob_err), column(|r| r.frob_rt_vs_cyc)];
            for (i, name) in STATISTIC_NAMES.iter().enumerate() {
                body.push_str(&format!("{n},{p},{sampler},{name}"));
                for c in &cols {
                    body.push_str(&format!(",{},{}", opt(c[i].map(|e| e.value)), opt(c[i].and_then(|e| e.se))));
                }
                body.push('\n');
            }
        }
        let path = dir.join(format!("table_{structure}_{prior}.csv"));
        write_file(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}
