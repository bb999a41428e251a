//! `ggm`: simulate data, run samplers, benchmark them and summarize stored draws.
//!
//! Exit status: 0 success, 2 configuration error, 3 data error, 4 numeric failure.

mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;

use config::{BenchmarkConfig, Cli, Command, SampleConfig, SimulateConfig, SummarizeConfig};
use error::CliResult;

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(&SimulateConfig::resolve(a)?),
        Command::Sample(a) => commands::sample(&SampleConfig::resolve(a)?),
        Command::Benchmark(a) => commands::benchmark(&BenchmarkConfig::resolve(a)?),
        Command::Summarize(a) => commands::summarize(&SummarizeConfig::resolve(a)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ggm: {e}");
            e.exit_code()
        }
    }
}
