use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use siting_core::fixture::PRESETS;
use siting_core::{FactorTable, Fixture, ScenarioConfig, SitingError};

#[derive(Parser)]
#[command(name = "siting", version = version_string(), about = "Coupled siting and life cycle impact simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Screen and site a portfolio on a grid, writing reports to --out.
    Simulate {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        portfolio: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Portfolio-level inventory and regional screening without siting.
    Screen {
        #[arg(long)]
        portfolio: PathBuf,
        /// CSV with `dimension,limit` rows.
        #[arg(long)]
        limits: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic grid, portfolio and scenario.
    GenFixture {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn version_string() -> &'static str {
    let text = format!(
        "{} (factors {})",
        env!("CARGO_PKG_VERSION"),
        FactorTable::embedded().version()
    );
    Box::leak(text.into_boxed_str())
}

fn run(cli: Cli) -> Result<(), SitingError> {
    match cli.command {
        Command::Simulate {
            grid,
            portfolio,
            scenario,
            out,
            seed,
        } => {
            let report = siting_core::simulate(&grid, &portfolio, &scenario, &out, seed)?;
            for r in &report.records {
                println!(
                    "{}\t{}\t{}\t{}",
                    r.pathway,
                    r.cell_id
                        .map(|c| c.to_string())
                        .unwrap_or_else(|| "-".into()),
                    r.deployed_capacity,
                    r.trace_string()
                );
            }
            for line in &report.residuals {
                println!("{line}");
            }
        }
        Command::Screen {
            portfolio,
            limits,
            scenario,
            out,
        } => {
            let scenario = match scenario {
                Some(p) => ScenarioConfig::load(p)?,
                None => ScenarioConfig::default(),
            };
            let report = siting_core::screen_only(&portfolio, limits.as_deref(), &scenario, &out)?;
            println!("scale={} {}", report.scale, report.binding_summary());
        }
        Command::GenFixture { preset, seed, out } => {
            Fixture::preset(&preset, seed)?.write(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error kind={} message={message:?}", e.kind());
            ExitCode::from(2)
        }
    }
}
