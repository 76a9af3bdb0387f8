use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use leaklab_core::scenario::run_scenario;
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::reproduce::{reproduce, ReproductionTarget};
use crate::scenario_file::{apply_override, parse_override, read_json, to_config};
use crate::sweep::{run_sweep, Axis, SweepSpec, DEFAULT_MAX_CELLS};
use crate::write_file;

/// Bounds the sweep worker pool.
pub const THREADS_ENV: &str = "LEAKLAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "leaklab",
    version,
    about = "Inactivity-leak analysis and finality-protocol scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regenerate the dataset behind a table or figure and compare it with the published values.
    Reproduce {
        target: ReproductionTarget,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one scenario file. Exit status: 0 safe, 10 conflicting finalization,
    /// 11 Byzantine share above 1/3, 12 both.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a scenario field, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the cartesian product of the axes over a scenario template.
    Sweep {
        /// `key=start:stop:step` (stop inclusive) or `key=v1,v2,...`; repeatable.
        #[arg(long = "axis", value_name = "SPEC", required = true)]
        axes: Vec<String>,
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Root seed for the per-cell seeds; defaults to the template's.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MAX_CELLS)]
        max_cells: u64,
        /// Keep every n-th epoch in sweep.csv.
        #[arg(long, default_value_t = 1)]
        every: u64,
    },
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Reproduce { target, out } => {
            let report = reproduce(target, &out)?;
            for line in &report.lines {
                println!("{line}");
            }
            Ok(0)
        }
        Command::Simulate {
            file,
            out,
            seed,
            overrides,
        } => simulate(&file, &out, seed, &overrides),
        Command::Sweep {
            axes,
            template,
            out,
            seed,
            max_cells,
            every,
        } => {
            let spec = SweepSpec {
                axes: axes.iter().map(|a| Axis::parse(a)).collect::<Result<_>>()?,
                template: read_json(&template)?,
                root_seed: seed,
                max_cells,
                every,
            };
            let pool = thread_pool()?;
            let report = pool.install(|| run_sweep(&spec, &out))?;
            println!("{} cells written to {}", report.cells, out.display());
            Ok(0)
        }
    }
}

fn simulate(file: &Path, out: &Path, seed: Option<u64>, overrides: &[String]) -> Result<u8> {
    let mut doc = read_json(file)?;
    for spec in overrides {
        let (key, value) = parse_override(spec)?;
        apply_override(&mut doc, &key, value)?;
    }
    if let Some(seed) = seed {
        apply_override(&mut doc, "seed", Value::from(seed))?;
    }
    let cfg = to_config(doc)?;
    let outcome = run_scenario(&cfg)?;

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(&out.join("metrics.csv"), &outcome.metrics_csv())?;
    write_file(&out.join("events.jsonl"), &outcome.events_jsonl())?;
    let summary = serde_json::to_string_pretty(&outcome.summary_json()).expect("summary serializes");
    write_file(&out.join("summary.json"), &(summary + "\n"))?;
    if !outcome.snapshots.is_empty() {
        write_file(&out.join("snapshots.csv"), &outcome.snapshots_csv())?;
    }

    match outcome.verdict.epoch_of_violation {
        Some(e) => println!("conflicting finalization at epoch {e}"),
        None => println!("no conflicting finalization through epoch {}", outcome.final_epoch),
    }
    if let Some(e) = outcome.byz_over_third_epoch {
        println!("Byzantine share above 1/3 at epoch {e}");
    }
    println!("peak Byzantine share {:.6}", outcome.peak_byz_share);
    Ok(outcome.exit_code() as u8)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Invalid(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn targets_parse_by_kebab_name() {
        let cli = Cli::try_parse_from(["leaklab", "reproduce", "fig-beta-region", "--out", "x"]).unwrap();
        assert!(matches!(
            cli.command,
            Command::Reproduce {
                target: ReproductionTarget::FigBetaRegion,
                ..
            }
        ));
        assert!(Cli::try_parse_from(["leaklab", "reproduce", "table4", "--out", "x"]).is_err());
    }

    #[test]
    fn sweep_requires_an_axis() {
        assert!(Cli::try_parse_from(["leaklab", "sweep", "--template", "t.json", "--out", "x"]).is_err());
    }
}
