//! `lab`: scenario runner for the cocycle laboratory.
//!
//! `lab run <config.json>` executes one verification scenario and writes a
//! JSON report (plus CSV traces where the scenario produces them); the exit
//! status is 0 when every check passes, 2 on a check failure and 1 on an
//! input error. `lab sweep <config.json>` emits the bifurcation sweep CSV.

mod scenario;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use scenario::{load_config, run_scenario, sweep_csv, Outcome, RunOptions, ScenarioConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const DEFAULT_N_MAX: u32 = 64;

#[derive(Parser)]
#[command(
    name = "lab",
    about = "Runs verification scenarios for cocycle domination, rotation paths, transition products and the affine tangency unfolding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its report files.
    Run {
        /// Scenario config (JSON).
        config: PathBuf,
        /// Output path prefix (overrides the config's `output`).
        #[arg(long)]
        out: Option<String>,
        /// Seed for randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Horizon for domination / admissibility scans
        /// (overrides LAB_N_MAX; default 64).
        #[arg(long)]
        n_max: Option<u32>,
    },
    /// Write the CSV of an unfolding-sweep config.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<String>,
    },
}

fn horizon(flag: Option<u32>) -> Result<u32> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("LAB_N_MAX") {
        Ok(text) => text
            .parse::<u32>()
            .map_err(|_| anyhow!("LAB_N_MAX must be a positive integer, got {text:?}")),
        Err(_) => Ok(DEFAULT_N_MAX),
    }
}

fn output_prefix(cfg: &ScenarioConfig, flag: &Option<String>, config_path: &Path) -> String {
    flag.clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| {
            config_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "lab-out".to_string())
        })
}

fn write_output(prefix: &str, suffix: &str, content: &str) -> Result<PathBuf> {
    let path = PathBuf::from(format!("{prefix}.{suffix}"));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    std::fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn emit(outcome: &Outcome, prefix: &str) -> Result<()> {
    let mut report_text = serde_json::to_string_pretty(&outcome.report)?;
    report_text.push('\n');
    let report_path = write_output(prefix, "report.json", &report_text)?;
    println!("report: {}", report_path.display());
    for (suffix, content) in &outcome.extra_files {
        let path = write_output(prefix, suffix, content)?;
        println!("wrote: {}", path.display());
    }
    Ok(())
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            n_max,
        } => {
            let cfg = load_config(&config)?;
            let opts = RunOptions {
                seed,
                n_max: horizon(n_max)?,
            };
            let outcome = run_scenario(&cfg, &opts)?;
            let prefix = output_prefix(&cfg, &out, &config);
            emit(&outcome, &prefix)?;
            println!(
                "scenario {}: {}",
                cfg.kind,
                if outcome.pass { "PASS" } else { "FAIL" }
            );
            Ok(outcome.pass)
        }
        Command::Sweep { config, out } => {
            let cfg = load_config(&config)?;
            if cfg.kind != "unfolding-sweep" {
                return Err(anyhow!(
                    "lab sweep expects an unfolding-sweep config, got {:?}",
                    cfg.kind
                ));
            }
            let opts = RunOptions {
                seed: 0,
                n_max: horizon(None)?,
            };
            let (csv, rows) = sweep_csv(&cfg.params, &opts)?;
            let prefix = output_prefix(&cfg, &out, &config);
            let path = write_output(&prefix, "sweep.csv", &csv)?;
            println!("wrote: {} ({rows} rows)", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
