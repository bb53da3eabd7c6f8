use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use chlab::config::parse_config;
use chlab::experiments::{cmd_criterion, cmd_selftest, cmd_simulate, cmd_sweep};

/// Pseudospectral laboratory for a coupled periodic Camassa-Holm system:
/// simulation, wave-breaking diagnostics and blowup-criterion evaluation.
#[derive(Parser)]
#[command(name = "chlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system and write run.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's `output` key).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the blowup criterion on the initial data and write report.json.
    Criterion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan one bump parameter and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized numerical invariant suite.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(config: &PathBuf) -> Result<chlab::config::RunConfig> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))?;
    parse_config(&text).with_context(|| format!("parsing {}", config.display()))
}

fn out_dir(cfg: &chlab::config::RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&cfg.output))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let summary = cmd_simulate(&cfg, &dir)?;
            println!(
                "terminated: {} at t = {:.6e} (energy drift {:.3e})",
                serde_json::to_string(&summary.termination)?.trim_matches('"'),
                summary.final_t,
                summary.energy_drift
            );
            if let (Some(bt), Some(loc)) = (summary.break_time, summary.break_location) {
                println!("breaking at t = {bt:.6e}, x = {loc:.6}");
            }
            if let Some(ts) = summary.criterion.tstar {
                println!("predicted bound T* = {ts:.6e}");
            }
            println!("outputs in {}", dir.display());
        }
        Command::Criterion { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let report = cmd_criterion(&cfg, &dir)?;
            println!(
                "satisfied: {} (x0 = {:.6}, margin = {:.6e}, K = {:.6e})",
                report.satisfied, report.x0, report.margin, report.k
            );
            if let (Some(ts), Some((lo, hi))) = (report.tstar, report.interval) {
                println!("T* = {ts:.6e}, interval = ({lo:.6}, {hi:.6})");
            }
            println!("report in {}", dir.display());
        }
        Command::Sweep { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let rows = cmd_sweep(&cfg, &dir)?;
            let hits = rows.iter().filter(|r| r.satisfied).count();
            println!("{} of {} members satisfy the criterion", hits, rows.len());
            println!("table in {}", dir.display());
        }
        Command::Selftest { seed } => {
            cmd_selftest(seed, std::io::stdout().lock())?;
        }
    }
    Ok(())
}
