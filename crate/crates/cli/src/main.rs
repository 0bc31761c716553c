use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use hannrx::scenario::{self, output, preset, RunMode, ScenarioConfig};

#[derive(Parser)]
#[command(name = "hannrx", version, about = "Hann-windowed OFDM receiver link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the CSV curves, audit and manifest.
    Run {
        /// TOML scenario file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in scenario (paper-shape, paper-full).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Only write the operation-count audit.
        #[arg(long, conflicts_with = "psd_only")]
        audit: bool,
        /// Only write the PSD curves.
        #[arg(long)]
        psd_only: bool,
    },
    /// Print a built-in scenario as TOML.
    Preset { name: String },
}

fn load(config: Option<PathBuf>, preset_name: Option<String>) -> Result<ScenarioConfig> {
    match (config, preset_name) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(ScenarioConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?)
        }
        (None, Some(name)) => Ok(preset(&name)?),
        _ => bail!("exactly one of --config or --preset is required"),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Preset { name } => {
            print!("{}", preset(&name)?.to_toml()?);
        }
        Command::Run {
            config,
            preset,
            out,
            trials,
            seed,
            audit,
            psd_only,
        } => {
            let mut cfg = load(config, preset)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            cfg.validate()?;
            let mode = if audit {
                RunMode::AuditOnly
            } else if psd_only {
                RunMode::PsdOnly
            } else {
                RunMode::Full
            };
            let manifest = scenario::run_to_dir(&cfg, &out, mode)?;
            if mode == RunMode::AuditOnly {
                print!("{}", scenario::audit_report(&cfg)?);
            }
            if mode == RunMode::Full {
                let rows = output::read_ber_csv(&out.join(output::BER_FILE))?;
                println!("{:<16} {:>7} {:>4} {:>10} {:>10}", "receiver", "snr_db", "it", "ber", "sinr_db");
                for r in rows {
                    println!("{:<16} {:>7} {:>4} {:>10} {:>10}", r.receiver, r.snr_db, r.iteration, r.ber, r.sinr_db);
                }
            }
            eprintln!(
                "{} trials run, {} resumed, {:.1} s; wrote {} to {}",
                manifest.trials_run,
                manifest.trials_resumed,
                manifest.wall_time_s,
                manifest.outputs.join(", "),
                out.display()
            );
        }
    }
    Ok(())
}
