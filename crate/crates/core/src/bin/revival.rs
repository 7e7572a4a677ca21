use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use revival::harness::{dump_state, run_chsh, run_sweep, run_tomography, ScenarioConfig};
use revival::tomography::{counts_to_csv, parse_counts_csv, simulate_counts};
use revival::{Error, Result};

#[derive(Parser)]
#[command(
    name = "revival",
    version,
    about = "Entanglement collapse and revival in a non-Markovian dephasing channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration file (flat TOML with dotted keys)
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: fig2a, fig2b or bell
    #[arg(long)]
    preset: Option<String>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `tomography.seed`
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the evolution parameter and write a CSV table
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also write the ESD / revival crossing report as JSON
        #[arg(long)]
        crossings: Option<PathBuf>,
    },
    /// Write the model density matrix at one point as JSON
    State {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: f64,
    },
    /// Simulate 16-setting tomography and reconstruct by maximum likelihood
    Tomography {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        /// Reconstruct from this counts CSV instead of simulating
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Write the simulated counts CSV here
        #[arg(long)]
        counts_out: Option<PathBuf>,
        /// Overrides `tomography.n_per_setting`
        #[arg(long)]
        n_per_setting: Option<u64>,
        /// Use rounded expected counts instead of Poisson draws
        #[arg(long)]
        noiseless: bool,
    },
    /// CHSH value at the configured angles, the linear optimum and the algebraic maximum
    Chsh {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
    },
    /// Write the scenario spectrum as an `A_j, lambda_nm, sigma_nm` table
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(name)) => ScenarioConfig::preset(name)?,
        (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
    };
    if let Some(seed) = common.seed {
        cfg.tomography.seed = seed;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep { common, crossings } => {
            let cfg = load(&common)?;
            let result = run_sweep(&cfg)?;
            emit(common.out.as_deref(), &result.to_csv())?;
            if let Some(path) = crossings {
                emit(Some(&path), &json(&result.crossings))?;
            }
            for c in &result.crossings.crossings {
                eprintln!("{:?} at x = {:.4}", c.direction, c.x);
            }
        }
        Command::State { common, x } => {
            let cfg = load(&common)?;
            emit(common.out.as_deref(), &json(&dump_state(&cfg, x)?))?;
        }
        Command::Tomography {
            common,
            x,
            counts,
            counts_out,
            n_per_setting,
            noiseless,
        } => {
            let mut cfg = load(&common)?;
            if let Some(n) = n_per_setting {
                cfg.tomography.n_per_setting = n;
            }
            cfg.tomography.noiseless |= noiseless;
            let records = match &counts {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    Some(parse_counts_csv(&text)?)
                }
                None => None,
            };
            if let Some(path) = &counts_out {
                let simulated = match &records {
                    Some(r) => r.clone(),
                    None => {
                        let t = cfg.tomography;
                        simulate_counts(&cfg.model_state(x)?, t.n_per_setting, t.seed, t.noiseless)?
                    }
                };
                emit(Some(path), &counts_to_csv(&simulated))?;
            }
            let report = run_tomography(&cfg, x, records)?;
            emit(common.out.as_deref(), &json(&report))?;
        }
        Command::Chsh { common, x } => {
            let cfg = load(&common)?;
            emit(common.out.as_deref(), &json(&run_chsh(&cfg, x)?))?;
        }
        Command::Spectrum { common } => {
            let cfg = load(&common)?;
            emit(common.out.as_deref(), &cfg.spectrum.to_table())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
