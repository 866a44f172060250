use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ferrysim::experiment::{self, DelayTableParams, ExperimentConfig, LambdaGrid};
use ferrysim::model::RateModel;

#[derive(Parser)]
#[command(
    name = "ferrysim",
    version,
    about = "Message-ferrying robot network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration (its sweep, if any, is ignored).
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: RunFlags,
    },
    /// Run every point of the configuration's sweep.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: RunFlags,
    },
    /// Compare closed-form and simulated delay for a single ferried flow.
    DelayTable(DelayArgs),
    /// Capacity region queries.
    Capacity {
        #[command(subcommand)]
        op: CapacityOp,
    },
}

#[derive(Args)]
struct RunFlags {
    /// CSV destination; overrides the config. `-` writes to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Horizon in epochs; overrides the config.
    #[arg(long)]
    horizon: Option<usize>,
    /// Seed for random robot placement; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DelayArgs {
    /// Source to sink distance.
    #[arg(long, default_value_t = 10.0)]
    d: f64,
    /// Robot speeds.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
    v: Vec<f64>,
    /// Epoch lengths.
    #[arg(long = "T", value_delimiter = ',', default_values_t = [10usize, 20, 40])]
    epoch_len: Vec<usize>,
    /// Arrival rates as fractions of each point's maximum stable rate.
    #[arg(long, value_delimiter = ',', conflicts_with = "lambda")]
    fractions: Option<Vec<f64>>,
    /// Absolute arrival rates.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    r_max: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    #[arg(long, default_value_t = 8)]
    substeps: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CapacityOp {
    /// Report membership of a rate vector in the capacity region, its closure
    /// and (given d, v and T) the transit-aware inner bound.
    Check {
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long)]
        robots: usize,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        #[arg(long, requires_all = ["v", "epoch_len"])]
        d: Option<f64>,
        #[arg(long)]
        v: Option<f64>,
        #[arg(long = "T")]
        epoch_len: Option<f64>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> ferrysim::Result<()> {
    match cli.command {
        Command::Run { config, common } => {
            let mut cfg = configure(&config, &common)?;
            cfg.sweep = None;
            let rows = experiment::run_experiment(&cfg)?;
            emit(&rows, cfg.output.as_deref())
        }
        Command::Sweep { config, common } => {
            let cfg = configure(&config, &common)?;
            if cfg.sweep.is_none() {
                return Err(ferrysim::Error::Config(
                    "configuration has no `sweep` section".into(),
                ));
            }
            let rows = experiment::run_experiment(&cfg)?;
            emit(&rows, cfg.output.as_deref())
        }
        Command::DelayTable(a) => {
            let lambdas = match (a.fractions, a.lambda) {
                (_, Some(l)) => LambdaGrid::Absolute(l),
                (Some(f), None) => LambdaGrid::FractionsOfMax(f),
                (None, None) => DelayTableParams::default().lambdas,
            };
            let params = DelayTableParams {
                d: a.d,
                velocities: a.v,
                epoch_lens: a.epoch_len,
                lambdas,
                rate_model: RateModel::new(a.r_max, a.c, a.eta)?,
                horizon_epochs: a.horizon,
                substeps: a.substeps,
                ..Default::default()
            };
            let rows = experiment::delay_table(&params)?;
            emit(&rows, a.output.as_deref())
        }
        Command::Capacity {
            op:
                CapacityOp::Check {
                    lambda,
                    robots,
                    r_max,
                    d,
                    v,
                    epoch_len,
                },
        } => {
            let transit = d.map(|d| (d, v.unwrap_or(f64::NAN), epoch_len.unwrap_or(f64::NAN)));
            let report = experiment::capacity_report(&lambda, robots, r_max, transit);
            print!("{report}");
            Ok(())
        }
    }
}

fn configure(path: &Path, flags: &RunFlags) -> ferrysim::Result<ExperimentConfig> {
    let mut text = std::fs::read_to_string(path)?;
    if let Some(seed) = flags.seed {
        // Placement is resolved while parsing, so the seed goes in before.
        let mut v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ferrysim::Error::Config(e.to_string()))?;
        if let Some(obj) = v.as_object_mut() {
            obj.insert("seed".into(), seed.into());
        }
        text = v.to_string();
    }
    let mut cfg = experiment::parse_config(&text, path.parent())?;
    if let Some(h) = flags.horizon {
        if h < 4 {
            return Err(ferrysim::Error::Config(format!(
                "horizon must be >= 4, got {h}"
            )));
        }
        cfg.horizon_epochs = h;
    }
    if let Some(o) = &flags.output {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

fn emit<T: Serialize>(rows: &[T], output: Option<&Path>) -> ferrysim::Result<()> {
    match output {
        Some(p) if p != Path::new("-") => experiment::write_csv(rows, File::create(p)?),
        _ => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            experiment::write_csv(rows, &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}
