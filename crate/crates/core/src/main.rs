use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qembed::config::RunConfig;
use qembed::pipeline::{self, EvalMode};
use qembed::Error;

#[derive(Parser)]
#[command(name = "qembed", version, about = "Learn an effective-reservoir model from qubit measurements and train a controller on it")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a measurement trajectory from the spin-boson simulator.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Trajectory CSV; metadata and Bloch trace go next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an embedding model to a trajectory.
    Learn {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Model JSON; the training curve goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an actor-critic controller on a learned model.
    Control {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Policy JSON; the episode curve goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a policy on the learned model or the true simulator.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Model)]
        mode: Mode,
        /// Metrics CSV; the per-step log of episode 0 goes next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Model,
    True,
}

fn load(path: &Option<PathBuf>) -> qembed::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> qembed::Result<()> {
    match cli.cmd {
        Cmd::Simulate { config, out } => {
            let cfg = load(&config)?;
            let traj = pipeline::simulate(&cfg, &out)?;
            println!("wrote {} measurements to {}", traj.len(), out.display());
        }
        Cmd::Learn { config, data, out } => {
            let cfg = load(&config)?;
            let (_, report) = pipeline::learn(&cfg, &data, &out)?;
            let last = report.log_geo_mean.last().copied().unwrap_or(f64::NAN);
            println!(
                "stop_reason={:?} epochs={} log_geo_mean_p={last}",
                report.stop_reason, report.epochs_run
            );
        }
        Cmd::Control { config, model, out } => {
            let cfg = load(&config)?;
            let (_, curve) = pipeline::control(&cfg, &model, &out)?;
            let tail = &curve[curve.len().saturating_sub(100)..];
            let mean = tail.iter().map(|e| e.ret).sum::<f64>() / tail.len().max(1) as f64;
            println!("episodes={} mean_return_last_100={mean}", curve.len());
        }
        Cmd::Evaluate {
            config,
            policy,
            model,
            mode,
            out,
            jobs,
        } => {
            let cfg = load(&config)?;
            let mode = match mode {
                Mode::Model => EvalMode::Model,
                Mode::True => EvalMode::True,
            };
            let (_, summary) = pipeline::evaluate(&cfg, &policy, &model, mode, &out, jobs)?;
            println!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match &e {
                Error::Config(_) => 2,
                e if e.is_numerical() => 3,
                _ => 1,
            };
            let module = match &e {
                Error::Config(_) => "config",
                Error::Io(_) | Error::Json(_) | Error::Csv(_) => "io",
                Error::ImpossibleSequence { .. } => "learner",
                _ => "numerics",
            };
            eprintln!("error [{module}]: {e}");
            ExitCode::from(code)
        }
    }
}
