use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rvr_harness::error::{exit, HarnessError, Result};
use rvr_harness::{check_gradients, generate, grid_sweep, run_experiment, ExperimentConfig, GenParams, Instance, ProblemKind};

#[derive(Debug, Parser)]
#[command(name = "rvr", version, about = "Riemannian variance-reduced solvers: data, runs, oracles, sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset container.
    Gen {
        kind: ProblemKind,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: GenParams,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an experiment configuration; writes traces and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference check of the Riemannian gradient.
    CheckGrad {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 20)]
        directions: usize,
        #[arg(long, default_value_t = 1e-6)]
        t: f64,
    },
    /// Compute and certify the optimum; writes JSON.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-stage step-size and c_beta sweep; prints the tuned configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Also write the tuned configuration here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct Source {
    #[arg(long)]
    problem: ProblemKind,
    /// Load this dataset container instead of generating one.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    params: GenParams,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Source {
    fn instance(&self) -> Result<Instance> {
        Instance::build(self.problem, self.data.as_deref(), &self.params, self.seed)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { kind, out, params, seed } => {
            let data = generate(kind, &params, seed)?;
            data.save(&out)?;
            println!("wrote {} dataset to {}", kind.name(), out.display());
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg, Some(&out))?;
            for row in &report.summary {
                println!("{}", row.csv_line());
            }
            let diverged = report.diverged();
            if diverged > 0 {
                return Err(HarnessError::Diverged(diverged));
            }
        }
        Command::CheckGrad { source, points, directions, t } => {
            let instance = source.instance()?;
            let report = check_gradients(instance.problem(), points, directions, t, source.seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            report.require_passed()?;
        }
        Command::Oracle { source, out } => {
            let oracle = source.instance()?.oracle()?;
            write(&out, &serde_json::to_string_pretty(&oracle.to_json())?)?;
            println!(
                "{:?} oracle: cost {:e}, gradient norm {:e}, written to {}",
                oracle.method,
                oracle.cost,
                oracle.grad_norm,
                out.display()
            );
            oracle.require_certified()?;
        }
        Command::Sweep { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (etas, cs, alphas, betas) = rvr_harness::sweep::grids(&cfg.sweep.clone().unwrap_or_default())?;
            let outcome = grid_sweep(&cfg, &etas, &cs, (&alphas, &betas))?;
            for p in &outcome.points {
                eprintln!("{} {:?} -> {:e}", p.label, p.params, p.score);
            }
            let tuned = outcome.tuned_config(&cfg).to_toml();
            print!("{tuned}");
            if let Some(path) = out {
                write(&path, &tuned)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { exit::SUCCESS as u8 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
