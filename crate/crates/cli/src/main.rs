//! `portfolio`: backtests, parameter sweeps, single optimizations and
//! lottery evaluation for the HF/HE portfolio model.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::OptimizeArgs;
use config::{RunConfig, SolverChoice};
use failure::{Category, Failure};

#[derive(Parser)]
#[command(
    name = "portfolio",
    version,
    about = "HF/HE behavioral portfolio selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Multistart,
    Milp,
}

impl From<SolverArg> for SolverChoice {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Multistart => SolverChoice::Multistart,
            SolverArg::Milp => SolverChoice::Milp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rolling-window backtest of every configured strategy.
    Backtest {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// HF/HE backtests over a λ₊ × λ₋ grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// One optimization on a price file.
    Optimize {
        #[arg(long)]
        dataset: PathBuf,
        /// ew, minv, minmad, pt or hfhe.
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 0.30)]
        lambda_plus: f64,
        #[arg(long, default_value_t = 0.69)]
        lambda_minus: f64,
        #[arg(long, value_enum, default_value_t = SolverArg::Multistart)]
        solver: SolverArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multistart starts; `n + 33` by default.
        #[arg(long)]
        starts: Option<usize>,
        /// Optimize on the most recent N returns only.
        #[arg(long)]
        last: Option<usize>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// H values and risk attitude of a lottery given as `[[outcome, prob], ...]`.
    EvaluateLottery {
        #[arg(long)]
        json: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 0.30)]
        lambda_plus: f64,
        #[arg(long, default_value_t = 0.69)]
        lambda_minus: f64,
    },
}

fn load_config(path: &std::path::Path, output: Option<PathBuf>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = output {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Backtest { config, output } => {
            let cfg = load_config(&config, output)?;
            let table = commands::backtest(&cfg)?;
            print!("{}", table.to_markdown());
            eprintln!("wrote {}", cfg.output_dir.display());
        }
        Command::Sweep { config, output } => {
            let cfg = load_config(&config, output)?;
            print!("{}", commands::sweep(&cfg)?);
            eprintln!("wrote {}", cfg.output_dir.display());
        }
        Command::Optimize {
            dataset,
            strategy,
            lambda_plus,
            lambda_minus,
            solver,
            seed,
            starts,
            last,
            json,
        } => {
            if starts == Some(0) {
                return Err(Failure::new(
                    Category::Config,
                    "--starts must be at least 1",
                ));
            }
            let out = commands::optimize_cmd(&OptimizeArgs {
                dataset: &dataset,
                strategy: &strategy,
                lambda_plus,
                lambda_minus,
                solver: solver.into(),
                seed,
                starts,
                last,
            })?;
            if json {
                let text = serde_json::to_string_pretty(&out).map_err(Failure::output)?;
                println!("{text}");
            } else {
                print!("{}", out.to_text());
            }
        }
        Command::EvaluateLottery {
            json,
            q,
            lambda_plus,
            lambda_minus,
        } => {
            let text = std::fs::read_to_string(&json)
                .map_err(|e| Failure::new(Category::Data, format!("{}: {e}", json.display())))?;
            print!(
                "{}",
                commands::evaluate_lottery(&text, lambda_plus, lambda_minus, q)?
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.category.exit_code() as u8)
        }
    }
}
