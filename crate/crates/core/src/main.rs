use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stefan_core::runner::{stefan_table, Command, RunOptions, Runner};

#[derive(Parser, Debug)]
#[command(name = "stefan-lab", version, about = "Regularized Stefan problem lab")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Store every k-th time step; overrides `output.stride`.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct WithCheckpoint {
    #[command(flatten)]
    common: Common,
    /// Analyse a stored field instead of solving.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve the configured problem.
    Solve(Common),
    /// Oscillation decay and modulus fits at the configured anchors.
    Measure(WithCheckpoint),
    /// Energy estimate sides for the configured levels and cutoffs.
    EnergyCheck(WithCheckpoint),
    /// Iterate the configured recurrences.
    Recur(Common),
    /// Equicontinuity sweep over `problem.eps_list`.
    Sweep(Common),
    /// Closed-form reference solutions.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Solve and run every configured analysis.
    Run(Common),
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// One-phase similarity solution.
    Stefan1d {
        #[arg(long, default_value_t = 1.0)]
        wall_temperature: f64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// Comma-separated output times.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,1")]
        times: Vec<f64>,
        /// Write `stefan1d.csv` here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cmd: Command, common: Common, checkpoint: Option<PathBuf>) -> ExitCode {
    let opts = RunOptions { out: common.out, seed: common.seed, stride: common.stride, checkpoint };
    let result = Runner::load(&common.config, opts).and_then(|mut r| r.execute(cmd));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stefan-lab {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Solve(c) => run(Command::Solve, c, None),
        Cmd::Measure(w) => run(Command::Measure, w.common, w.checkpoint),
        Cmd::EnergyCheck(w) => run(Command::EnergyCheck, w.common, w.checkpoint),
        Cmd::Recur(c) => run(Command::Recur, c, None),
        Cmd::Sweep(c) => run(Command::Sweep, c, None),
        Cmd::Run(c) => run(Command::Run, c, None),
        Cmd::Oracle(OracleCmd::Stefan1d { wall_temperature, nu, times, out }) => {
            let table = match stefan_table(wall_temperature, nu, &times) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("stefan-lab oracle: {e}");
                    return ExitCode::from(2);
                }
            };
            match out {
                None => {
                    print!("{}", table.as_str());
                    ExitCode::SUCCESS
                }
                Some(dir) => match std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("stefan1d.csv"), table.as_str())) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("stefan-lab oracle: {e}");
                        ExitCode::from(1)
                    }
                },
            }
        }
    }
}
