use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use asp_cli::{cmd_check, cmd_measure, cmd_ppda, cmd_simulate, cmd_solve, Flags, Outcome, SimulateFlags};
use asp_core::ppda::ExportFormat;
use asp_core::semantics::TreePolicy;
use clap::{Args, Parser, Subcommand};

/// Almost-sure productivity analysis of probabilistic stream and tree
/// definitions.
#[derive(Parser)]
#[command(name = "asp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide almost-sure productivity of every definition.
    Check {
        files: Vec<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Skip the simulation tier.
        #[arg(long)]
        no_tier3: bool,
        /// Also simulate definitions the exact analysis decided.
        #[arg(long)]
        confirm: bool,
        /// Include per-definition wall-clock times in the JSON report.
        #[arg(long)]
        timing: bool,
    },
    /// Print the syntactic measure of every definition.
    Measure {
        files: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo statistics of the output behaviour.
    Simulate {
        files: Vec<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Tree direction policy: `uniform` or a word such as `(LR)^w`.
        #[arg(long, default_value = "uniform")]
        policy: TreePolicy,
        /// Print the first N events of one sampled run.
        #[arg(long, default_value_t = 0)]
        trace: usize,
    },
    /// Export the pushdown automaton of every definition.
    Ppda {
        files: Vec<PathBuf>,
        /// `graphviz` or `json`.
        #[arg(long, default_value = "graphviz")]
        format: ExportFormat,
    },
    /// Solve the return-probability equations and classify excursion heads.
    Solve {
        files: Vec<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
}

#[derive(Args)]
struct AnalysisArgs {
    /// Convergence threshold of the numeric solvers.
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// Iteration cap of the Kleene solver.
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 200)]
    mc_runs: usize,
    #[arg(long, default_value_t = 10_000)]
    mc_horizon: usize,
    #[arg(long, default_value_t = 0xA5F)]
    seed: u64,
    /// SMT solver executable for heads the exact analysis cannot decide.
    #[arg(long, env = "ASP_SMT_SOLVER")]
    smt_solver: Option<PathBuf>,
    /// Maximum number of definitions analyzed in parallel (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    json: bool,
}

impl AnalysisArgs {
    fn flags(self) -> Flags {
        Flags {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            mc_runs: self.mc_runs,
            mc_horizon: self.mc_horizon,
            seed: self.seed,
            smt_solver: self.smt_solver,
            json: self.json,
            jobs: self.jobs,
            ..Flags::default()
        }
    }
}

fn main() -> ExitCode {
    let outcome: Outcome = match Cli::parse().command {
        Command::Check { files, analysis, no_tier3, confirm, timing } => {
            let flags = Flags { no_tier3, confirm, timing, ..analysis.flags() };
            cmd_check(&files, &flags)
        }
        Command::Measure { files, json } => cmd_measure(&files, json),
        Command::Simulate { files, analysis, policy, trace } => {
            cmd_simulate(&files, &SimulateFlags { flags: analysis.flags(), policy, trace })
        }
        Command::Ppda { files, format } => cmd_ppda(&files, format),
        Command::Solve { files, analysis } => cmd_solve(&files, &analysis.flags()),
    };
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}
