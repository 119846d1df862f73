//! `cscf` — consequence-aware sequential counterfactual search.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use cscf_cli::commands::{
    cmd_compare_costs, cmd_flows, cmd_oracle, cmd_probe_positions, cmd_run, cmd_train,
    RunOverrides,
};

#[derive(Debug, Parser)]
#[command(
    name = "cscf",
    version,
    about = "Pareto-optimal sequences of actions that flip a classifier's decision"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize every instance of a problem file with the genetic search.
    Run(RunArgs),
    /// Exhaustively enumerate the exact Pareto front (small problems only).
    Oracle(OracleArgs),
    /// Compare per-instance minimum costs between two sets of front files.
    CompareCosts(CompareArgs),
    /// Aggregate action-position flow counts over front files.
    Flows(FlowsArgs),
    /// Replay fronts and report class probabilities after each step.
    ProbePositions(ProbeArgs),
    /// Train a logistic-regression classifier from a labelled CSV.
    Train(TrainArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Problem definition file (JSON).
    problem: PathBuf,
    /// Output directory for front, stats and manifest files.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Run only this seed (overrides the file's seed list).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of generations.
    #[arg(long)]
    generations: Option<usize>,
    /// Override the population size.
    #[arg(long)]
    population: Option<usize>,
    /// Disable consequential discounting (plain effort costs).
    #[arg(long)]
    no_discount: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Problem definition file (JSON).
    problem: PathBuf,
    /// Output directory for front and manifest files.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Disable consequential discounting (plain effort costs).
    #[arg(long)]
    no_discount: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Front files of side A.
    #[arg(long = "a", required = true, num_args = 1..)]
    side_a: Vec<PathBuf>,
    /// Front files of side B.
    #[arg(long = "b", required = true, num_args = 1..)]
    side_b: Vec<PathBuf>,
    /// Only consider solutions with at most this many steps.
    #[arg(long, default_value_t = usize::MAX)]
    max_length: usize,
    /// Output CSV path (stdout when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FlowsArgs {
    /// Front files to aggregate.
    #[arg(required = true, num_args = 1..)]
    fronts: Vec<PathBuf>,
    /// Output JSON path (stdout when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// Problem definition file the fronts were produced from.
    problem: PathBuf,
    /// Front files to replay.
    #[arg(required = true, num_args = 1..)]
    fronts: Vec<PathBuf>,
    /// Output JSON path (stdout when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Feature schema (JSON array of feature definitions).
    #[arg(long)]
    schema: PathBuf,
    /// Training data CSV (feature columns plus a label column).
    #[arg(long)]
    data: PathBuf,
    /// Name of the label column (values 0/1/true/false).
    #[arg(long, default_value = "label")]
    label: String,
    /// Output model file.
    #[arg(short, long)]
    out: PathBuf,
    /// Gradient-descent steps.
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Gradient-descent learning rate.
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    /// Weight-initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("CSCF_THREADS") {
        let n: usize = raw
            .parse()
            .with_context(|| format!("CSCF_THREADS=`{raw}` is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Run(args) => {
            let overrides = RunOverrides {
                seed: args.seed,
                generations: args.generations,
                population: args.population,
                no_discount: args.no_discount,
            };
            cmd_run(&args.problem, &args.out, &overrides)
        }
        Command::Oracle(args) => cmd_oracle(&args.problem, &args.out, args.no_discount),
        Command::CompareCosts(args) => cmd_compare_costs(
            &args.side_a,
            &args.side_b,
            args.max_length,
            args.out.as_deref(),
        ),
        Command::Flows(args) => cmd_flows(&args.fronts, args.out.as_deref()),
        Command::ProbePositions(args) => {
            cmd_probe_positions(&args.problem, &args.fronts, args.out.as_deref())
        }
        Command::Train(args) => cmd_train(
            &args.schema,
            &args.data,
            &args.label,
            &args.out,
            args.steps,
            args.learning_rate,
            args.seed,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
