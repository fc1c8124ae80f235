//! Command-line front end: generate starting graphs, run or sweep
//! experiments, and drive the verification suites.

pub mod artifacts;
pub mod manifest;
pub mod verify;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use regnet::{generate, EngineError, GenKind, GenSpec, TopologyError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys, or parameter values; exit code 1.
    #[error("{0}")]
    Usage(String),
    /// IO or simulation failure on valid usage; exit code 2.
    #[error("{0}")]
    Runtime(String),
    /// A suite ran to completion and rejected a claim; exit code 3. The
    /// JSON report carries the details.
    #[error("verification failed")]
    Verification,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verification => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> CliError {
        CliError::Runtime(err.to_string())
    }
}

impl From<TopologyError> for CliError {
    fn from(err: TopologyError) -> CliError {
        CliError::Usage(err.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(err: EngineError) -> CliError {
        match err {
            EngineError::InvalidConfig(_) => CliError::Usage(err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "regnet",
    version,
    about = "Turn connected graphs into random regular graphs with local rewrites"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

// One short-lived value per process; the size spread between the arg
// structs is irrelevant.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a starting graph in edge-list format.
    Generate(GenerateArgs),
    /// Simulate one seed, or sweep a seed range, writing traces and
    /// summaries.
    Run(RunArgs),
    /// Check a claim against a fresh simulation and print a JSON report.
    #[command(subcommand)]
    Verify(VerifySuite),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Topology family: random, path, cycle, star, prism, k33, barbell.
    #[arg(long)]
    pub kind: String,
    /// Node count; the fixed fixtures imply their own.
    #[arg(long)]
    pub n: Option<usize>,
    /// Edge count, required for --kind random.
    #[arg(long)]
    pub e: Option<usize>,
    /// Generator seed, consumed by --kind random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a DOT rendering next to --out.
    #[arg(long)]
    pub dot: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat key=value config file; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starting graph from an edge-list file instead of a generator.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Topology family for the generated starting graph.
    #[arg(long)]
    pub kind: Option<String>,
    /// Node count for the generated starting graph.
    #[arg(long)]
    pub n: Option<usize>,
    /// Edge count for --kind random.
    #[arg(long)]
    pub e: Option<usize>,
    /// Seed for the starting topology; defaults to the run seed.
    #[arg(long)]
    pub topology_seed: Option<u64>,
    /// Rule set: phi-r, phi-rr, phi-star.
    #[arg(long)]
    pub grammar: Option<String>,
    /// Per-node inactivity probability.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Edge-addition probability inside r1 (phi-star only).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Run seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Round budget.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Metrics row cadence in trace.csv.
    #[arg(long)]
    pub metrics_every: Option<u64>,
    /// Alpha cadence on metrics rows; 0 limits alpha to the absorption and
    /// final rows.
    #[arg(long)]
    pub alpha_every: Option<u64>,
    /// Cadence for snap_<step>.el snapshots; 0 disables them.
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    /// Inclusive seed sweep "a..b"; one output directory per seed plus a
    /// merged sweep.json.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// DOT export of the final graph and of every snapshot.
    #[arg(long)]
    pub dot: bool,
}

#[derive(Debug, Subcommand)]
pub enum VerifySuite {
    /// Chi-square test of the post-burn-in state distribution against the
    /// uniform one over the enumerated regular class.
    Uniformity {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 10_000)]
        burn_in: u64,
        #[arg(long, default_value_t = 60)]
        stride: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.999)]
        quantile: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Forward/backward one-round transition probabilities on fixed
    /// one-rewrite pairs.
    Symmetry {
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Edge/flag ledger identity and the bounded edge count.
    Ledger {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 41)]
        e: usize,
        #[arg(long, default_value_t = 20_000)]
        steps: u64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Connectivity after every round across a batch of runs.
    Connectivity {
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 60)]
        e_min: usize,
        #[arg(long, default_value_t = 120)]
        e_max: usize,
        #[arg(long, default_value_t = 5_000)]
        steps: u64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Absorption into a feasible regular class and stability afterwards.
    Absorption {
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 27)]
        e: usize,
        #[arg(long, default_value_t = 200_000)]
        budget: u64,
        #[arg(long, default_value_t = 10_000)]
        post_rounds: u64,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Verify(suite) => cmd_verify(&suite),
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let kind: GenKind = args.kind.parse().map_err(CliError::Usage)?;
    let n = match (args.n, kind) {
        (Some(n), _) => n,
        (None, GenKind::Prism | GenKind::CompleteBipartite33) => 6,
        (None, GenKind::Barbell) => 10,
        (None, _) => {
            return Err(CliError::Usage(format!(
                "--kind {} requires --n",
                args.kind
            )))
        }
    };
    let spec = GenSpec {
        kind,
        n,
        e: args.e,
        seed: args.seed,
    };
    let g = generate(&spec)?;
    match &args.out {
        Some(path) => {
            fs::write(path, g.to_edge_list_string())?;
            if args.dot {
                fs::write(path.with_extension("dot"), g.to_dot())?;
            }
            println!(
                "wrote {} nodes, {} edges to {}",
                g.node_count(),
                g.edge_count(),
                path.display()
            );
        }
        None => {
            if args.dot {
                return Err(CliError::Usage("--dot requires --out".into()));
            }
            print!("{}", g.to_edge_list_string());
        }
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let manifest = manifest::resolve(args)?;
    match manifest.seeds {
        None => {
            let summary = artifacts::run_single(&manifest, manifest.seed, &manifest.out_dir)?;
            match (summary.absorption_step, summary.absorbed_m) {
                (Some(step), Some(m)) => println!("absorbed at step {step} into m = {m}"),
                _ => println!(
                    "not absorbed within {} steps (degree range {})",
                    summary.config.max_steps, summary.final_degree_range
                ),
            }
            println!("artifacts in {}", manifest.out_dir.display());
        }
        Some((lo, hi)) => {
            let sweep = artifacts::run_sweep(&manifest, lo, hi)?;
            println!(
                "{} of {} runs absorbed; sweep.json in {}",
                sweep.absorbed,
                sweep.runs,
                manifest.out_dir.display()
            );
        }
    }
    Ok(())
}

fn cmd_verify(suite: &VerifySuite) -> Result<(), CliError> {
    let report = verify::run_suite(suite)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Verification)
    }
}
