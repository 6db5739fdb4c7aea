use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "spinbell", version, about = "Bell tests with collective spin measurements")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Random restarts per optimization.
    #[arg(long, global = true, default_value_t = 8)]
    pub restarts: usize,
    /// Convergence tolerance of the simplex search.
    #[arg(long, global = true, default_value_t = 1e-11)]
    pub tol: f64,
    /// Objective evaluations allowed per restart.
    #[arg(long, global = true, default_value_t = 20_000)]
    pub max_evals: usize,
    /// Output file; stdout when absent. Relative paths resolve inside
    /// $SPINBELL_OUT_DIR when that is set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Plain-text `key = value` file; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Where the inequality comes from.
#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct InequalitySource {
    /// The CHSH expression.
    #[arg(long)]
    pub chsh: bool,
    /// JSON file with fields `m`, `w`, `va`, `vb` (optionally `local_bound`).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// A random inequality with this many settings, drawn from --seed.
    #[arg(long)]
    pub random: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact local bound by enumerating deterministic strategies.
    LocalBound {
        #[command(flatten)]
        source: InequalitySource,
    },
    /// Optimized quantum value at a given number of spins per party.
    QuantumBound {
        #[command(flatten)]
        source: InequalitySource,
        #[arg(long, default_value_t = 1)]
        spins: u32,
    },
    /// Compare local and quantum values of random inequalities.
    Scan {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 2)]
        spins: u32,
    },
    /// Optimized values of random inequalities for several spin numbers.
    Monotonicity {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        count: usize,
        /// Spin numbers as a range `start:stop:step` or a comma list.
        #[arg(long, default_value = "1:3:1")]
        spins: String,
    },
    /// Inequality tables.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Twisted and split ensembles.
    #[command(subcommand)]
    Squeeze(SqueezeCommand),
    /// Optimize (or evaluate) the parity CHSH value at one point.
    Chsh {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        chi: f64,
        /// Eight comma-separated angles `theta,phi` for a1, a2, b1, b2; evaluate only.
        #[arg(long)]
        angles: Option<String>,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogCommand {
    /// Parse a catalog and list its entries.
    Parse {
        #[arg(long)]
        file: PathBuf,
    },
    /// Check nonnegativity and tightness of every entry.
    Verify {
        #[arg(long)]
        file: PathBuf,
    },
    /// Optimized quantum gap of every entry.
    Sweep {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        spins: u32,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezeCommand {
    /// Amplitudes of the twisted state and its diagnostics.
    State {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        chi: f64,
        #[arg(long, default_value_t = 0.5)]
        transmission: f64,
        /// Also write the split amplitudes as JSON to this file.
        #[arg(long)]
        split_dump: Option<PathBuf>,
    },
    /// Wineland squeezing parameter over a grid of atom numbers and twists.
    Xi2 {
        /// Atom numbers, `start:stop:step` or a comma list.
        #[arg(long)]
        n: String,
        /// Twisting strengths, `start:stop:step` or a comma list.
        #[arg(long)]
        chi: String,
    },
    /// Optimized CHSH over a grid of twisting strengths.
    SweepChi {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        chi: String,
    },
    /// Optimized CHSH over a grid of atom numbers.
    SweepN {
        #[arg(long)]
        chi: f64,
        #[arg(long)]
        n: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::LocalBound { .. } => "local-bound",
            Command::QuantumBound { .. } => "quantum-bound",
            Command::Scan { .. } => "scan",
            Command::Monotonicity { .. } => "monotonicity",
            Command::Catalog(CatalogCommand::Parse { .. }) => "catalog parse",
            Command::Catalog(CatalogCommand::Verify { .. }) => "catalog verify",
            Command::Catalog(CatalogCommand::Sweep { .. }) => "catalog sweep",
            Command::Squeeze(SqueezeCommand::State { .. }) => "squeeze state",
            Command::Squeeze(SqueezeCommand::Xi2 { .. }) => "squeeze xi2",
            Command::Squeeze(SqueezeCommand::SweepChi { .. }) => "squeeze sweep-chi",
            Command::Squeeze(SqueezeCommand::SweepN { .. }) => "squeeze sweep-n",
            Command::Chsh { .. } => "chsh",
        }
    }
}

/// Top-level commands that take a nested subcommand.
pub const NESTED: [&str; 2] = ["catalog", "squeeze"];
pub const TOP_LEVEL: [&str; 7] = ["local-bound", "quantum-bound", "scan", "monotonicity", "catalog", "squeeze", "chsh"];
