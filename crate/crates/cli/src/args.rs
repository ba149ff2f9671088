use std::path::PathBuf;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Exact (or sampled, for large n) sensitivity report for one polynomial.
    Analyze,
    /// Write a random polynomial file.
    Random,
    /// Run a named check battery.
    Suite,
    /// Build a regularity decision tree.
    Tree,
    /// Measure the block recursion level by level (schedule from --blocks).
    Trace,
    /// Middle-layers witness against the Gotsman-Linial bound.
    Gl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    Invariants,
    Gl,
    Anticoncentration,
    Invariance,
    Decompose,
    All,
}

impl SuiteName {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Invariants => "invariants",
            SuiteName::Gl => "gl",
            SuiteName::Anticoncentration => "anticoncentration",
            SuiteName::Invariance => "invariance",
            SuiteName::Decompose => "decompose",
            SuiteName::All => "all",
        }
    }
}

/// Polynomial threshold function analyses.
///
/// Exit codes: 0 success, 1 a hard check failed, 2 usage or input error,
/// 3 infeasible request, 4 an algebraic identity failed.
#[derive(Debug, Clone, Parser)]
#[command(name = "ptflab", version)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,

    /// Polynomial JSON file (`{"n": .., "terms": [{"vars": [..], "coeff": ..}]}`).
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Number of variables for a generated polynomial.
    #[arg(long)]
    pub n: Option<usize>,

    /// Maximum degree for a generated polynomial.
    #[arg(long)]
    pub d: Option<usize>,

    /// Distinct monomials in a generated polynomial [default: min(#monomials, 4n)].
    #[arg(long)]
    pub terms: Option<usize>,

    /// Base seed; drawn from entropy (and printed) when absent.
    #[arg(long, env = "PTFLAB_SEED")]
    pub seed: Option<u64>,

    /// Monte Carlo draws per estimate; 0 disables sampling.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,

    /// Regularity target.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,

    /// Sign-constancy tolerance, in (0, 1/4).
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,

    /// Bad-leaf mass target, in (0, 1/4).
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,

    /// Exponent constant in the influence threshold.
    #[arg(long = "bigM", default_value_t = 1.0)]
    pub big_m: f64,

    /// Constant on the alpha term of the block reference value.
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,

    /// Constant on the regularity term of the block reference value.
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,

    /// Log-exponent constant of the sensitivity upper bound.
    #[arg(long, default_value_t = 1.0)]
    pub clog: f64,

    /// Exponential constant of the sensitivity upper bound.
    #[arg(long, default_value_t = 1.0)]
    pub cexp: f64,

    /// Block counts, one per recursion level (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub blocks: Vec<usize>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Output path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Sampling threads. Results depend on this count but are reproducible for a fixed value.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Battery to run with `suite`.
    #[arg(long, value_enum)]
    pub suite: Option<SuiteName>,
}
