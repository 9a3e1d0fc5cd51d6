use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cuntz", version, about = "Endomorphisms of Cuntz algebras: construct, verify, extract, count")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    /// Coefficients below this magnitude are dropped.
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub zero_tol: f64,

    /// Tolerance for equality and unitarity checks.
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub eq_tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    /// Cyclic factor orders, e.g. `3` or `2x2`. Uses the standard bracket.
    #[arg(long, conflicts_with = "group_file")]
    pub group: Option<String>,

    /// JSON file `{"orders": [...], "bracket": [[re, im], ...]}`.
    #[arg(long)]
    pub group_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline for the Izumi endomorphism over a group.
    Replicate {
        #[command(flatten)]
        group: GroupArgs,
        /// Largest orbit length for itinerary counts.
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Cylinder depth for masa checks and rule comparison.
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Window length for itinerary counts.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Run a single check.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Itinerary counts and entropy estimates for a local rule.
    Entropy {
        #[arg(long)]
        rule: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Word budget per count; defaults to CUNTZ_BUDGET or 2^22.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Extract the local rule of a C_N-invariant endomorphism.
    ExtractRule {
        #[arg(long)]
        endo: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Write the rule here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check C_N-invariance and optionally write the extracted rule.
    Masa {
        #[arg(long)]
        endo: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long)]
        emit_rule: Option<PathBuf>,
    },
    /// Pentagon equation for a matrix on C^N ⊗ C^N.
    Pentagon {
        #[arg(long)]
        file: PathBuf,
    },
    /// Commutant dimension of a matrix family, or of ρ(M_N^k) inside M_N^m.
    Commutant {
        /// JSON array of matrices.
        #[arg(long, conflicts_with = "endo")]
        generators: Option<PathBuf>,
        #[arg(long, requires = "k")]
        endo: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Ambient level; defaults to k + 1.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Apply an endomorphism to an element.
    Apply {
        #[arg(long)]
        endo: PathBuf,
        #[arg(long)]
        elem: PathBuf,
    },
    /// Write the JSON form of a standard object.
    Construct {
        #[arg(value_enum)]
        object: ConstructObject,
        #[command(flatten)]
        group: GroupArgs,
        /// Alphabet size for `flip`, `shift` and `identity`.
        #[arg(long)]
        n: Option<usize>,
        /// Closed-form kind for `rule`: shift, difference, anchored-difference, anchored-sum.
        #[arg(long, default_value = "difference")]
        kind: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstructObject {
    /// Unitary of the Izumi endomorphism ρ.
    Izumi,
    /// Unitary of ρ∘β.
    RhoPrime,
    /// Unitary of ρ².
    Gamma,
    /// Unitary of the Fourier automorphism β.
    Fourier,
    /// The flip unitary as an element.
    Flip,
    /// Unitary of the canonical shift.
    Shift,
    Identity,
    /// Matrix W extracted from ρ².
    W,
    /// A closed-form local rule.
    Rule,
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// Pentagon equation for a matrix file.
    Pentagon {
        #[arg(long)]
        file: PathBuf,
    },
    /// C_N-invariance up to a cylinder depth.
    Masa {
        #[arg(long)]
        endo: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Unitarity of an element.
    Unitary {
        #[arg(long)]
        elem: PathBuf,
    },
    /// Closed-form identities for the Izumi construction.
    ClosedForms {
        #[command(flatten)]
        group: GroupArgs,
    },
    /// φ∘ρ = φ on words and on seeded random combinations.
    Phi {
        #[arg(long)]
        endo: PathBuf,
        /// Longest |J|, |K| among sampled words.
        #[arg(long, default_value_t = 2)]
        max_len: usize,
        /// Number of additional random elements.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}
