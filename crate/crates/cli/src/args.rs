use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "jsonmask", version, about = "Compile JSON Schemas to token masks, decode under them, and benchmark the result")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read, clean and deduplicate schema corpora.
    Ingest,
    /// Per-dataset size, field count, fan-out and depth medians.
    Stats {
        #[arg(long, value_enum, default_value_t = Grouping::Dataset)]
        group_by: Grouping,
    },
    /// Compile a schema and report the outcome.
    Compile,
    /// Validate an instance against a schema.
    Validate,
    /// Print the tokens allowed after a prefix.
    Mask {
        /// Walk the prefix with whitespace allowed between tokens.
        #[arg(long)]
        lenient: bool,
    },
    /// Decode one output under a schema.
    Generate,
    /// Walk an instance through the compiled schema token by token.
    Walk,
    /// Run the conformance suite.
    Conformance,
    /// Declared and empirical coverage over corpora.
    BenchCoverage,
    /// Compile and generation latency across variants.
    BenchEfficiency,
    /// Render saved coverage reports.
    Report {
        /// coverage.json files written by bench-coverage.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grouping {
    Dataset,
    Tier,
    DatasetTier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Args)]
pub struct Options {
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    /// A directory of schema files or a file with one schema per line. Repeatable.
    #[arg(long, global = true)]
    pub corpus: Vec<PathBuf>,
    #[arg(long, global = true)]
    pub suite: Option<PathBuf>,
    /// Vocabulary file; the 256 byte tokens plus EOS when absent.
    #[arg(long, global = true)]
    pub vocab: Option<PathBuf>,
    /// Keyword manifest; the bundled one when absent.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for machine-readable output. Nothing is written without it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Seconds.
    #[arg(long, global = true)]
    pub timeout_compile: Option<f64>,
    /// Seconds.
    #[arg(long, global = true)]
    pub timeout_generate: Option<f64>,
    #[arg(long, global = true)]
    pub max_tokens: Option<usize>,
    #[arg(long, global = true)]
    pub fast_forward: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Suppress human-readable tables.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Bytes already generated, for `mask`.
    #[arg(long, global = true)]
    pub prefix: Option<String>,
}
