//! `augdict` command line: load tables, manage ADVs, query and export
//! feature matrices. State lives in a session directory between runs.

mod catalog;
mod commands;
mod error;
mod ingest;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "augdict",
    version,
    about = "Columnar tables with dictionary-attached feature values"
)]
struct Cli {
    /// Directory holding the session catalog.
    #[arg(long, global = true, default_value = ".augdict")]
    session: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Float,
    OneHot,
    Embedding,
    MinMax,
    MeanNormalize,
    ZScore,
    Log,
    Binarize,
    Quantile,
    HashBucket,
    Bucketize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a CSV or JSON-lines file into a new table.
    Load {
        table: String,
        data: PathBuf,
        /// Schema file with one `name:type` line per column.
        #[arg(long)]
        schema: PathBuf,
        /// Input format (csv or jsonl); guessed from the extension if omitted.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Rows per IMCU.
        #[arg(long, default_value_t = augdict::store::IMCU_ROWS)]
        imcu_rows: usize,
        /// Overwrite an existing table of the same name.
        #[arg(long)]
        replace: bool,
    },
    /// Per-column dictionary statistics and ADV summaries.
    Stats {
        table: String,
        /// Histogram entries shown per column (0 shows all).
        #[arg(long, default_value_t = 50)]
        limit: usize,
    },
    /// Run a predicate such as "age BETWEEN 20 AND 30 AND state = 'Ohio'".
    Query {
        table: String,
        predicate: String,
        /// Matching rows to print.
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
    /// Manage augmented dictionary values.
    #[command(subcommand)]
    Adv(AdvCommand),
    /// Materialize a feature request into a matrix.
    Featurize {
        table: String,
        /// JSON request: {"where": "...", "features": [...]}.
        request: PathBuf,
        /// Output file; CSV goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv or binary.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Time ADV lookup against raw recompute (informational).
    Bench(BenchArgs),
    /// Packed and theoretical bit widths for the given cardinalities.
    Widths { cardinalities: Vec<u64> },
}

#[derive(Debug, Subcommand)]
enum AdvCommand {
    /// Register an ADV computed from a transform.
    Add(AddArgs),
    /// Import a value-to-output mapping from a two-column CSV.
    Import {
        table: String,
        column: String,
        name: String,
        mapping: PathBuf,
        /// Output for values the mapping does not cover.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        default: f32,
        /// Where the mapping came from; defaults to the file path.
        #[arg(long)]
        provenance: Option<String>,
    },
    /// List ADVs with their statistics.
    List { table: String },
}

#[derive(Debug, Args)]
pub struct AddArgs {
    pub table: String,
    pub column: String,
    pub name: String,
    /// Transform kind; bucketize when only --boundaries is given.
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// Ascending boundaries, e.g. 10,20,...,90.
    #[arg(long, allow_hyphen_values = true)]
    pub boundaries: Option<String>,
    /// Binarize threshold (numeric) or target value (string).
    #[arg(long, allow_hyphen_values = true)]
    pub cutoff: Option<String>,
    /// Logistic scale for a soft binarize.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub quantiles: Option<u32>,
    #[arg(long)]
    pub buckets: Option<u64>,
    /// Embedding rows as a headerless CSV of floats, one row per code.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Dimension of a seeded random embedding.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Synthetic row count.
    #[arg(long, default_value_t = 200_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Benchmark a loaded table instead (requires --request).
    #[arg(long, requires = "request")]
    pub table: Option<String>,
    #[arg(long, requires = "table")]
    pub request: Option<PathBuf>,
}

fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let dir = &cli.session;
    match cli.command {
        Command::Load {
            table,
            data,
            schema,
            format,
            imcu_rows,
            replace,
        } => commands::load(dir, &table, &data, &schema, format, imcu_rows, replace, out),
        Command::Stats { table, limit } => commands::stats(dir, &table, limit, out),
        Command::Query {
            table,
            predicate,
            limit,
        } => commands::query(dir, &table, &predicate, limit, out),
        Command::Adv(AdvCommand::Add(args)) => commands::adv_add(dir, &args, out),
        Command::Adv(AdvCommand::Import {
            table,
            column,
            name,
            mapping,
            default,
            provenance,
        }) => commands::adv_import(dir, &table, &column, &name, &mapping, default, provenance, out),
        Command::Adv(AdvCommand::List { table }) => commands::adv_list(dir, &table, out),
        Command::Featurize {
            table,
            request,
            out: path,
            format,
        } => commands::featurize(dir, &table, &request, path.as_deref(), format, out),
        Command::Bench(args) => commands::bench(dir, &args, out),
        Command::Widths { cardinalities } => commands::widths(&cardinalities, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
