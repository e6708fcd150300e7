mod commands;
mod output;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uwl_core::bench::Preset;
use uwl_core::transcribe::Direction;

/// Validate, transcribe, tabulate, lint and benchmark UWL workflows.
#[derive(Debug, Parser)]
#[command(name = "uwl", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Action vocabulary (TOML). Defaults to the built-in vocabulary.
    #[arg(long, global = true, env = "UWL_VOCAB_PATH")]
    pub vocab: Option<PathBuf>,
    /// Folder holding `<lang>.toml` translation tables.
    #[arg(long, global = true, env = "UWL_LOCALE_DIR", default_value = "locales")]
    pub locale_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a document against the structural rules.
    Validate { file: PathBuf },
    /// Write the protocol text of a document.
    Transcribe {
        file: PathBuf,
        #[arg(long, default_value = "en")]
        lang: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter table of one or more documents as CSV.
    Table(TableArgs),
    /// Completeness report from an annotation sidecar.
    Lint {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// One sidecar per file, in the same order.
        #[arg(long = "annotations", required = true)]
        annotations: Vec<PathBuf>,
        /// Also print the mean over all files.
        #[arg(long)]
        aggregate: bool,
        /// Exit with status 2 if any document has more than N missing entries.
        #[arg(long, value_name = "N")]
        fail_over: Option<u64>,
    },
    /// Rename actions, items and parameters through a translation table.
    Translate {
        file: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_parser = parse_direction)]
        direction: Direction,
        /// Fail if any term is missing from the table.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate random workflows for benchmarking.
    Generate(GenerateArgs),
    /// Surrogate response of a generated document.
    Surrogate { file: PathBuf },
    /// Encode a generated document as a graph or padded vector.
    Export {
        file: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Padding sizes for the flat format.
        #[arg(long, conflicts_with = "config")]
        preset: Option<Preset>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "UWL_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Folder of workflow files.
        #[arg(long, default_value = "workflows")]
        store: PathBuf,
        /// Editor build to serve at /.
        #[arg(long = "static", env = "UWL_STATIC_DIR")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
pub struct TableArgs {
    #[command(subcommand)]
    pub apply: Option<TableCommand>,
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TableCommand {
    /// Write values from a CSV back into a document.
    Apply {
        file: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        /// CSV column to read; defaults to the one named after the document.
        #[arg(long)]
        column: Option<String>,
        /// Where to write the document; defaults to FILE itself.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub preset: Option<Preset>,
    /// Generator settings as TOML or JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "uwl")]
    pub format: GenerateFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateFormat {
    Uwl,
    Dataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Graph,
    Flat,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !failure.message.is_empty() {
                eprintln!("error: {}", failure.message);
            }
            ExitCode::from(failure.code)
        }
    }
}
