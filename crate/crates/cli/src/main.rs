//! `colloquy` — measure and compare the structure of interview corpora.
//!
//! Five subcommands cover the pipeline: `ingest` (parse + summarize),
//! `compare` (per-segment metric reports with significance tests and
//! figures), `classify` (question typing), `topics` (staged topic
//! extraction), and `synth` (ground-truthed synthetic corpora). Every
//! command prints a one-line status JSON to stdout and exits 0, or an
//! error JSON (`{"status":"error","kind":...,"message":...}`) and exits 1,
//! so batch pipelines can script it without scraping logs.

mod commands;
mod config;
mod figures;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::CommonOpts;

/// A failure with a machine-readable kind.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl std::fmt::Display) -> Self {
        CliError { kind, message: message.to_string() }
    }
}

macro_rules! error_kind {
    ($ty:ty, $kind:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($kind, e)
            }
        }
    };
}

error_kind!(colloquy_core::corpus::CorpusError, "corpus");
error_kind!(colloquy_core::corpus::ParseError, "parse");
error_kind!(colloquy_core::segment::SegmentError, "segment");
error_kind!(colloquy_core::stats::StatsError, "stats");
error_kind!(colloquy_core::qtype::QtypeError, "classify");
error_kind!(colloquy_core::topics::TopicsError, "topics");
error_kind!(colloquy_core::gateway::GatewayError, "gateway");
error_kind!(figures::SpecError, "figure");
error_kind!(std::io::Error, "io");
error_kind!(serde_json::Error, "json");

#[derive(Parser)]
#[command(
    name = "colloquy",
    version,
    about = "Quantify and compare the structure of two interview corpora"
)]
struct Cli {
    /// JSON config file; explicit flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a corpus manifest and write summary statistics
    Ingest {
        /// Corpus manifest (JSON list of transcript entries)
        #[arg(long, value_name = "MANIFEST")]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Compare two corpora: per-segment reports, tests, and figures
    Compare {
        #[arg(long, value_name = "MANIFEST")]
        corpus_a: Option<PathBuf>,
        #[arg(long, value_name = "MANIFEST")]
        corpus_b: Option<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Classify interviewer questions into the seven-type taxonomy
    Classify {
        #[arg(long, value_name = "MANIFEST")]
        corpus_a: Option<PathBuf>,
        /// Optional second corpus for side-by-side distributions
        #[arg(long, value_name = "MANIFEST")]
        corpus_b: Option<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Extract per-segment topics and render the chronological table
    Topics {
        #[arg(long, value_name = "MANIFEST")]
        corpus_a: Option<PathBuf>,
        /// Optional second corpus to analyze with the same settings
        #[arg(long, value_name = "MANIFEST")]
        corpus_b: Option<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Generate a synthetic corpus with pair-level ground truth
    Synth {
        /// Style preset: structured_like | freeform_like | usc_like | yale_like
        #[arg(long)]
        preset: Option<String>,
        /// Override the preset's testimony count
        #[arg(long)]
        testimonies: Option<usize>,
        /// Emit plain-text transcripts instead of canonical JSON
        #[arg(long)]
        plain: bool,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Ingest { corpus, opts } => {
            let mut cfg = config::resolve(cli.config.as_ref(), &opts)?;
            if corpus.is_some() {
                cfg.corpus_a = corpus;
            }
            commands::ingest::run(&cfg)
        }
        Command::Compare { corpus_a, corpus_b, opts } => {
            let mut cfg = config::resolve(cli.config.as_ref(), &opts)?;
            if corpus_a.is_some() {
                cfg.corpus_a = corpus_a;
            }
            if corpus_b.is_some() {
                cfg.corpus_b = corpus_b;
            }
            commands::compare::run(&cfg)
        }
        Command::Classify { corpus_a, corpus_b, opts } => {
            let mut cfg = config::resolve(cli.config.as_ref(), &opts)?;
            if corpus_a.is_some() {
                cfg.corpus_a = corpus_a;
            }
            if corpus_b.is_some() {
                cfg.corpus_b = corpus_b;
            }
            commands::classify::run(&cfg)
        }
        Command::Topics { corpus_a, corpus_b, opts } => {
            let mut cfg = config::resolve(cli.config.as_ref(), &opts)?;
            if corpus_a.is_some() {
                cfg.corpus_a = corpus_a;
            }
            if corpus_b.is_some() {
                cfg.corpus_b = corpus_b;
            }
            commands::topics::run(&cfg)
        }
        Command::Synth { preset, testimonies, plain, opts } => {
            let mut cfg = config::resolve(cli.config.as_ref(), &opts)?;
            if preset.is_some() {
                cfg.preset = preset;
            }
            if testimonies.is_some() {
                cfg.testimonies = testimonies;
            }
            if plain {
                cfg.emit_plain = true;
            }
            commands::synth::run(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => {
            println!("{status}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let payload = serde_json::json!({
                "status": "error",
                "kind": e.kind,
                "message": e.message,
            });
            println!("{payload}");
            ExitCode::FAILURE
        }
    }
}
