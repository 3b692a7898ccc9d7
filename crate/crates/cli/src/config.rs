//! Run configuration: defaults, optional JSON config file, flag overrides.
//!
//! Precedence is defaults < config file < command-line flags, so a config
//! file can pin a whole pipeline while individual runs still tweak single
//! knobs.

use std::path::PathBuf;

use serde::Deserialize;

use colloquy_core::qtype::ClassifyMode;
use colloquy_core::segment::Strategy;
use colloquy_core::stats::{Aggregation, TestKind};

use crate::CliError;

/// Which completion provider backs LLM-dependent commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    /// Scripted rule-based responders; no network, fully reproducible.
    Offline,
    /// Live HTTP endpoint taken from the environment.
    Http,
}

/// Everything a subcommand can consume, fully resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus_a: Option<PathBuf>,
    pub corpus_b: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub k: usize,
    pub strategy: Strategy,
    pub min_words: usize,
    pub alpha: f64,
    pub test: TestKind,
    pub aggregation: Aggregation,
    pub topics_per_segment: usize,
    /// Topic-stage subsample size (`None` = analyze every testimony).
    pub sample_size: Option<usize>,
    pub seed: u64,
    pub mode: ClassifyMode,
    pub provider: ProviderKind,
    pub model_id: String,
    pub cache_dir: Option<PathBuf>,
    /// Validation rows drawn per question type.
    pub sample_per_type: usize,
    pub preset: Option<String>,
    /// Override for the preset's testimony count.
    pub testimonies: Option<usize>,
    /// Emit plain-text transcripts instead of canonical JSON.
    pub emit_plain: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_a: None,
            corpus_b: None,
            out_dir: PathBuf::from("out"),
            k: 15,
            strategy: Strategy::PairCount,
            min_words: 10,
            alpha: 0.05,
            test: TestKind::Welch,
            aggregation: Aggregation::Pooled,
            topics_per_segment: 3,
            sample_size: None,
            seed: 17,
            mode: ClassifyMode::Rule,
            provider: ProviderKind::Offline,
            model_id: "offline".to_owned(),
            cache_dir: None,
            sample_per_type: 5,
            preset: None,
            testimonies: None,
            emit_plain: false,
        }
    }
}

/// The JSON config file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus_a: Option<PathBuf>,
    pub corpus_b: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub k: Option<usize>,
    pub strategy: Option<String>,
    pub min_words: Option<usize>,
    pub alpha: Option<f64>,
    pub test: Option<String>,
    pub aggregation: Option<String>,
    pub topics_per_segment: Option<usize>,
    pub sample_size: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub provider: Option<String>,
    pub model: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub sample_per_type: Option<usize>,
    pub preset: Option<String>,
    pub testimonies: Option<usize>,
    pub emit_plain: Option<bool>,
}

/// Flag values shared by all subcommands (each is optional; set ones
/// override the config file).
#[derive(Debug, Default, clap::Args)]
pub struct CommonOpts {
    /// Output directory for all generated files
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of chronological segments
    #[arg(long)]
    pub k: Option<usize>,
    /// Segmentation unit: pair_count | cumulative_words
    #[arg(long)]
    pub strategy: Option<String>,
    /// Merge Q/A pairs whose answers fall below this many words
    #[arg(long)]
    pub min_words: Option<usize>,
    /// Significance level for per-segment tests
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Two-sample test: welch | pooled
    #[arg(long)]
    pub test: Option<String>,
    /// Per-segment pooling: pooled | per_testimony_mean
    #[arg(long)]
    pub aggregation: Option<String>,
    /// Consolidated topics per segment
    #[arg(long)]
    pub topics_per_segment: Option<usize>,
    /// Topic stage: analyze only this many testimonies (seeded subsample)
    #[arg(long)]
    pub sample: Option<usize>,
    /// Master random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Question classifier: rule | llm
    #[arg(long)]
    pub mode: Option<String>,
    /// Completion provider: offline | http
    #[arg(long)]
    pub provider: Option<String>,
    /// Model identifier forwarded to the provider
    #[arg(long)]
    pub model: Option<String>,
    /// Disk cache directory for completions
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Validation rows sampled per question type
    #[arg(long)]
    pub sample_per_type: Option<usize>,
}

fn bad_value(field: &str, got: &str, allowed: &str) -> CliError {
    CliError::new("config", format!("invalid {field} {got:?}; expected one of: {allowed}"))
}

fn parse_strategy(s: &str) -> Result<Strategy, CliError> {
    match s {
        "pair_count" => Ok(Strategy::PairCount),
        "cumulative_words" => Ok(Strategy::CumulativeWords),
        other => Err(bad_value("strategy", other, "pair_count, cumulative_words")),
    }
}

fn parse_test(s: &str) -> Result<TestKind, CliError> {
    match s {
        "welch" => Ok(TestKind::Welch),
        "pooled" => Ok(TestKind::Pooled),
        other => Err(bad_value("test", other, "welch, pooled")),
    }
}

fn parse_aggregation(s: &str) -> Result<Aggregation, CliError> {
    match s {
        "pooled" => Ok(Aggregation::Pooled),
        "per_testimony_mean" => Ok(Aggregation::PerTestimonyMean),
        other => Err(bad_value("aggregation", other, "pooled, per_testimony_mean")),
    }
}

fn parse_mode(s: &str) -> Result<ClassifyMode, CliError> {
    match s {
        "rule" => Ok(ClassifyMode::Rule),
        "llm" => Ok(ClassifyMode::Llm),
        other => Err(bad_value("mode", other, "rule, llm")),
    }
}

fn parse_provider(s: &str) -> Result<ProviderKind, CliError> {
    match s {
        "offline" => Ok(ProviderKind::Offline),
        "http" => Ok(ProviderKind::Http),
        other => Err(bad_value("provider", other, "offline, http")),
    }
}

/// Resolve the effective config: defaults, then file, then flags.
pub fn resolve(config_path: Option<&PathBuf>, opts: &CommonOpts) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();

    if let Some(path) = config_path {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::new("config", format!("cannot read {}: {e}", path.display())))?;
        let file: FileConfig = serde_json::from_str(&raw)
            .map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
        if let Some(v) = file.corpus_a {
            cfg.corpus_a = Some(v);
        }
        if let Some(v) = file.corpus_b {
            cfg.corpus_b = Some(v);
        }
        if let Some(v) = file.out_dir {
            cfg.out_dir = v;
        }
        if let Some(v) = file.k {
            cfg.k = v;
        }
        if let Some(v) = file.strategy {
            cfg.strategy = parse_strategy(&v)?;
        }
        if let Some(v) = file.min_words {
            cfg.min_words = v;
        }
        if let Some(v) = file.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = file.test {
            cfg.test = parse_test(&v)?;
        }
        if let Some(v) = file.aggregation {
            cfg.aggregation = parse_aggregation(&v)?;
        }
        if let Some(v) = file.topics_per_segment {
            cfg.topics_per_segment = v;
        }
        if file.sample_size.is_some() {
            cfg.sample_size = file.sample_size;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.mode {
            cfg.mode = parse_mode(&v)?;
        }
        if let Some(v) = file.provider {
            cfg.provider = parse_provider(&v)?;
        }
        if let Some(v) = file.model {
            cfg.model_id = v;
        }
        if file.cache_dir.is_some() {
            cfg.cache_dir = file.cache_dir;
        }
        if let Some(v) = file.sample_per_type {
            cfg.sample_per_type = v;
        }
        if file.preset.is_some() {
            cfg.preset = file.preset;
        }
        if file.testimonies.is_some() {
            cfg.testimonies = file.testimonies;
        }
        if let Some(v) = file.emit_plain {
            cfg.emit_plain = v;
        }
    }

    if let Some(v) = &opts.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = opts.k {
        cfg.k = v;
    }
    if let Some(v) = &opts.strategy {
        cfg.strategy = parse_strategy(v)?;
    }
    if let Some(v) = opts.min_words {
        cfg.min_words = v;
    }
    if let Some(v) = opts.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = &opts.test {
        cfg.test = parse_test(v)?;
    }
    if let Some(v) = &opts.aggregation {
        cfg.aggregation = parse_aggregation(v)?;
    }
    if let Some(v) = opts.topics_per_segment {
        cfg.topics_per_segment = v;
    }
    if opts.sample.is_some() {
        cfg.sample_size = opts.sample;
    }
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if let Some(v) = &opts.mode {
        cfg.mode = parse_mode(v)?;
    }
    if let Some(v) = &opts.provider {
        cfg.provider = parse_provider(v)?;
    }
    if let Some(v) = &opts.model {
        cfg.model_id = v.clone();
    }
    if opts.cache_dir.is_some() {
        cfg.cache_dir = opts.cache_dir.clone();
    }
    if let Some(v) = opts.sample_per_type {
        cfg.sample_per_type = v;
    }

    if cfg.k == 0 {
        return Err(CliError::new("config", "k must be at least 1"));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(CliError::new("config", "alpha must lie strictly between 0 and 1"));
    }
    Ok(cfg)
}
