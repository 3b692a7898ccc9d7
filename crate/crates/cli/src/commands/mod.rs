//! Subcommand implementations and the small amount of plumbing they share.

pub mod classify;
pub mod compare;
pub mod ingest;
pub mod synth;
pub mod topics;

use std::path::{Path, PathBuf};

use colloquy_core::corpus::{load_corpus, Corpus, RoleMap};
use colloquy_core::gateway::{Gateway, GatewayConfig, HttpProvider, MockProvider, Provider};
use colloquy_core::offline;

use crate::config::{ProviderKind, RunConfig};
use crate::CliError;

/// Load one corpus with the default role mapping (`INT*` labels are the
/// interviewer, everyone else the survivor).
pub(crate) fn load(path: &Path) -> Result<Corpus, CliError> {
    Ok(load_corpus(path, &RoleMap::new())?)
}

pub(crate) fn require(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    path.clone()
        .ok_or_else(|| CliError::new("config", format!("missing required input: {flag}")))
}

/// Write one output file under the run's output directory and record its
/// path for the status JSON.
pub(crate) fn save(
    out_dir: &Path,
    rel: &str,
    content: &str,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    let path = out_dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, content)?;
    outputs.push(path.display().to_string());
    Ok(())
}

/// Build the completion gateway the config asks for. Offline runs script
/// the three analysis prompts; HTTP runs read the endpoint and key from
/// the environment. The disk cache applies to either.
pub(crate) fn gateway_for(cfg: &RunConfig) -> Result<Gateway, CliError> {
    let provider: Box<dyn Provider> = match cfg.provider {
        ProviderKind::Offline => Box::new(MockProvider::new(offline::analysis_rules())),
        ProviderKind::Http => Box::new(HttpProvider::from_env()?),
    };
    let gw_cfg = GatewayConfig { cache_dir: cfg.cache_dir.clone(), ..GatewayConfig::default() };
    Ok(Gateway::new(provider, gw_cfg)?)
}

/// Pretty JSON with a trailing newline, for stable on-disk files.
pub(crate) fn pretty_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
