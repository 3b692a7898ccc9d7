//! `synth`: generate a style-preset corpus with pair-level ground truth.
//!
//! Output layout under `--out`:
//!
//! ```text
//! {preset}/
//!   {preset}.json            manifest (load it with the other commands)
//!   truth.json               designed type/topic/segment per Q/A pair
//!   testimonies/{id}.json    transcripts (.txt with --plain)
//! ```

use std::fs;

use serde_json::json;

use colloquy_core::corpus::{to_canonical_json, to_plain_text, ManifestEntry};
use colloquy_core::synth::{generate_corpus, preset, PRESET_NAMES};

use crate::config::RunConfig;
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let presets = PRESET_NAMES.join(", ");
    let name = cfg
        .preset
        .as_deref()
        .ok_or_else(|| CliError::new("config", format!("--preset is required ({presets})")))?;
    let mut profile = preset(name)
        .ok_or_else(|| CliError::new("config", format!("unknown preset {name:?} ({presets})")))?;
    if let Some(n) = cfg.testimonies {
        profile.testimonies = n;
    }

    let (corpus, truth) = generate_corpus(&profile, cfg.seed);

    let base = cfg.out_dir.join(name);
    let transcripts_dir = base.join("testimonies");
    fs::create_dir_all(&transcripts_dir)?;

    let ext = if cfg.emit_plain { "txt" } else { "json" };
    let mut manifest = Vec::with_capacity(corpus.testimonies.len());
    for t in &corpus.testimonies {
        let file = format!("{}.{ext}", t.id);
        let content = if cfg.emit_plain { to_plain_text(t) } else { to_canonical_json(t) };
        fs::write(transcripts_dir.join(&file), content)?;
        manifest.push(ManifestEntry {
            path: format!("testimonies/{file}"),
            archive_id: t.archive_id.clone(),
            year: t.year,
            interviewers: t.interviewers.clone(),
        });
    }

    let mut outputs = Vec::new();
    let manifest_path = format!("{name}/{name}.json");
    super::save(&cfg.out_dir, &manifest_path, &super::pretty_json(&manifest)?, &mut outputs)?;
    super::save(&cfg.out_dir, &format!("{name}/truth.json"), &super::pretty_json(&truth)?, &mut outputs)?;

    Ok(json!({
        "status": "ok",
        "command": "synth",
        "preset": name,
        "seed": cfg.seed,
        "testimonies": corpus.testimonies.len(),
        "total_words": corpus.total_words(),
        "pairs": truth.pairs.len(),
        "manifest": cfg.out_dir.join(&manifest_path).display().to_string(),
        "outputs": outputs,
    }))
}
