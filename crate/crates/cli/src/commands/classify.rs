//! `classify`: type every interviewer question, write the labeled set,
//! distribution tables, figures, and a validation sample for human review.

use serde_json::json;

use colloquy_core::corpus::Corpus;
use colloquy_core::qtype::{
    classify_corpus, distribution_to_csv, per_segment_to_csv, type_distribution,
    validation_sample, validation_to_csv, ClassifyConfig, ClassifyMode, TypeDistribution,
};

use crate::config::RunConfig;
use crate::figures::{render_stacked_types, render_type_bars};
use crate::CliError;

fn classify_one(
    corpus: &Corpus,
    cfg: &RunConfig,
    outputs: &mut Vec<String>,
) -> Result<(TypeDistribution, usize, usize), CliError> {
    let gateway = match cfg.mode {
        ClassifyMode::Rule => None,
        ClassifyMode::Llm => Some(super::gateway_for(cfg)?),
    };
    let classify_cfg = ClassifyConfig {
        k: cfg.k,
        min_words: cfg.min_words,
        model_id: cfg.model_id.clone(),
    };
    let batch = classify_corpus(corpus, &classify_cfg, cfg.mode, gateway.as_ref())?;

    let mut jsonl = String::new();
    for item in &batch.items {
        jsonl.push_str(&serde_json::to_string(item)?);
        jsonl.push('\n');
    }
    super::save(&cfg.out_dir, &format!("{}_questions.jsonl", corpus.name), &jsonl, outputs)?;

    let dist = type_distribution(&batch);
    super::save(
        &cfg.out_dir,
        &format!("{}_type_distribution.csv", corpus.name),
        &distribution_to_csv(&dist),
        outputs,
    )?;
    super::save(
        &cfg.out_dir,
        &format!("{}_types_by_segment.csv", corpus.name),
        &per_segment_to_csv(&dist),
        outputs,
    )?;
    super::save(
        &cfg.out_dir,
        &format!("{}_distribution.json", corpus.name),
        &super::pretty_json(&dist)?,
        outputs,
    )?;

    let sample = validation_sample(&batch.items, cfg.sample_per_type, cfg.seed);
    super::save(
        &cfg.out_dir,
        &format!("{}_validation.csv", corpus.name),
        &validation_to_csv(&sample),
        outputs,
    )?;

    let stacked = render_stacked_types(
        &format!("Question types per segment — {}", corpus.name),
        &dist.per_segment,
    )?;
    super::save(
        &cfg.out_dir,
        &format!("{}_types_by_segment.svg", corpus.name),
        &stacked,
        outputs,
    )?;

    Ok((dist, batch.items.len(), batch.notes.len()))
}

pub fn run(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let corpus_a = super::load(&super::require(&cfg.corpus_a, "--corpus-a")?)?;
    let corpus_b = cfg.corpus_b.as_ref().map(|p| super::load(p)).transpose()?;

    let mut outputs = Vec::new();
    let mut corpora_status = serde_json::Map::new();
    let mut bar_groups = Vec::new();

    let (dist_a, total_a, notes_a) = classify_one(&corpus_a, cfg, &mut outputs)?;
    bar_groups.push((corpus_a.name.clone(), dist_a.overall));
    corpora_status.insert(
        corpus_a.name.clone(),
        json!({"questions": total_a, "fallback_notes": notes_a}),
    );

    if let Some(corpus_b) = &corpus_b {
        let (dist_b, total_b, notes_b) = classify_one(corpus_b, cfg, &mut outputs)?;
        bar_groups.push((corpus_b.name.clone(), dist_b.overall));
        corpora_status.insert(
            corpus_b.name.clone(),
            json!({"questions": total_b, "fallback_notes": notes_b}),
        );
    }

    let bars = render_type_bars("Overall question-type distribution", &bar_groups)?;
    super::save(&cfg.out_dir, "question_types_overall.svg", &bars, &mut outputs)?;

    Ok(json!({
        "status": "ok",
        "command": "classify",
        "mode": match cfg.mode { ClassifyMode::Rule => "rule", ClassifyMode::Llm => "llm" },
        "k": cfg.k,
        "corpora": corpora_status,
        "outputs": outputs,
    }))
}
