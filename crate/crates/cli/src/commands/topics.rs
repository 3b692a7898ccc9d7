//! `topics`: run the two-stage topic pipeline and render the chronological
//! table as JSON, CSV, Markdown, and HTML.

use serde_json::json;

use colloquy_core::corpus::Corpus;
use colloquy_core::topics::{
    build_topic_table, table_to_csv, table_to_html, table_to_markdown, LabelStore,
    TopicPipelineConfig,
};

use crate::config::RunConfig;
use crate::CliError;

fn topics_one(
    corpus: &Corpus,
    cfg: &RunConfig,
    outputs: &mut Vec<String>,
) -> Result<serde_json::Value, CliError> {
    let gateway = super::gateway_for(cfg)?;
    let pipeline = TopicPipelineConfig {
        k: cfg.k,
        topics_per_segment: cfg.topics_per_segment,
        min_words: cfg.min_words,
        sample_size: cfg.sample_size,
        seed: cfg.seed,
        model_id: cfg.model_id.clone(),
        ..TopicPipelineConfig::default()
    };

    // Pair titles persist across runs, so a crashed or re-tuned run only
    // pays for prompts it has not already answered.
    let store_rel = format!("{}_labels.jsonl", corpus.name);
    std::fs::create_dir_all(&cfg.out_dir)?;
    let store_path = cfg.out_dir.join(&store_rel);
    let mut store = LabelStore::open(&store_path)?;

    let table = build_topic_table(corpus, &gateway, &pipeline, Some(&mut store))?;
    outputs.push(store_path.display().to_string());

    super::save(
        &cfg.out_dir,
        &format!("{}_topics.json", corpus.name),
        &super::pretty_json(&table)?,
        outputs,
    )?;
    super::save(&cfg.out_dir, &format!("{}_topics.csv", corpus.name), &table_to_csv(&table), outputs)?;
    super::save(&cfg.out_dir, &format!("{}_topics.md", corpus.name), &table_to_markdown(&table), outputs)?;
    super::save(&cfg.out_dir, &format!("{}_topics.html", corpus.name), &table_to_html(&table), outputs)?;

    Ok(json!({
        "sampled_testimonies": table.sampled_testimonies.len(),
        "skipped_testimonies": table.skipped_testimonies,
        "stored_labels": store.len(),
    }))
}

pub fn run(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let corpus_a = super::load(&super::require(&cfg.corpus_a, "--corpus-a")?)?;
    let corpus_b = cfg.corpus_b.as_ref().map(|p| super::load(p)).transpose()?;

    let mut outputs = Vec::new();
    let mut corpora_status = serde_json::Map::new();

    let status_a = topics_one(&corpus_a, cfg, &mut outputs)?;
    corpora_status.insert(corpus_a.name.clone(), status_a);
    if let Some(corpus_b) = &corpus_b {
        let status_b = topics_one(corpus_b, cfg, &mut outputs)?;
        corpora_status.insert(corpus_b.name.clone(), status_b);
    }

    Ok(json!({
        "status": "ok",
        "command": "topics",
        "k": cfg.k,
        "topics_per_segment": cfg.topics_per_segment,
        "corpora": corpora_status,
        "outputs": outputs,
    }))
}
