//! `ingest`: parse a corpus and write its summary statistics.

use serde_json::json;

use colloquy_core::corpus::{interviewer_distribution, year_distribution};

use crate::config::RunConfig;
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let manifest = super::require(&cfg.corpus_a, "--corpus")?;
    let corpus = super::load(&manifest)?;

    let interviewers = interviewer_distribution(&corpus);
    let years = year_distribution(&corpus);
    let total_words = corpus.total_words();
    let mean_words = if corpus.is_empty() {
        0.0
    } else {
        total_words as f64 / corpus.len() as f64
    };

    let summary = json!({
        "corpus": corpus.name,
        "testimony_count": corpus.len(),
        "total_words": total_words,
        "mean_words_per_testimony": format!("{mean_words:.2}").parse::<f64>().unwrap(),
        "interviewer_distribution": interviewers,
        "year_distribution": years,
    });

    let mut outputs = Vec::new();
    super::save(
        &cfg.out_dir,
        &format!("{}_summary.json", corpus.name),
        &super::pretty_json(&summary)?,
        &mut outputs,
    )?;

    let mut years_csv = String::from("year,testimonies\n");
    for (year, count) in &years.known {
        years_csv.push_str(&format!("{year},{count}\n"));
    }
    if years.unknown > 0 {
        years_csv.push_str(&format!("unknown,{}\n", years.unknown));
    }
    super::save(&cfg.out_dir, &format!("{}_years.csv", corpus.name), &years_csv, &mut outputs)?;

    let mut int_csv = String::from("interviewer,testimonies\n");
    for (name, count) in &interviewers {
        int_csv.push_str(&format!("{},{count}\n", name.replace(',', " ")));
    }
    super::save(
        &cfg.out_dir,
        &format!("{}_interviewers.csv", corpus.name),
        &int_csv,
        &mut outputs,
    )?;

    Ok(json!({
        "status": "ok",
        "command": "ingest",
        "corpus": corpus.name,
        "testimonies": corpus.len(),
        "total_words": total_words,
        "outputs": outputs,
    }))
}
