//! `compare`: per-segment metric reports for two corpora, with two-sample
//! tests, CSV/JSON bundles, and significance-marked figures.

use serde_json::json;

use colloquy_core::corpus::Corpus;
use colloquy_core::stats::{
    answer_length_series, compare_series, intervention_density_series, question_length_series,
    report_to_csv, series_to_csv, ComparisonReport, MetricConfig, SegmentSeries,
};

use crate::config::RunConfig;
use crate::figures::{render_comparison, FigureSpec};
use crate::CliError;

struct MetricBundle {
    name: &'static str,
    y_label: &'static str,
    series_a: SegmentSeries,
    series_b: SegmentSeries,
}

pub fn run(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let corpus_a = super::load(&super::require(&cfg.corpus_a, "--corpus-a")?)?;
    let corpus_b = super::load(&super::require(&cfg.corpus_b, "--corpus-b")?)?;

    let metric_cfg = MetricConfig {
        k: cfg.k,
        strategy: cfg.strategy,
        min_words: cfg.min_words,
        aggregation: cfg.aggregation,
    };

    let density = |c: &Corpus| intervention_density_series(c, cfg.k).density;
    let bundles = [
        MetricBundle {
            name: "answer_length",
            y_label: "words per answer",
            series_a: answer_length_series(&corpus_a, &metric_cfg),
            series_b: answer_length_series(&corpus_b, &metric_cfg),
        },
        MetricBundle {
            name: "question_length",
            y_label: "words per question",
            series_a: question_length_series(&corpus_a, &metric_cfg),
            series_b: question_length_series(&corpus_b, &metric_cfg),
        },
        MetricBundle {
            name: "intervention_density",
            y_label: "interviewer turns per 1000 words",
            series_a: density(&corpus_a),
            series_b: density(&corpus_b),
        },
    ];

    let mut outputs = Vec::new();
    let mut metric_status = serde_json::Map::new();
    for bundle in &bundles {
        let report: ComparisonReport =
            compare_series(&bundle.series_a, &bundle.series_b, cfg.alpha, cfg.test)?;

        super::save(
            &cfg.out_dir,
            &format!("{}_a.csv", bundle.name),
            &series_to_csv(&bundle.series_a),
            &mut outputs,
        )?;
        super::save(
            &cfg.out_dir,
            &format!("{}_b.csv", bundle.name),
            &series_to_csv(&bundle.series_b),
            &mut outputs,
        )?;
        super::save(
            &cfg.out_dir,
            &format!("{}_report.csv", bundle.name),
            &report_to_csv(&report),
            &mut outputs,
        )?;
        super::save(
            &cfg.out_dir,
            &format!("{}_report.json", bundle.name),
            &super::pretty_json(&report)?,
            &mut outputs,
        )?;

        let title = format!(
            "{} — {} vs {}",
            bundle.name.replace('_', " "),
            report.corpus_a,
            report.corpus_b
        );
        let spec = FigureSpec::from_report(&report, &title, bundle.y_label);
        super::save(
            &cfg.out_dir,
            &format!("{}.svg", bundle.name),
            &render_comparison(&spec)?,
            &mut outputs,
        )?;

        let significant: Vec<usize> =
            report.segments.iter().filter(|s| s.significant).map(|s| s.seg_index).collect();
        metric_status.insert(
            bundle.name.to_owned(),
            json!({
                "significant_segments": significant,
                "testable_segments": report.segments.iter().filter(|s| s.testable).count(),
            }),
        );
    }

    Ok(json!({
        "status": "ok",
        "command": "compare",
        "corpus_a": corpus_a.name,
        "corpus_b": corpus_b.name,
        "k": cfg.k,
        "alpha": cfg.alpha,
        "metrics": metric_status,
        "outputs": outputs,
    }))
}
