//! Per-segment dialogic metrics and corpus comparison.
//!
//! Each metric turns a corpus into a [`SegmentSeries`]: `k` chronological
//! cells, each holding the sample of per-pair (or per-testimony) values
//! that fell into it. Two series over the same metric and segmentation can
//! then be compared segment-by-segment with a two-sample test.

pub mod special;
pub mod ttest;

pub use special::{inc_beta, ln_gamma, student_t_two_sided_p};
pub use ttest::{
    mean, pooled_t_test, sample_sd, sample_variance, t_test, welch_t_test, TTestResult, TestKind,
};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, SpeakerRole};
use crate::segment::{
    assign_pairs, merge_short_pairs, pair_qa, segment_by_pairs, segment_by_words, QAPair, Strategy,
};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("degenerate sample (n_a = {n_a}, n_b = {n_b}): {detail}")]
    DegenerateSample {
        n_a: usize,
        n_b: usize,
        detail: &'static str,
    },
    #[error("series are not comparable: {0}")]
    MismatchedSeries(String),
}

/// How per-pair values are pooled within a segment across testimonies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Every pair contributes one observation (testimonies with more pairs
    /// weigh more).
    Pooled,
    /// Each testimony contributes its per-segment mean (one observation per
    /// testimony per segment).
    PerTestimonyMean,
}

/// Settings shared by the pair-based metrics.
#[derive(Debug, Clone, Copy)]
pub struct MetricConfig {
    pub k: usize,
    pub strategy: Strategy,
    /// Floor for pair merging before segmentation.
    pub min_words: usize,
    pub aggregation: Aggregation,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            k: 15,
            strategy: Strategy::PairCount,
            min_words: 10,
            aggregation: Aggregation::Pooled,
        }
    }
}

/// Summary of one segment's sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentStat {
    pub n: usize,
    /// `None` when the segment collected no observations.
    pub mean: Option<Scalar>,
    /// 0.0 when n <= 1.
    pub sd: Scalar,
}

/// A metric evaluated over `k` chronological segments of one corpus.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentSeries {
    pub metric: String,
    pub corpus: String,
    pub strategy: Strategy,
    pub k: usize,
    pub aggregation: Aggregation,
    /// Testimonies that could not be split into `k` segments.
    pub skipped_testimonies: usize,
    pub segments: Vec<SegmentStat>,
    /// Raw per-segment observations, kept for downstream testing but not
    /// serialized.
    #[serde(skip)]
    pub samples: Vec<Vec<Scalar>>,
}

impl SegmentSeries {
    fn from_samples(
        metric: &str,
        corpus: &str,
        strategy: Strategy,
        k: usize,
        aggregation: Aggregation,
        skipped: usize,
        samples: Vec<Vec<Scalar>>,
    ) -> Self {
        let segments = samples
            .iter()
            .map(|xs| SegmentStat {
                n: xs.len(),
                mean: mean(xs),
                sd: sample_sd(xs),
            })
            .collect();
        SegmentSeries {
            metric: metric.to_owned(),
            corpus: corpus.to_owned(),
            strategy,
            k,
            aggregation,
            skipped_testimonies: skipped,
            segments,
            samples,
        }
    }

    /// Mean over every observation in the series, ignoring segmentation.
    pub fn overall_mean(&self) -> Option<Scalar> {
        let (mut sum, mut n) = (0.0, 0usize);
        for seg in &self.samples {
            for &x in seg {
                sum += x;
                n += 1;
            }
        }
        if n == 0 {
            None
        } else {
            Some(sum / n as Scalar)
        }
    }
}

fn pair_series(
    corpus: &Corpus,
    cfg: &MetricConfig,
    metric: &str,
    value: impl Fn(&QAPair) -> Option<Scalar>,
) -> SegmentSeries {
    let mut samples = vec![Vec::new(); cfg.k];
    let mut skipped = 0;
    for t in &corpus.testimonies {
        let pairs = merge_short_pairs(pair_qa(t), cfg.min_words);
        let segs = match cfg.strategy {
            Strategy::PairCount => segment_by_pairs(&pairs, cfg.k),
            Strategy::CumulativeWords => segment_by_words(t, cfg.k),
        };
        let Ok(segs) = segs else {
            skipped += 1;
            continue;
        };
        let assigned = assign_pairs(&pairs, &segs);
        match cfg.aggregation {
            Aggregation::Pooled => {
                for (p, &s) in pairs.iter().zip(&assigned) {
                    if let Some(v) = value(p) {
                        samples[s].push(v);
                    }
                }
            }
            Aggregation::PerTestimonyMean => {
                let mut acc = vec![(0.0, 0usize); cfg.k];
                for (p, &s) in pairs.iter().zip(&assigned) {
                    if let Some(v) = value(p) {
                        acc[s].0 += v;
                        acc[s].1 += 1;
                    }
                }
                for (s, (sum, n)) in acc.into_iter().enumerate() {
                    if n > 0 {
                        samples[s].push(sum / n as Scalar);
                    }
                }
            }
        }
    }
    SegmentSeries::from_samples(
        metric,
        &corpus.name,
        cfg.strategy,
        cfg.k,
        cfg.aggregation,
        skipped,
        samples,
    )
}

/// Words per answer, by segment. Pairs with no answer turns are excluded.
pub fn answer_length_series(corpus: &Corpus, cfg: &MetricConfig) -> SegmentSeries {
    pair_series(corpus, cfg, "answer_length", |p| {
        (!p.answer_turns.is_empty()).then_some(p.answer_words as Scalar)
    })
}

/// Words per question, by segment. Pairs with no question turns are excluded.
pub fn question_length_series(corpus: &Corpus, cfg: &MetricConfig) -> SegmentSeries {
    pair_series(corpus, cfg, "question_length", |p| {
        (!p.question_turns.is_empty()).then_some(p.question_words as Scalar)
    })
}

/// Interviewer activity over interview time.
///
/// `density` is interviewer turn starts per 1000 words in each cumulative-
/// word segment; `survivor_ratio` is the fraction of segment words spoken
/// by the survivor. One observation per testimony per non-empty segment.
#[derive(Debug, Clone, Serialize)]
pub struct DensitySeries {
    pub density: SegmentSeries,
    pub survivor_ratio: SegmentSeries,
}

pub fn intervention_density_series(corpus: &Corpus, k: usize) -> DensitySeries {
    let mut dens = vec![Vec::new(); k];
    let mut ratio = vec![Vec::new(); k];
    let mut skipped = 0;
    for t in &corpus.testimonies {
        let Ok(segs) = segment_by_words(t, k) else {
            skipped += 1;
            continue;
        };
        for seg in &segs {
            if seg.seg_words == 0 {
                continue;
            }
            let mut starts = 0usize;
            let mut survivor_words = 0usize;
            for u in &t.utterances[seg.start..seg.end] {
                match u.role {
                    SpeakerRole::Interviewer => starts += 1,
                    SpeakerRole::Survivor => survivor_words += u.word_count,
                    SpeakerRole::Other => {}
                }
            }
            let words = seg.seg_words as Scalar;
            dens[seg.seg_index].push(starts as Scalar * 1000.0 / words);
            ratio[seg.seg_index].push(survivor_words as Scalar / words);
        }
    }
    DensitySeries {
        density: SegmentSeries::from_samples(
            "intervention_density",
            &corpus.name,
            Strategy::CumulativeWords,
            k,
            Aggregation::PerTestimonyMean,
            skipped,
            dens,
        ),
        survivor_ratio: SegmentSeries::from_samples(
            "survivor_ratio",
            &corpus.name,
            Strategy::CumulativeWords,
            k,
            Aggregation::PerTestimonyMean,
            skipped,
            ratio,
        ),
    }
}

/// One segment of a two-corpus comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentComparison {
    pub seg_index: usize,
    pub n_a: usize,
    pub mean_a: Option<Scalar>,
    pub sd_a: Scalar,
    pub n_b: usize,
    pub mean_b: Option<Scalar>,
    pub sd_b: Scalar,
    pub t: Option<Scalar>,
    pub df: Option<Scalar>,
    pub p: Option<Scalar>,
    /// False when either side was too small or too flat to test.
    pub testable: bool,
    pub significant: bool,
}

/// Segment-by-segment comparison of one metric across two corpora.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub metric: String,
    pub corpus_a: String,
    pub corpus_b: String,
    pub strategy: Strategy,
    pub k: usize,
    pub alpha: Scalar,
    pub test: TestKind,
    pub overall_mean_a: Option<Scalar>,
    pub overall_mean_b: Option<Scalar>,
    pub segments: Vec<SegmentComparison>,
}

/// Compare two series segment-wise. Untestable segments (a side with fewer
/// than two observations, or both sides flat) are reported with null test
/// fields rather than failing the whole comparison.
pub fn compare_series(
    a: &SegmentSeries,
    b: &SegmentSeries,
    alpha: Scalar,
    test: TestKind,
) -> Result<ComparisonReport, StatsError> {
    if a.metric != b.metric {
        return Err(StatsError::MismatchedSeries(format!(
            "metric {:?} vs {:?}",
            a.metric, b.metric
        )));
    }
    if a.k != b.k {
        return Err(StatsError::MismatchedSeries(format!("k {} vs {}", a.k, b.k)));
    }
    if a.strategy != b.strategy {
        return Err(StatsError::MismatchedSeries(format!(
            "strategy {:?} vs {:?}",
            a.strategy, b.strategy
        )));
    }
    if a.aggregation != b.aggregation {
        return Err(StatsError::MismatchedSeries(format!(
            "aggregation {:?} vs {:?}",
            a.aggregation, b.aggregation
        )));
    }

    let segments = (0..a.k)
        .map(|s| {
            let (xs, ys) = (&a.samples[s], &b.samples[s]);
            let base = SegmentComparison {
                seg_index: s,
                n_a: xs.len(),
                mean_a: mean(xs),
                sd_a: sample_sd(xs),
                n_b: ys.len(),
                mean_b: mean(ys),
                sd_b: sample_sd(ys),
                t: None,
                df: None,
                p: None,
                testable: false,
                significant: false,
            };
            match t_test(xs, ys, test) {
                Ok(r) => SegmentComparison {
                    t: Some(r.t),
                    df: Some(r.df),
                    p: Some(r.p),
                    testable: true,
                    significant: r.p < alpha,
                    ..base
                },
                Err(_) => base,
            }
        })
        .collect();

    Ok(ComparisonReport {
        metric: a.metric.clone(),
        corpus_a: a.corpus.clone(),
        corpus_b: b.corpus.clone(),
        strategy: a.strategy,
        k: a.k,
        alpha,
        test,
        overall_mean_a: a.overall_mean(),
        overall_mean_b: b.overall_mean(),
        segments,
    })
}

fn fmt_opt(x: Option<Scalar>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn fmt_opt_exp(x: Option<Scalar>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_default()
}

/// CSV rendering of one series: `segment,n,mean,sd` (mean blank when the
/// segment is empty; fixed six-decimal formatting for stable bytes).
pub fn series_to_csv(series: &SegmentSeries) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["segment", "n", "mean", "sd"]).expect("in-memory write");
    for (s, st) in series.segments.iter().enumerate() {
        w.write_record([
            s.to_string(),
            st.n.to_string(),
            fmt_opt(st.mean),
            format!("{:.6}", st.sd),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// CSV rendering of a comparison, one row per segment.
pub fn report_to_csv(report: &ComparisonReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "segment",
        "n_a",
        "mean_a",
        "sd_a",
        "n_b",
        "mean_b",
        "sd_b",
        "t",
        "df",
        "p",
        "testable",
        "significant",
    ])
    .expect("in-memory write");
    for seg in &report.segments {
        w.write_record([
            seg.seg_index.to_string(),
            seg.n_a.to_string(),
            fmt_opt(seg.mean_a),
            format!("{:.6}", seg.sd_a),
            seg.n_b.to_string(),
            fmt_opt(seg.mean_b),
            format!("{:.6}", seg.sd_b),
            fmt_opt(seg.t),
            fmt_opt(seg.df),
            fmt_opt_exp(seg.p),
            seg.testable.to_string(),
            seg.significant.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Testimony;

    /// Interview with `n` Q/A exchanges; answer lengths given per pair.
    fn testimony_with_answers(id: &str, answers: &[usize]) -> Testimony {
        let mut turns = Vec::new();
        for (i, &a) in answers.iter().enumerate() {
            turns.push(("INT".to_owned(), SpeakerRole::Interviewer, format!("question {i} here?")));
            turns.push(("AB".to_owned(), SpeakerRole::Survivor, vec!["word"; a].join(" ")));
        }
        Testimony::from_turns(id, "arc", turns)
    }

    fn corpus(ts: Vec<Testimony>) -> Corpus {
        Corpus { name: "test".to_owned(), testimonies: ts }
    }

    #[test]
    fn answer_series_pools_pairs_by_segment() {
        let c = corpus(vec![
            testimony_with_answers("a", &[10, 20, 30, 40]),
            testimony_with_answers("b", &[50, 60, 70, 80]),
        ]);
        let cfg = MetricConfig { k: 2, min_words: 0, ..Default::default() };
        let s = answer_length_series(&c, &cfg);
        assert_eq!(s.k, 2);
        assert_eq!(s.segments[0].n, 4);
        assert_eq!(s.segments[0].mean, Some((10.0 + 20.0 + 50.0 + 60.0) / 4.0));
        assert_eq!(s.segments[1].mean, Some((30.0 + 40.0 + 70.0 + 80.0) / 4.0));
        assert_eq!(s.skipped_testimonies, 0);
    }

    #[test]
    fn per_testimony_mean_gives_one_observation_each() {
        let c = corpus(vec![
            testimony_with_answers("a", &[10, 20, 30, 40]),
            testimony_with_answers("b", &[50, 60, 70, 80]),
        ]);
        let cfg = MetricConfig {
            k: 2,
            min_words: 0,
            aggregation: Aggregation::PerTestimonyMean,
            ..Default::default()
        };
        let s = answer_length_series(&c, &cfg);
        assert_eq!(s.segments[0].n, 2);
        assert_eq!(s.samples[0], vec![15.0, 55.0]);
    }

    #[test]
    fn testimonies_too_short_for_k_are_skipped_and_counted() {
        let c = corpus(vec![
            testimony_with_answers("a", &[10, 20]),
            testimony_with_answers("b", &[10, 20, 30, 40, 50]),
        ]);
        let cfg = MetricConfig { k: 4, min_words: 0, ..Default::default() };
        let s = answer_length_series(&c, &cfg);
        assert_eq!(s.skipped_testimonies, 1);
        assert_eq!(s.segments.iter().map(|x| x.n).sum::<usize>(), 5);
    }

    #[test]
    fn question_series_skips_question_less_pairs() {
        let t = Testimony::from_turns(
            "a",
            "arc",
            vec![
                ("AB".to_owned(), SpeakerRole::Survivor, "unprompted opening words here".to_owned()),
                ("INT".to_owned(), SpeakerRole::Interviewer, "and then what?".to_owned()),
                ("AB".to_owned(), SpeakerRole::Survivor, vec!["w"; 12].join(" ")),
            ],
        );
        let cfg = MetricConfig { k: 1, min_words: 0, ..Default::default() };
        let qs = question_length_series(&corpus(vec![t]), &cfg);
        // Two pairs, but only one has a question ("and then what?" = 3 words).
        assert_eq!(qs.segments[0].n, 1);
        assert_eq!(qs.segments[0].mean, Some(3.0));
    }

    #[test]
    fn density_counts_interviewer_turns_per_kiloword() {
        // 10 uniform exchanges of 5 + 95 words; k = 2 word segments hold
        // 5 interviewer turns per 500 words each.
        let t = testimony_with_answers("a", &[97; 10]);
        // question text is 3 words => pair = 100 words
        let d = intervention_density_series(&corpus(vec![t]), 2);
        assert_eq!(d.density.segments[0].n, 1);
        assert_eq!(d.density.segments[0].mean, Some(10.0));
        assert_eq!(d.density.segments[1].mean, Some(10.0));
        let r = d.survivor_ratio.segments[0].mean.unwrap();
        assert!((r - 0.97).abs() < 1e-12);
    }

    #[test]
    fn comparison_flags_significant_segments() {
        let c1 = corpus((0..30).map(|i| testimony_with_answers(&format!("a{i}"), &[100 + i % 3, 100 + (i + 1) % 3, 30, 30 + i % 3])).collect());
        let c2 = corpus((0..30).map(|i| testimony_with_answers(&format!("b{i}"), &[30 + i % 3, 30 + (i + 1) % 3, 30, 30 + (i + 2) % 3])).collect());
        let cfg = MetricConfig { k: 2, min_words: 0, ..Default::default() };
        let sa = answer_length_series(&c1, &cfg);
        let sb = answer_length_series(&c2, &cfg);
        let report = compare_series(&sa, &sb, 0.05, TestKind::Welch).unwrap();
        assert!(report.segments[0].significant, "early segments differ by ~70 words");
        assert!(!report.segments[1].significant, "late segments share the same distribution");
        assert!(report.segments[0].t.unwrap() > 0.0);
    }

    #[test]
    fn mismatched_series_are_rejected() {
        let c = corpus(vec![testimony_with_answers("a", &[10, 20, 30, 40])]);
        let cfg2 = MetricConfig { k: 2, min_words: 0, ..Default::default() };
        let cfg4 = MetricConfig { k: 4, min_words: 0, ..Default::default() };
        let s2 = answer_length_series(&c, &cfg2);
        let s4 = answer_length_series(&c, &cfg4);
        assert!(matches!(
            compare_series(&s2, &s4, 0.05, TestKind::Welch),
            Err(StatsError::MismatchedSeries(_))
        ));
        let q2 = question_length_series(&c, &cfg2);
        assert!(matches!(
            compare_series(&s2, &q2, 0.05, TestKind::Welch),
            Err(StatsError::MismatchedSeries(_))
        ));
    }

    #[test]
    fn untestable_segments_are_reported_not_fatal() {
        let c1 = corpus(vec![testimony_with_answers("a", &[10, 20])]);
        let c2 = corpus(vec![testimony_with_answers("b", &[30, 40])]);
        let cfg = MetricConfig { k: 2, min_words: 0, ..Default::default() };
        let report = compare_series(
            &answer_length_series(&c1, &cfg),
            &answer_length_series(&c2, &cfg),
            0.05,
            TestKind::Welch,
        )
        .unwrap();
        // One pair per segment per corpus: nothing to test.
        assert!(report.segments.iter().all(|s| !s.testable && !s.significant));
        assert!(report.segments.iter().all(|s| s.p.is_none()));
    }

    #[test]
    fn csv_renderings_are_stable() {
        let c = corpus(vec![testimony_with_answers("a", &[10, 20, 30, 40])]);
        let cfg = MetricConfig { k: 2, min_words: 0, ..Default::default() };
        let s = answer_length_series(&c, &cfg);
        let csv1 = series_to_csv(&s);
        assert!(csv1.starts_with("segment,n,mean,sd\n"));
        assert_eq!(csv1, series_to_csv(&s));
        assert!(csv1.contains("0,2,15.000000,7.071068"));
    }
}
