//! Seven-way question typing.
//!
//! Every interviewer question is classed as one of `How`, `What`, `When`,
//! `Where`, `Why`, `Who`, or `Other`. Two classifiers share that label
//! space: a deterministic rule (first interrogative token in the leading
//! clause) and an LLM classifier that must answer in JSON and falls back
//! to the rule when it doesn't.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::gateway::{CompletionRequest, Gateway, GatewayError};
use crate::prompt;
use crate::segment::{merge_short_pairs, pair_qa, segment_by_pairs};
use crate::Scalar;

/// The closed label space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuestionType {
    How,
    What,
    When,
    Where,
    Why,
    Who,
    Other,
}

impl QuestionType {
    pub const ALL: [QuestionType; 7] = [
        QuestionType::How,
        QuestionType::What,
        QuestionType::When,
        QuestionType::Where,
        QuestionType::Why,
        QuestionType::Who,
        QuestionType::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            QuestionType::How => "How",
            QuestionType::What => "What",
            QuestionType::When => "When",
            QuestionType::Where => "Where",
            QuestionType::Why => "Why",
            QuestionType::Who => "Who",
            QuestionType::Other => "Other",
        }
    }

    /// Index into `ALL`, for fixed-width tallies.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).expect("member of ALL")
    }

    /// Accept a model-reported label: case-insensitive, surrounding quotes
    /// and a trailing "question" tolerated (`"When Question"` -> `When`).
    pub fn from_response_label(s: &str) -> Option<QuestionType> {
        let mut t = s.trim().trim_matches('"').trim().to_ascii_lowercase();
        if let Some(stripped) = t.strip_suffix("question") {
            t = stripped.trim_end().to_owned();
        }
        Self::ALL.into_iter().find(|ty| ty.label().to_ascii_lowercase() == t)
    }
}

/// Which classifier produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifySource {
    Rule,
    Llm,
}

#[derive(Debug, Error)]
pub enum QtypeError {
    #[error("question text is empty")]
    EmptyQuestion,
    #[error("LLM classification requires a gateway")]
    MissingGateway,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Rule classifier: the question's type is the first interrogative token
/// (`how what when where why who whom whose`, with `whom`/`whose` counting
/// as `Who`) appearing as a standalone word inside the first clause — the
/// text before the first comma or semicolon, or the whole text when there
/// is none. No such token means `Other`.
pub fn classify_rule(text: &str) -> Result<QuestionType, QtypeError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(QtypeError::EmptyQuestion);
    }
    let first_clause = match trimmed.find([',', ';']) {
        Some(i) => &trimmed[..i],
        None => trimmed,
    };
    // Standalone word = maximal alphabetic run, so "somewhat" stays whole
    // but quoted or hyphenated interrogatives still surface.
    let mut word = String::new();
    let mut words = Vec::new();
    for c in first_clause.chars() {
        if c.is_alphabetic() {
            word.extend(c.to_lowercase());
        } else if !word.is_empty() {
            words.push(std::mem::take(&mut word));
        }
    }
    if !word.is_empty() {
        words.push(word);
    }
    for w in &words {
        let ty = match w.as_str() {
            "how" => QuestionType::How,
            "what" => QuestionType::What,
            "when" => QuestionType::When,
            "where" => QuestionType::Where,
            "why" => QuestionType::Why,
            "who" | "whom" | "whose" => QuestionType::Who,
            _ => continue,
        };
        return Ok(ty);
    }
    Ok(QuestionType::Other)
}

/// One labeled question.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifiedQuestion {
    pub testimony_id: String,
    pub pair_index: usize,
    /// Chronological segment of the pair; `None` when the testimony was
    /// too short to split into `k` segments.
    pub seg_index: Option<usize>,
    pub text: String,
    pub qtype: QuestionType,
    /// Model explanation; present exactly when `source` is `Llm`.
    pub explanation: Option<String>,
    pub source: ClassifySource,
}

/// Outcome of one LLM classification call.
#[derive(Debug, Clone)]
pub struct LlmClassification {
    pub qtype: QuestionType,
    pub explanation: Option<String>,
    pub source: ClassifySource,
    /// Set when the model response was unusable and the rule answered.
    pub fallback_note: Option<String>,
}

fn parse_type_response(raw: &str) -> Option<(QuestionType, Option<String>)> {
    let mut body = raw.trim();
    // Tolerate fenced replies.
    if let Some(stripped) = body.strip_prefix("```") {
        let stripped = stripped.strip_prefix("json").unwrap_or(stripped);
        body = stripped.strip_suffix("```").unwrap_or(stripped).trim();
    }
    let value: serde_json::Value = serde_json::from_str(body).ok()?;
    let qtype = QuestionType::from_response_label(value.get("type")?.as_str()?)?;
    let explanation = value.get("explanation").and_then(|e| e.as_str()).map(str::to_owned);
    Some((qtype, explanation))
}

/// Classify one question with the LLM, bit-exact prompt included.
///
/// Unusable responses (non-JSON, or a type outside the seven labels) are
/// retried once; a second failure falls back to [`classify_rule`] with
/// `source = Rule` and a note describing the raw response.
pub fn classify_llm(
    text: &str,
    gateway: &Gateway,
    model_id: &str,
) -> Result<LlmClassification, QtypeError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(QtypeError::EmptyQuestion);
    }
    let rendered = prompt::render(prompt::QUESTION_TYPE_TEMPLATE, &[("speaker_line", trimmed)])
        .expect("question template placeholders are known");
    let req = CompletionRequest::new(
        model_id,
        rendered,
        &prompt::version(prompt::QUESTION_TYPE_TEMPLATE),
        "question_type",
    );

    let mut last_raw = String::new();
    for _ in 0..2 {
        let result = gateway.complete(&req)?;
        if let Some((qtype, explanation)) = parse_type_response(&result.text) {
            return Ok(LlmClassification {
                qtype,
                explanation,
                source: ClassifySource::Llm,
                fallback_note: None,
            });
        }
        last_raw = result.text;
    }
    let qtype = classify_rule(trimmed)?;
    let prefix: String = last_raw.chars().take(60).collect();
    Ok(LlmClassification {
        qtype,
        explanation: None,
        source: ClassifySource::Rule,
        fallback_note: Some(format!("unusable model response {prefix:?}; rule fallback")),
    })
}

/// Which classifier a batch run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifyMode {
    Rule,
    Llm,
}

/// Batch settings.
#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    pub k: usize,
    pub min_words: usize,
    pub model_id: String,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { k: 15, min_words: 10, model_id: "offline".to_owned() }
    }
}

/// Timestamp-free event for the run log.
#[derive(Debug, Clone, Serialize)]
pub struct RunNote {
    pub testimony_id: String,
    pub pair_index: usize,
    pub event: &'static str,
    pub detail: String,
}

/// Every classified question of a corpus, plus run metadata.
#[derive(Debug, Clone)]
pub struct ClassifiedBatch {
    pub corpus: String,
    pub k: usize,
    pub items: Vec<ClassifiedQuestion>,
    pub notes: Vec<RunNote>,
    /// Testimonies with fewer than `k` pairs (classified, but unsegmented).
    pub unsegmented_testimonies: usize,
}

/// Classify every question-bearing pair of a corpus, in corpus order.
pub fn classify_corpus(
    corpus: &Corpus,
    cfg: &ClassifyConfig,
    mode: ClassifyMode,
    gateway: Option<&Gateway>,
) -> Result<ClassifiedBatch, QtypeError> {
    if mode == ClassifyMode::Llm && gateway.is_none() {
        return Err(QtypeError::MissingGateway);
    }
    let mut items = Vec::new();
    let mut notes = Vec::new();
    let mut unsegmented = 0usize;

    for t in &corpus.testimonies {
        let pairs = merge_short_pairs(pair_qa(t), cfg.min_words);
        let seg_of: Option<Vec<usize>> = match segment_by_pairs(&pairs, cfg.k) {
            Ok(segs) => Some(crate::segment::assign_pairs(&pairs, &segs)),
            Err(_) => {
                unsegmented += 1;
                None
            }
        };
        for (i, p) in pairs.iter().enumerate() {
            if p.question_turns.is_empty() {
                continue;
            }
            let text = p
                .question_turns
                .iter()
                .map(|&u| t.utterances[u].text.as_str())
                .collect::<Vec<_>>()
                .join("\n");
            if text.trim().is_empty() {
                continue;
            }
            let seg_index = seg_of.as_ref().map(|s| s[i]);
            let (qtype, explanation, source) = match mode {
                ClassifyMode::Rule => (classify_rule(&text)?, None, ClassifySource::Rule),
                ClassifyMode::Llm => {
                    let out =
                        classify_llm(&text, gateway.expect("checked above"), &cfg.model_id)?;
                    if let Some(detail) = out.fallback_note {
                        notes.push(RunNote {
                            testimony_id: t.id.clone(),
                            pair_index: i,
                            event: "parse_fallback",
                            detail,
                        });
                    }
                    (out.qtype, out.explanation, out.source)
                }
            };
            items.push(ClassifiedQuestion {
                testimony_id: t.id.clone(),
                pair_index: i,
                seg_index,
                text,
                qtype,
                explanation,
                source,
            });
        }
    }
    Ok(ClassifiedBatch {
        corpus: corpus.name.clone(),
        k: cfg.k,
        items,
        notes,
        unsegmented_testimonies: unsegmented,
    })
}

/// Question-type proportions, overall and per segment.
#[derive(Debug, Clone, Serialize)]
pub struct TypeDistribution {
    pub corpus: String,
    pub k: usize,
    pub total: usize,
    pub overall_counts: [usize; 7],
    /// Proportions in `QuestionType::ALL` order; zeros when `total == 0`.
    pub overall: [Scalar; 7],
    pub per_segment_counts: Vec<[usize; 7]>,
    /// `None` for segments that collected no questions.
    pub per_segment: Vec<Option<[Scalar; 7]>>,
}

pub fn type_distribution(batch: &ClassifiedBatch) -> TypeDistribution {
    let mut overall_counts = [0usize; 7];
    let mut per_segment_counts = vec![[0usize; 7]; batch.k];
    for item in &batch.items {
        overall_counts[item.qtype.index()] += 1;
        if let Some(s) = item.seg_index {
            per_segment_counts[s][item.qtype.index()] += 1;
        }
    }
    let total: usize = overall_counts.iter().sum();
    let to_props = |counts: &[usize; 7]| -> Option<[Scalar; 7]> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return None;
        }
        let mut p = [0.0; 7];
        for (slot, &c) in p.iter_mut().zip(counts) {
            *slot = c as Scalar / n as Scalar;
        }
        Some(p)
    };
    TypeDistribution {
        corpus: batch.corpus.clone(),
        k: batch.k,
        total,
        overall: to_props(&overall_counts).unwrap_or([0.0; 7]),
        overall_counts,
        per_segment: per_segment_counts.iter().map(to_props).collect(),
        per_segment_counts,
    }
}

/// CSV of the overall distribution: `type,count,proportion`.
pub fn distribution_to_csv(dist: &TypeDistribution) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["type", "count", "proportion"]).expect("in-memory write");
    for ty in QuestionType::ALL {
        let i = ty.index();
        w.write_record([
            ty.label().to_owned(),
            dist.overall_counts[i].to_string(),
            format!("{:.6}", dist.overall[i]),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// CSV of the per-segment distribution: `segment,n,<seven proportion columns>`.
pub fn per_segment_to_csv(dist: &TypeDistribution) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["segment".to_owned(), "n".to_owned()];
    header.extend(QuestionType::ALL.iter().map(|t| t.label().to_ascii_lowercase()));
    w.write_record(&header).expect("in-memory write");
    for (s, props) in dist.per_segment.iter().enumerate() {
        let n: usize = dist.per_segment_counts[s].iter().sum();
        let mut row = vec![s.to_string(), n.to_string()];
        match props {
            Some(p) => row.extend(p.iter().map(|v| format!("{v:.6}"))),
            None => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// A seeded per-type sample for human review.
#[derive(Debug, Clone)]
pub struct ValidationSample {
    pub per_type: usize,
    pub rows: Vec<ClassifiedQuestion>,
    /// Types with fewer candidates than requested: `(type, available)`.
    pub shortfall: Vec<(QuestionType, usize)>,
}

/// Draw up to `per_type` questions of each type, uniformly without
/// replacement, deterministically from `seed`. Candidates are ordered by
/// `(testimony_id, pair_index)` first so the draw is independent of input
/// order, and selected rows are emitted in that same order.
pub fn validation_sample(
    items: &[ClassifiedQuestion],
    per_type: usize,
    seed: u64,
) -> ValidationSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut shortfall = Vec::new();
    for ty in QuestionType::ALL {
        let mut candidates: Vec<&ClassifiedQuestion> =
            items.iter().filter(|c| c.qtype == ty).collect();
        candidates.sort_by(|a, b| {
            (a.testimony_id.as_str(), a.pair_index).cmp(&(b.testimony_id.as_str(), b.pair_index))
        });
        if candidates.len() < per_type {
            shortfall.push((ty, candidates.len()));
        }
        let mut picked: Vec<&ClassifiedQuestion> = if candidates.len() <= per_type {
            candidates
        } else {
            rand::seq::index::sample(&mut rng, candidates.len(), per_type)
                .into_iter()
                .map(|i| candidates[i])
                .collect()
        };
        picked.sort_by(|a, b| {
            (a.testimony_id.as_str(), a.pair_index).cmp(&(b.testimony_id.as_str(), b.pair_index))
        });
        rows.extend(picked.into_iter().cloned());
    }
    ValidationSample { per_type, rows, shortfall }
}

/// Review CSV: `type,testimony_id,pair_index,question,review` with the
/// review column left blank for annotators.
pub fn validation_to_csv(sample: &ValidationSample) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["type", "testimony_id", "pair_index", "question", "review"])
        .expect("in-memory write");
    for row in &sample.rows {
        w.write_record([
            row.qtype.label().to_owned(),
            row.testimony_id.clone(),
            row.pair_index.to_string(),
            row.text.clone(),
            String::new(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SpeakerRole, Testimony};
    use crate::gateway::{mock_script, MockRule};

    #[test]
    fn rule_finds_first_interrogative_in_first_clause() {
        let cases = [
            ("When did you arrive?", QuestionType::When),
            ("And what happened next?", QuestionType::What),
            ("HOW did it start?", QuestionType::How),
            ("Where were you living?", QuestionType::Where),
            ("Why, do you think, did they come?", QuestionType::Why),
            ("Whom did you travel with?", QuestionType::Who),
            ("Whose house was that?", QuestionType::Who),
            ("\"What\" did he shout?", QuestionType::What),
            ("Tell me about the camp.", QuestionType::Other),
            ("You were, what, sixteen then?", QuestionType::Other),
            ("Describe the journey; where did it end?", QuestionType::Other),
            ("A somewhat strange story, no?", QuestionType::Other),
        ];
        for (text, want) in cases {
            assert_eq!(classify_rule(text).unwrap(), want, "on {text:?}");
        }
    }

    #[test]
    fn rule_rejects_empty_questions() {
        assert!(matches!(classify_rule("   "), Err(QtypeError::EmptyQuestion)));
    }

    #[test]
    fn response_labels_parse_tolerantly() {
        assert_eq!(QuestionType::from_response_label("When Question"), Some(QuestionType::When));
        assert_eq!(QuestionType::from_response_label("what"), Some(QuestionType::What));
        assert_eq!(QuestionType::from_response_label("\"Why Question\""), Some(QuestionType::Why));
        assert_eq!(QuestionType::from_response_label("OTHER"), Some(QuestionType::Other));
        assert_eq!(QuestionType::from_response_label("banana"), None);
        assert_eq!(QuestionType::from_response_label("whoever"), None);
    }

    #[test]
    fn llm_path_parses_json_and_keeps_explanation() {
        let gw = mock_script(vec![MockRule::when_contains(
            "Interviewer Question:",
            r#"{"type": "When Question", "explanation": "asks about timing"}"#,
        )]);
        let out = classify_llm("When did you arrive?", &gw, "m").unwrap();
        assert_eq!(out.qtype, QuestionType::When);
        assert_eq!(out.source, ClassifySource::Llm);
        assert_eq!(out.explanation.as_deref(), Some("asks about timing"));
        assert!(out.fallback_note.is_none());
    }

    #[test]
    fn llm_path_tolerates_fenced_json() {
        let gw = mock_script(vec![MockRule::fallback(
            "```json\n{\"type\": \"Who\", \"explanation\": \"a person\"}\n```",
        )]);
        let out = classify_llm("Who was there?", &gw, "m").unwrap();
        assert_eq!(out.qtype, QuestionType::Who);
    }

    #[test]
    fn unusable_responses_fall_back_to_rule() {
        let gw = mock_script(vec![MockRule::fallback("not json at all")]);
        let out = classify_llm("Where was the farm?", &gw, "m").unwrap();
        assert_eq!(out.qtype, QuestionType::Where);
        assert_eq!(out.source, ClassifySource::Rule);
        assert!(out.explanation.is_none());
        assert!(out.fallback_note.unwrap().contains("rule fallback"));

        let gw = mock_script(vec![MockRule::fallback(r#"{"type": "Banana", "explanation": "?"}"#)]);
        let out = classify_llm("Where was the farm?", &gw, "m").unwrap();
        assert_eq!(out.qtype, QuestionType::Where);
        assert_eq!(out.source, ClassifySource::Rule);
    }

    fn interview(id: &str, questions: &[&str]) -> Testimony {
        let mut turns = Vec::new();
        for q in questions {
            turns.push(("INT".to_owned(), SpeakerRole::Interviewer, (*q).to_owned()));
            turns.push(("AB".to_owned(), SpeakerRole::Survivor, "an answer of several words here".to_owned()));
        }
        Testimony::from_turns(id, "arc", turns)
    }

    #[test]
    fn batch_classification_tracks_segments_and_counts() {
        let corpus = Corpus {
            name: "c".to_owned(),
            testimonies: vec![interview(
                "t1",
                &["When was that?", "Where exactly?", "Tell me more.", "Who came along?"],
            )],
        };
        let cfg = ClassifyConfig { k: 2, min_words: 0, ..Default::default() };
        let batch = classify_corpus(&corpus, &cfg, ClassifyMode::Rule, None).unwrap();
        assert_eq!(batch.items.len(), 4);
        assert_eq!(batch.items[0].seg_index, Some(0));
        assert_eq!(batch.items[3].seg_index, Some(1));

        let dist = type_distribution(&batch);
        assert_eq!(dist.total, 4);
        assert_eq!(dist.overall_counts[QuestionType::When.index()], 1);
        assert_eq!(dist.overall_counts[QuestionType::Other.index()], 1);
        assert!((dist.overall.iter().sum::<Scalar>() - 1.0).abs() < 1e-12);
        let seg0 = dist.per_segment[0].unwrap();
        assert_eq!(seg0[QuestionType::When.index()], 0.5);
    }

    #[test]
    fn llm_mode_requires_gateway() {
        let corpus = Corpus { name: "c".to_owned(), testimonies: vec![] };
        assert!(matches!(
            classify_corpus(&corpus, &ClassifyConfig::default(), ClassifyMode::Llm, None),
            Err(QtypeError::MissingGateway)
        ));
    }

    #[test]
    fn validation_sample_is_seeded_and_sorted() {
        let corpus = Corpus {
            name: "c".to_owned(),
            testimonies: (0..5)
                .map(|i| {
                    interview(
                        &format!("t{i}"),
                        &["When was it?", "When did you go?", "Tell me about it."],
                    )
                })
                .collect(),
        };
        let cfg = ClassifyConfig { k: 3, min_words: 0, ..Default::default() };
        let batch = classify_corpus(&corpus, &cfg, ClassifyMode::Rule, None).unwrap();

        let s1 = validation_sample(&batch.items, 3, 99);
        let s2 = validation_sample(&batch.items, 3, 99);
        let ids =
            |s: &ValidationSample| s.rows.iter().map(|r| (r.testimony_id.clone(), r.pair_index)).collect::<Vec<_>>();
        assert_eq!(ids(&s1), ids(&s2), "same seed, same draw");
        let s3 = validation_sample(&batch.items, 3, 100);
        assert_ne!(ids(&s1), ids(&s3), "different seed should move the draw");

        // 10 When questions available, 5 Other; everything else is short.
        assert_eq!(s1.rows.iter().filter(|r| r.qtype == QuestionType::When).count(), 3);
        assert!(s1.shortfall.iter().any(|(ty, n)| *ty == QuestionType::How && *n == 0));

        let csv = validation_to_csv(&s1);
        assert!(csv.starts_with("type,testimony_id,pair_index,question,review\n"));
        assert!(csv.lines().skip(1).all(|l| l.ends_with(',')));
    }
}
