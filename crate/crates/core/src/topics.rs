//! Staged topic extraction over chronological segments.
//!
//! Stage 1 names every Q/A pair with a short topic title (one completion
//! per pair, resumable through [`LabelStore`]). Stage 2 pools the titles
//! that fell into each of the `k` segments and asks the model for the `K`
//! most common topics of that segment. Each consolidated topic then gets a
//! *coverage* score: the fraction of the segment's stage-1 titles a
//! token-overlap matcher assigns to it. Finally, topics that recur across
//! segments are grouped so renderings can show continuity over time.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Testimony};
use crate::gateway::{CompletionRequest, Gateway, GatewayError};
use crate::prompt;
use crate::segment::{assign_pairs, merge_short_pairs, pair_qa, segment_by_pairs, QAPair};
use crate::Scalar;

/// Words ignored when comparing titles by content overlap.
pub const TITLE_STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "of", "in", "on", "at", "to", "for", "with", "from", "by",
    "is", "are", "was", "were", "be", "his", "her", "their", "my", "our", "its", "during",
    "after", "before", "into", "about", "under", "over",
];

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("model produced {got} usable titles, need {needed}")]
    InsufficientTitles { needed: usize, got: usize },
    #[error("label store {path}: {source}")]
    Store {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no testimony could be split into {k} segments")]
    NothingToAnalyze { k: usize },
}

/// Stage-1 output for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub testimony_id: String,
    pub pair_index: usize,
    pub title: String,
    pub reason: String,
    /// True when the model response was unusable twice and the title was
    /// derived from the answer text instead.
    pub degraded: bool,
}

/// Append-only JSONL store of stage-1 labels, keyed by
/// `(testimony_id, pair_index, prompt_version, model_id)` so reruns skip
/// completed work and template or model changes invalidate entries.
pub struct LabelStore {
    path: PathBuf,
    entries: HashMap<(String, usize, String, String), TopicLabel>,
}

#[derive(Serialize, Deserialize)]
struct StoredLabel {
    prompt_version: String,
    model_id: String,
    #[serde(flatten)]
    label: TopicLabel,
}

impl LabelStore {
    /// Open (or create) the store at `path`, loading any existing lines.
    pub fn open(path: &Path) -> Result<Self, TopicsError> {
        let mut entries = HashMap::new();
        match std::fs::read_to_string(path) {
            Ok(raw) => {
                for (no, line) in raw.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let stored: StoredLabel =
                        serde_json::from_str(line).map_err(|e| TopicsError::Store {
                            path: path.to_owned(),
                            source: io::Error::new(
                                io::ErrorKind::InvalidData,
                                format!("line {}: {e}", no + 1),
                            ),
                        })?;
                    entries.insert(
                        (
                            stored.label.testimony_id.clone(),
                            stored.label.pair_index,
                            stored.prompt_version.clone(),
                            stored.model_id.clone(),
                        ),
                        stored.label,
                    );
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(TopicsError::Store { path: path.to_owned(), source: e }),
        }
        Ok(LabelStore { path: path.to_owned(), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(
        &self,
        testimony_id: &str,
        pair_index: usize,
        prompt_version: &str,
        model_id: &str,
    ) -> Option<&TopicLabel> {
        self.entries.get(&(
            testimony_id.to_owned(),
            pair_index,
            prompt_version.to_owned(),
            model_id.to_owned(),
        ))
    }

    pub fn put(
        &mut self,
        label: TopicLabel,
        prompt_version: &str,
        model_id: &str,
    ) -> Result<(), TopicsError> {
        let stored = StoredLabel {
            prompt_version: prompt_version.to_owned(),
            model_id: model_id.to_owned(),
            label: label.clone(),
        };
        let mut line = serde_json::to_string(&stored).expect("label serializes");
        line.push('\n');
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| TopicsError::Store { path: self.path.clone(), source: e })?;
        f.write_all(line.as_bytes())
            .map_err(|e| TopicsError::Store { path: self.path.clone(), source: e })?;
        self.entries.insert(
            (
                label.testimony_id.clone(),
                label.pair_index,
                prompt_version.to_owned(),
                model_id.to_owned(),
            ),
            label,
        );
        Ok(())
    }
}

fn flatten(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Render one pair as the snippet the naming prompt quotes: `INT:` lines
/// for interviewer turns, `SUBJECT:` for the survivor, `OTHER:` for anyone
/// else, in document order with turn texts flattened to single lines.
pub fn render_pair_text(t: &Testimony, pair: &QAPair) -> String {
    let mut indices: Vec<usize> =
        pair.question_turns.iter().chain(&pair.answer_turns).copied().collect();
    indices.sort_unstable();
    indices
        .iter()
        .map(|&i| {
            let u = &t.utterances[i];
            let prefix = match u.role {
                crate::corpus::SpeakerRole::Interviewer => "INT",
                crate::corpus::SpeakerRole::Survivor => "SUBJECT",
                crate::corpus::SpeakerRole::Other => "OTHER",
            };
            format!("{prefix}: {}", flatten(&u.text))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn first_words(text: &str, n: usize) -> String {
    text.split_whitespace().take(n).collect::<Vec<_>>().join(" ")
}

fn strip_quotes(s: &str) -> &str {
    s.trim().trim_matches(|c| c == '"' || c == '\u{201c}' || c == '\u{201d}').trim()
}

fn parse_naming_response(raw: &str) -> Option<(String, String)> {
    let mut title = None;
    let mut reason = None;
    for line in raw.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("Title:") {
            let t = strip_quotes(rest);
            if !t.is_empty() {
                title = Some(t.to_owned());
            }
        } else if let Some(rest) = line.strip_prefix("Reason:") {
            reason = Some(strip_quotes(rest).to_owned());
        }
    }
    title.map(|t| (t, reason.unwrap_or_default()))
}

/// Name the topic of one pair.
///
/// Responses must carry a `Title:` line (a `Reason:` line is kept when
/// present); anything else is retried once, then degraded to the first six
/// words of the answer. Titles are truncated to eight words.
pub fn name_topic(
    gateway: &Gateway,
    model_id: &str,
    pair_text: &str,
    answer_text: &str,
) -> Result<(String, String, bool), TopicsError> {
    let rendered = prompt::render(prompt::TOPIC_NAMING_TEMPLATE, &[("text_snippet", pair_text)])
        .expect("naming template placeholders are known");
    let req = CompletionRequest::new(
        model_id,
        rendered,
        &prompt::version(prompt::TOPIC_NAMING_TEMPLATE),
        "topic_naming",
    );
    for _ in 0..2 {
        let result = gateway.complete(&req)?;
        if let Some((title, reason)) = parse_naming_response(&result.text) {
            return Ok((first_words(&title, 8), reason, false));
        }
    }
    let source = if answer_text.trim().is_empty() { pair_text } else { answer_text };
    Ok((first_words(&flatten(source), 6), "degraded: unusable model response".to_owned(), true))
}

/// Render the stage-2 title tally: unique titles in first-occurrence order
/// with multiplicities, `- <title> (×n)` per line. When there are more than
/// `cap` unique titles, the most frequent `cap` are kept (ties broken by
/// first occurrence) and the rest dropped.
pub fn render_title_set(titles: &[String], cap: usize) -> String {
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in titles {
        let t = t.trim();
        if t.is_empty() {
            continue;
        }
        if !counts.contains_key(t) {
            order.push(t);
        }
        *counts.entry(t).or_default() += 1;
    }
    if order.len() > cap {
        let mut ranked: Vec<(usize, &str)> = order
            .iter()
            .enumerate()
            .map(|(first_seen, &t)| (first_seen, t))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        ranked.sort_by(|a, b| counts[b.1].cmp(&counts[a.1]).then(a.0.cmp(&b.0)));
        let keep: BTreeSet<&str> = ranked.iter().take(cap).map(|&(_, t)| t).collect();
        order.retain(|t| keep.contains(t));
    }
    order
        .iter()
        .map(|t| format!("- {t} (×{})", counts[t]))
        .collect::<Vec<_>>()
        .join("\n")
}

fn numbered_skeleton(num_topics: usize) -> String {
    (1..=num_topics).map(|i| format!("{i}. \"<topic {i}>\"")).collect::<Vec<_>>().join("\n")
}

/// Standalone-word check for conjunctions a single topic title must not
/// contain.
fn has_conjunction(title: &str) -> bool {
    if title.contains('&') || title.contains('/') {
        return true;
    }
    title
        .split(|c: char| !c.is_alphanumeric())
        .any(|w| w.eq_ignore_ascii_case("and") || w.eq_ignore_ascii_case("or"))
}

fn parse_numbered_list(raw: &str) -> Vec<String> {
    let mut numbered = Vec::new();
    let mut bare = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let after_number = line
            .find(|c: char| c == '.' || c == ')')
            .filter(|&dot| line[..dot].chars().all(|c| c.is_ascii_digit()) && dot > 0)
            .map(|dot| &line[dot + 1..]);
        match after_number {
            Some(rest) => {
                let title = strip_quotes(rest);
                if !title.is_empty() {
                    numbered.push(title.to_owned());
                }
            }
            None => {
                let title = strip_quotes(line);
                if !title.is_empty() {
                    bare.push(title.to_owned());
                }
            }
        }
    }
    // A reply that continues our trailing "1." starts with an unnumbered
    // first title; keep bare lines only when nothing was numbered, except
    // for that leading continuation.
    if numbered.is_empty() {
        bare
    } else if !raw.trim_start().starts_with(|c: char| c.is_ascii_digit()) && !bare.is_empty() {
        let mut out = vec![bare.remove(0)];
        out.extend(numbered);
        out
    } else {
        numbered
    }
}

fn usable_titles(raw: &str, num_topics: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for title in parse_numbered_list(raw) {
        if has_conjunction(&title) {
            continue;
        }
        let key = title.to_lowercase();
        if seen.insert(key) {
            out.push(title);
        }
        if out.len() == num_topics {
            break;
        }
    }
    out
}

/// Consolidate a segment's stage-1 titles into `num_topics` distinct
/// common topics. Conjunction-bearing or duplicate titles are discarded;
/// if the first reply leaves fewer than `num_topics` usable titles the
/// request is made once more before failing.
pub fn common_topics(
    gateway: &Gateway,
    model_id: &str,
    titles: &[String],
    num_topics: usize,
    title_set_cap: usize,
) -> Result<Vec<String>, TopicsError> {
    let rendered = prompt::render(
        prompt::COMMON_TOPICS_TEMPLATE,
        &[
            ("title_set", &render_title_set(titles, title_set_cap)),
            ("num_topics", &num_topics.to_string()),
            ("output_format", &numbered_skeleton(num_topics)),
        ],
    )
    .expect("consolidation template placeholders are known");
    let req = CompletionRequest::new(
        model_id,
        rendered,
        &prompt::version(prompt::COMMON_TOPICS_TEMPLATE),
        "common_topics",
    );
    let mut got = 0;
    for _ in 0..2 {
        let result = gateway.complete(&req)?;
        let usable = usable_titles(&result.text, num_topics);
        got = usable.len();
        if got >= num_topics {
            return Ok(usable);
        }
    }
    Err(TopicsError::InsufficientTitles { needed: num_topics, got })
}

/// Decides whether a stage-1 label belongs to a consolidated topic.
pub trait TitleMatcher: Send + Sync {
    fn matches(&self, label: &str, topic: &str) -> bool;
}

/// Lowercased content words of a title (stopwords removed).
pub fn content_words(title: &str) -> BTreeSet<String> {
    title
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !TITLE_STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Jaccard overlap of content words at a threshold (default 0.5).
pub struct TokenOverlapMatcher {
    pub threshold: Scalar,
}

impl Default for TokenOverlapMatcher {
    fn default() -> Self {
        TokenOverlapMatcher { threshold: 0.5 }
    }
}

impl TitleMatcher for TokenOverlapMatcher {
    fn matches(&self, label: &str, topic: &str) -> bool {
        let a = content_words(label);
        let b = content_words(topic);
        if a.is_empty() && b.is_empty() {
            return label.trim().eq_ignore_ascii_case(topic.trim());
        }
        let inter = a.intersection(&b).count();
        let union = a.union(&b).count();
        (inter as Scalar / union as Scalar) >= self.threshold
    }
}

/// Fraction of `labels` the matcher assigns to `topic`; 0.0 for an empty
/// label list. Pure, so it is permutation- and duplication-consistent.
pub fn coverage_score(labels: &[String], topic: &str, matcher: &dyn TitleMatcher) -> Scalar {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = labels.iter().filter(|l| matcher.matches(l, topic)).count();
    hits as Scalar / labels.len() as Scalar
}

/// Group titles transitively: two titles share a group when the matcher
/// links them, directly or through intermediates. Group ids are assigned
/// in first-appearance order of each group's earliest title.
pub fn group_titles(titles: &[String], matcher: &dyn TitleMatcher) -> BTreeMap<String, usize> {
    let mut unique: Vec<&str> = Vec::new();
    for t in titles {
        if !unique.contains(&t.as_str()) {
            unique.push(t);
        }
    }
    let n = unique.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            if matcher.matches(unique[i], unique[j]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    // Keep the smaller (earlier) index as root.
                    let (lo, hi) = (ri.min(rj), ri.max(rj));
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut group_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let next = group_of_root.len();
        let gid = *group_of_root.entry(root).or_insert(next);
        out.insert(unique[i].to_owned(), gid);
    }
    out
}

/// One consolidated topic of one segment.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentTopic {
    pub title: String,
    /// Fraction of the segment's stage-1 labels assigned to this topic.
    pub coverage: Scalar,
    /// Cross-segment group id (same id = same recurring topic).
    pub group: usize,
}

/// The k × K chronological topic table for one corpus.
#[derive(Debug, Clone, Serialize)]
pub struct TopicTable {
    pub corpus: String,
    pub k: usize,
    pub topics_per_segment: usize,
    pub model_id: String,
    pub naming_prompt_version: String,
    pub consolidation_prompt_version: String,
    /// Ids of the testimonies actually analyzed (post-subsampling).
    pub sampled_testimonies: Vec<String>,
    /// Sampled testimonies with fewer than `k` pairs, excluded from rows.
    pub skipped_testimonies: usize,
    /// `k` rows of `topics_per_segment` topics each.
    pub rows: Vec<Vec<SegmentTopic>>,
}

/// Pipeline settings.
#[derive(Debug, Clone)]
pub struct TopicPipelineConfig {
    pub k: usize,
    pub topics_per_segment: usize,
    pub min_words: usize,
    /// Analyze a seeded subsample of this many testimonies (`None` = all).
    pub sample_size: Option<usize>,
    pub seed: u64,
    pub model_id: String,
    /// Unique-title cap for the stage-2 tally.
    pub title_set_cap: usize,
}

impl Default for TopicPipelineConfig {
    fn default() -> Self {
        TopicPipelineConfig {
            k: 15,
            topics_per_segment: 3,
            min_words: 10,
            sample_size: Some(50),
            seed: 17,
            model_id: "offline".to_owned(),
            title_set_cap: 400,
        }
    }
}

/// Run both stages over a corpus.
///
/// Deterministic end to end for a fixed corpus, config, and provider
/// behaviour: the subsample is seeded, pairs are processed in corpus
/// order, and per-segment title pools preserve that order.
pub fn build_topic_table(
    corpus: &Corpus,
    gateway: &Gateway,
    cfg: &TopicPipelineConfig,
    mut store: Option<&mut LabelStore>,
) -> Result<TopicTable, TopicsError> {
    let naming_version = prompt::version(prompt::TOPIC_NAMING_TEMPLATE);
    let consolidation_version = prompt::version(prompt::COMMON_TOPICS_TEMPLATE);

    // Seeded subsample over the (already id-sorted) testimony list.
    let selected: Vec<&Testimony> = match cfg.sample_size {
        Some(size) if size < corpus.testimonies.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut idx: Vec<usize> =
                rand::seq::index::sample(&mut rng, corpus.testimonies.len(), size).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| &corpus.testimonies[i]).collect()
        }
        _ => corpus.testimonies.iter().collect(),
    };

    // Stage 1: a title for every pair, resumable through the store.
    let mut skipped = 0usize;
    let mut segment_titles: Vec<Vec<String>> = vec![Vec::new(); cfg.k];
    let mut analyzed_any = false;
    for t in &selected {
        let pairs = merge_short_pairs(pair_qa(t), cfg.min_words);
        let Ok(segs) = segment_by_pairs(&pairs, cfg.k) else {
            skipped += 1;
            continue;
        };
        analyzed_any = true;
        let assigned = assign_pairs(&pairs, &segs);
        for (i, pair) in pairs.iter().enumerate() {
            let title = match store
                .as_ref()
                .and_then(|s| s.get(&t.id, i, &naming_version, &cfg.model_id))
            {
                Some(label) => label.title.clone(),
                None => {
                    let pair_text = render_pair_text(t, pair);
                    let answer_text = pair
                        .answer_turns
                        .iter()
                        .map(|&u| t.utterances[u].text.as_str())
                        .collect::<Vec<_>>()
                        .join(" ");
                    let (title, reason, degraded) =
                        name_topic(gateway, &cfg.model_id, &pair_text, &answer_text)?;
                    if let Some(s) = store.as_mut() {
                        s.put(
                            TopicLabel {
                                testimony_id: t.id.clone(),
                                pair_index: i,
                                title: title.clone(),
                                reason,
                                degraded,
                            },
                            &naming_version,
                            &cfg.model_id,
                        )?;
                    }
                    title
                }
            };
            segment_titles[assigned[i]].push(title);
        }
    }
    if !analyzed_any {
        return Err(TopicsError::NothingToAnalyze { k: cfg.k });
    }

    // Stage 2: consolidate per segment, then score coverage.
    let matcher = TokenOverlapMatcher::default();
    let mut rows: Vec<Vec<SegmentTopic>> = Vec::with_capacity(cfg.k);
    for titles in &segment_titles {
        let consolidated = common_topics(
            gateway,
            &cfg.model_id,
            titles,
            cfg.topics_per_segment,
            cfg.title_set_cap,
        )?;
        rows.push(
            consolidated
                .into_iter()
                .map(|title| {
                    let coverage = coverage_score(titles, &title, &matcher);
                    SegmentTopic { title, coverage, group: 0 }
                })
                .collect(),
        );
    }

    // Cross-segment grouping in row-major order.
    let all_titles: Vec<String> =
        rows.iter().flat_map(|r| r.iter().map(|t| t.title.clone())).collect();
    let groups = group_titles(&all_titles, &matcher);
    for row in &mut rows {
        for topic in row {
            topic.group = groups[&topic.title];
        }
    }

    Ok(TopicTable {
        corpus: corpus.name.clone(),
        k: cfg.k,
        topics_per_segment: cfg.topics_per_segment,
        model_id: cfg.model_id.clone(),
        naming_prompt_version: naming_version,
        consolidation_prompt_version: consolidation_version,
        sampled_testimonies: selected.iter().map(|t| t.id.clone()).collect(),
        skipped_testimonies: skipped,
        rows,
    })
}

/// CSV rendering: `segment,rank,title,coverage,group`.
pub fn table_to_csv(table: &TopicTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["segment", "rank", "title", "coverage", "group"]).expect("in-memory write");
    for (s, row) in table.rows.iter().enumerate() {
        for (rank, topic) in row.iter().enumerate() {
            w.write_record([
                s.to_string(),
                (rank + 1).to_string(),
                topic.title.clone(),
                format!("{:.2}", topic.coverage),
                topic.group.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Markdown table, one row per segment, `Title (coverage)` cells.
pub fn table_to_markdown(table: &TopicTable) -> String {
    let mut out = String::new();
    out.push_str("| Segment |");
    for i in 1..=table.topics_per_segment {
        out.push_str(&format!(" Topic {i} |"));
    }
    out.push('\n');
    out.push_str("| --- |");
    for _ in 0..table.topics_per_segment {
        out.push_str(" --- |");
    }
    out.push('\n');
    for (s, row) in table.rows.iter().enumerate() {
        out.push_str(&format!("| {s} |"));
        for topic in row {
            out.push_str(&format!(" {} ({:.2}) |", topic.title, topic.coverage));
        }
        out.push('\n');
    }
    out
}

/// Color palette for topic groups (cycled when groups outnumber it).
const GROUP_PALETTE: &[&str] = &[
    "#cfe8ff", "#ffd9c9", "#d6f5d6", "#f3d9ff", "#fff3bf", "#c9f0ef", "#ffd6e8", "#e2e2e2",
    "#d9e4ff", "#e8ffd9",
];

/// Self-contained HTML rendering; recurring topic groups share a cell
/// colour so continuity across segments is visible at a glance.
pub fn table_to_html(table: &TopicTable) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n");
    out.push_str(&format!("<title>Topics over time: {}</title>\n", html_escape(&table.corpus)));
    out.push_str(
        "<style>table{border-collapse:collapse;font-family:sans-serif}\
         td,th{border:1px solid #999;padding:4px 8px;text-align:left}</style>\n",
    );
    out.push_str("</head><body>\n");
    out.push_str(&format!(
        "<h1>Topics over time: {} (k = {}, model = {})</h1>\n",
        html_escape(&table.corpus),
        table.k,
        html_escape(&table.model_id)
    ));
    out.push_str("<table>\n<tr><th>Segment</th>");
    for i in 1..=table.topics_per_segment {
        out.push_str(&format!("<th>Topic {i}</th>"));
    }
    out.push_str("</tr>\n");
    for (s, row) in table.rows.iter().enumerate() {
        out.push_str(&format!("<tr><td>{s}</td>"));
        for topic in row {
            let color = GROUP_PALETTE[topic.group % GROUP_PALETTE.len()];
            out.push_str(&format!(
                "<td style=\"background:{color}\">{} ({:.2})</td>",
                html_escape(&topic.title),
                topic.coverage
            ));
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n</body></html>\n");
    out
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SpeakerRole;
    use crate::gateway::{mock_script, MockRule};

    #[test]
    fn title_set_orders_by_first_occurrence_with_counts() {
        let titles: Vec<String> = ["Ghetto Life", "Camp Arrival", "Ghetto Life", "Ghetto Life"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let set = render_title_set(&titles, 400);
        assert_eq!(set, "- Ghetto Life (×3)\n- Camp Arrival (×1)");
    }

    #[test]
    fn title_set_cap_keeps_most_frequent() {
        let mut titles = Vec::new();
        for i in 0..10 {
            for _ in 0..=i {
                titles.push(format!("Topic Number{i}"));
            }
        }
        let set = render_title_set(&titles, 3);
        assert_eq!(set.lines().count(), 3);
        assert!(set.contains("Number9 (×10)"));
        assert!(set.contains("Number8 (×9)"));
        assert!(set.contains("Number7 (×8)"));
    }

    #[test]
    fn numbered_list_parser_is_tolerant() {
        assert_eq!(
            parse_numbered_list("1. \"Family Meals\"\n2. School Days\n3) Town Square"),
            vec!["Family Meals", "School Days", "Town Square"]
        );
        // Continuation of a trailing "1." on the prompt side.
        assert_eq!(
            parse_numbered_list("\"Family Meals\"\n2. \"School Days\""),
            vec!["Family Meals", "School Days"]
        );
        // No numbering at all.
        assert_eq!(parse_numbered_list("Alpha\nBeta"), vec!["Alpha", "Beta"]);
    }

    #[test]
    fn conjunction_titles_are_rejected() {
        assert!(has_conjunction("Family and School"));
        assert!(has_conjunction("Work & Struggle"));
        assert!(has_conjunction("Hiding/Escape"));
        assert!(!has_conjunction("Grand Hotel"));
        // "and" inside a word is fine.
        assert!(!has_conjunction("Husband Memories"));
    }

    #[test]
    fn name_topic_parses_and_truncates() {
        let gw = mock_script(vec![MockRule::when_contains(
            "Text snippet:",
            "Title: \"One Two Three Four Five Six Seven Eight Nine Ten\"\nReason: \"says so\"",
        )]);
        let (title, reason, degraded) = name_topic(&gw, "m", "INT: q\nSUBJECT: a", "a").unwrap();
        assert_eq!(title, "One Two Three Four Five Six Seven Eight");
        assert_eq!(reason, "says so");
        assert!(!degraded);
    }

    #[test]
    fn name_topic_degrades_to_answer_prefix() {
        let gw = mock_script(vec![MockRule::fallback("no structured reply here")]);
        let (title, _, degraded) =
            name_topic(&gw, "m", "INT: q", "we walked the whole night through the forest").unwrap();
        assert!(degraded);
        assert_eq!(title, "we walked the whole night through");
    }

    #[test]
    fn common_topics_uses_mock_and_caps_at_num_topics() {
        let gw = mock_script(vec![MockRule::when_contains(
            "Title Set:",
            "1. \"Ghetto Life\"\n2. \"Camp Arrival\"\n3. \"Forced March\"\n4. \"Extra\"",
        )]);
        let titles: Vec<String> = vec!["Ghetto Life".into(), "Camp Arrival".into()];
        let topics = common_topics(&gw, "m", &titles, 3, 400).unwrap();
        assert_eq!(topics, vec!["Ghetto Life", "Camp Arrival", "Forced March"]);
    }

    #[test]
    fn common_topics_fails_after_retry_when_short() {
        let gw = mock_script(vec![MockRule::fallback("1. \"Only One\"")]);
        let err = common_topics(&gw, "m", &["Only One".to_owned().clone()], 3, 400).unwrap_err();
        assert!(matches!(err, TopicsError::InsufficientTitles { needed: 3, got: 1 }));
    }

    #[test]
    fn conjunctions_and_duplicates_do_not_count_toward_the_quota() {
        let gw = mock_script(vec![MockRule::fallback(
            "1. \"Family and School\"\n2. \"Family Meals\"\n3. \"family meals\"\n4. \"School Days\"\n5. \"Town Square\"",
        )]);
        let topics = common_topics(&gw, "m", &["x".to_owned()], 3, 400).unwrap();
        assert_eq!(topics, vec!["Family Meals", "School Days", "Town Square"]);
    }

    #[test]
    fn coverage_matches_hand_computed_overlap() {
        // 6 identical labels match the topic exactly (overlap 1), two
        // one-word-overlap labels miss the 0.5 bar (1/3), two miss
        // entirely: coverage = 6/10.
        let mut labels: Vec<String> = vec!["Life in the Ghetto".to_owned(); 6];
        labels.extend(vec!["Ghetto Survival".to_owned(); 2]);
        labels.extend(vec!["Camp Arrival".to_owned(); 2]);
        let matcher = TokenOverlapMatcher::default();
        let c = coverage_score(&labels, "Life in the Ghetto", &matcher);
        assert_eq!(c, 0.6);

        // Stopwords and order are irrelevant: "Ghetto Life" has the same
        // content words as "Life in the Ghetto".
        assert!(matcher.matches("Ghetto Life", "Life in the Ghetto"));
        assert!(!matcher.matches("Ghetto Survival", "Life in the Ghetto"));
    }

    #[test]
    fn coverage_is_permutation_and_duplication_consistent() {
        let matcher = TokenOverlapMatcher::default();
        let labels: Vec<String> =
            vec!["Camp Arrival".into(), "Ghetto Life".into(), "Camp Arrival".into()];
        let mut reversed = labels.clone();
        reversed.reverse();
        let topic = "Camp Arrival";
        assert_eq!(
            coverage_score(&labels, topic, &matcher),
            coverage_score(&reversed, topic, &matcher)
        );
        let tripled: Vec<String> = labels.iter().cloned().cycle().take(9).collect();
        assert_eq!(
            coverage_score(&labels, topic, &matcher),
            coverage_score(&tripled, topic, &matcher)
        );
        assert_eq!(coverage_score(&[], topic, &matcher), 0.0);
    }

    #[test]
    fn grouping_is_transitive() {
        let titles: Vec<String> = vec![
            "Ghetto Camp".into(),
            "Ghetto Camp Arrival".into(),
            "Camp Arrival".into(),
            "School Days".into(),
        ];
        let groups = group_titles(&titles, &TokenOverlapMatcher::default());
        assert_eq!(groups["Ghetto Camp"], 0);
        assert_eq!(groups["Ghetto Camp Arrival"], 0);
        assert_eq!(groups["Camp Arrival"], 0, "linked through the middle title");
        assert_eq!(groups["School Days"], 1);
    }

    #[test]
    fn label_store_round_trips_and_keys_on_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let mut store = LabelStore::open(&path).unwrap();
        assert!(store.is_empty());
        store
            .put(
                TopicLabel {
                    testimony_id: "t1".into(),
                    pair_index: 3,
                    title: "Ghetto Life".into(),
                    reason: "r".into(),
                    degraded: false,
                },
                "v1",
                "model-a",
            )
            .unwrap();

        let reopened = LabelStore::open(&path).unwrap();
        assert_eq!(reopened.len(), 1);
        assert_eq!(reopened.get("t1", 3, "v1", "model-a").unwrap().title, "Ghetto Life");
        assert!(reopened.get("t1", 3, "v2", "model-a").is_none());
        assert!(reopened.get("t1", 3, "v1", "model-b").is_none());
    }

    fn tiny_corpus() -> Corpus {
        let mk = |id: &str| {
            let mut turns = Vec::new();
            for i in 0..4 {
                turns.push((
                    "INT".to_owned(),
                    SpeakerRole::Interviewer,
                    format!("question number {i} about those days?"),
                ));
                let noun = if i < 2 { "ghetto streets" } else { "camp arrival" };
                turns.push((
                    "AB".to_owned(),
                    SpeakerRole::Survivor,
                    format!("I remember the {noun} very well, the {noun} stayed with me."),
                ));
            }
            Testimony::from_turns(id, "arc", turns)
        };
        Corpus { name: "tiny".to_owned(), testimonies: vec![mk("t1"), mk("t2")] }
    }

    fn scripted_gateway() -> Gateway {
        mock_script(vec![
            MockRule::when_contains_fn("Text snippet:", |req| {
                // Name by the era keyword present in the snippet.
                if req.prompt.contains("ghetto") {
                    "Title: \"Ghetto Streets\"\nReason: \"keyword\"".to_owned()
                } else {
                    "Title: \"Camp Arrival\"\nReason: \"keyword\"".to_owned()
                }
            }),
            MockRule::when_contains_fn("Title Set:", |req| {
                // Echo the most frequent tallied title.
                let start = req.prompt.find("Title Set:").expect("block") + "Title Set:".len();
                let block = &req.prompt[start..];
                let mut best = ("", 0usize);
                for line in block.lines() {
                    if let Some(rest) = line.trim().strip_prefix("- ") {
                        if let Some((title, count)) = rest.rsplit_once(" (×") {
                            let n: usize =
                                count.trim_end_matches(')').parse().unwrap_or(0);
                            if n > best.1 {
                                best = (title, n);
                            }
                        }
                    }
                }
                format!("1. \"{}\"", best.0)
            }),
        ])
    }

    #[test]
    fn topic_table_is_deterministic_with_unit_coverage_on_uniform_segments() {
        let corpus = tiny_corpus();
        let cfg = TopicPipelineConfig {
            k: 2,
            topics_per_segment: 1,
            min_words: 0,
            sample_size: None,
            ..Default::default()
        };
        let gw = scripted_gateway();
        let table = build_topic_table(&corpus, &gw, &cfg, None).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].len(), 1);
        assert_eq!(table.rows[0][0].title, "Ghetto Streets");
        assert_eq!(table.rows[1][0].title, "Camp Arrival");
        // Every stage-1 label in each segment is identical to its topic.
        assert_eq!(table.rows[0][0].coverage, 1.0);
        assert_eq!(table.rows[1][0].coverage, 1.0);
        assert_ne!(table.rows[0][0].group, table.rows[1][0].group);

        let again = build_topic_table(&corpus, &scripted_gateway(), &cfg, None).unwrap();
        assert_eq!(serde_json::to_string(&table).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn store_skips_completed_stage_one_work() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let corpus = tiny_corpus();
        let cfg = TopicPipelineConfig {
            k: 2,
            topics_per_segment: 1,
            min_words: 0,
            sample_size: None,
            ..Default::default()
        };

        let mut store = LabelStore::open(&path).unwrap();
        let t1 = build_topic_table(&corpus, &scripted_gateway(), &cfg, Some(&mut store)).unwrap();
        let named_after_first = store.len();
        assert_eq!(named_after_first, 8, "four pairs per testimony, two testimonies");

        // Second run: stage 1 comes entirely from the store; a gateway with
        // no naming rule proves no naming prompt is sent.
        let mut store = LabelStore::open(&path).unwrap();
        let consolidation_only = mock_script(vec![MockRule::when_contains_fn(
            "Title Set:",
            |req| {
                if req.prompt.contains("Ghetto Streets") {
                    "1. \"Ghetto Streets\"".to_owned()
                } else {
                    "1. \"Camp Arrival\"".to_owned()
                }
            },
        )]);
        let t2 = build_topic_table(&corpus, &consolidation_only, &cfg, Some(&mut store)).unwrap();
        assert_eq!(store.len(), named_after_first);
        assert_eq!(serde_json::to_string(&t1.rows).unwrap(), serde_json::to_string(&t2.rows).unwrap());
    }

    #[test]
    fn subsampling_is_seeded_and_sorted() {
        let mk = |id: &str| {
            let mut t = tiny_corpus().testimonies[0].clone();
            t.id = id.to_owned();
            t
        };
        let corpus = Corpus {
            name: "c".to_owned(),
            testimonies: (0..20).map(|i| mk(&format!("t{i:02}"))).collect(),
        };
        let cfg = TopicPipelineConfig {
            k: 2,
            topics_per_segment: 1,
            min_words: 0,
            sample_size: Some(5),
            seed: 11,
            ..Default::default()
        };
        let a = build_topic_table(&corpus, &scripted_gateway(), &cfg, None).unwrap();
        let b = build_topic_table(&corpus, &scripted_gateway(), &cfg, None).unwrap();
        assert_eq!(a.sampled_testimonies, b.sampled_testimonies);
        assert_eq!(a.sampled_testimonies.len(), 5);
        let mut sorted = a.sampled_testimonies.clone();
        sorted.sort();
        assert_eq!(a.sampled_testimonies, sorted, "subsample preserves corpus order");
    }

    #[test]
    fn renderings_cover_csv_markdown_html() {
        let corpus = tiny_corpus();
        let cfg = TopicPipelineConfig {
            k: 2,
            topics_per_segment: 1,
            min_words: 0,
            sample_size: None,
            ..Default::default()
        };
        let table = build_topic_table(&corpus, &scripted_gateway(), &cfg, None).unwrap();
        let csv = table_to_csv(&table);
        assert!(csv.starts_with("segment,rank,title,coverage,group\n"));
        assert!(csv.contains("0,1,Ghetto Streets,1.00,0"));
        let md = table_to_markdown(&table);
        assert!(md.contains("| 0 | Ghetto Streets (1.00) |"));
        let html = table_to_html(&table);
        assert!(html.contains("background:#cfe8ff"));
        assert!(html.contains("Camp Arrival (1.00)"));
    }
}
