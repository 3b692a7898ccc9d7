//! Transcript data model and corpus ingestion.
//!
//! Two on-disk transcript forms are supported:
//!
//! * **Plain text** — one `LABEL: text` turn per line, where `LABEL` is a
//!   short speaker tag (`INT:`, `AB:`, ...). Lines that carry no label are
//!   continuations of the previous turn. Consecutive lines with the *same*
//!   label are coalesced into a single turn.
//! * **Canonical JSON** — the normalized interchange form produced by
//!   [`to_canonical_json`]: testimony metadata plus an ordered utterance
//!   list of `{speaker_label, role, text}` objects.
//!
//! A corpus is a manifest (JSON array of file entries plus per-testimony
//! metadata) resolved against the manifest's own directory.

use std::collections::{BTreeMap, HashMap};
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Who is speaking in a turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeakerRole {
    /// The person asking questions.
    Interviewer,
    /// The person giving testimony.
    Survivor,
    /// Anyone else on tape (translator, camera operator, relative).
    Other,
}

/// One coalesced turn of speech.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    /// Position in the testimony, starting at 0.
    pub index: usize,
    /// Raw speaker tag as written in the source (`"INT"`, `"AB"`, ...).
    pub speaker_label: String,
    /// Resolved role of the speaker.
    pub role: SpeakerRole,
    /// Turn text. Continuation lines are joined with `'\n'`.
    pub text: String,
    /// Whitespace-delimited token count of `text`.
    pub word_count: usize,
}

/// A single interview.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Testimony {
    /// Unique id within a corpus (file stem for plain-text sources).
    pub id: String,
    /// Which archive/collection the testimony belongs to.
    pub archive_id: String,
    /// Recording year, when known.
    pub year: Option<i32>,
    /// Interviewer names; joint interviews list several.
    pub interviewers: Vec<String>,
    /// Ordered turns. Never empty for a parsed testimony.
    pub utterances: Vec<Utterance>,
    /// Sum of utterance word counts.
    pub total_words: usize,
}

/// A named collection of testimonies, ordered by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    /// Display name (manifest file stem by default).
    pub name: String,
    pub testimonies: Vec<Testimony>,
}

impl Testimony {
    /// Build a testimony from already-coalesced `(label, role, text)` turns,
    /// deriving indices, word counts, and the total.
    pub fn from_turns<I>(id: &str, archive_id: &str, turns: I) -> Self
    where
        I: IntoIterator<Item = (String, SpeakerRole, String)>,
    {
        let utterances: Vec<Utterance> = turns
            .into_iter()
            .enumerate()
            .map(|(index, (speaker_label, role, text))| {
                let word_count = word_count(&text);
                Utterance { index, speaker_label, role, text, word_count }
            })
            .collect();
        let total_words = utterances.iter().map(|u| u.word_count).sum();
        Testimony {
            id: id.to_owned(),
            archive_id: archive_id.to_owned(),
            year: None,
            interviewers: Vec::new(),
            utterances,
            total_words,
        }
    }
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.testimonies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.testimonies.is_empty()
    }

    /// Total words across all testimonies.
    pub fn total_words(&self) -> usize {
        self.testimonies.iter().map(|t| t.total_words).sum()
    }
}

/// Count whitespace-delimited tokens; any run of whitespace is one break.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Source layout of a transcript file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptFormat {
    PlainText,
    CanonicalJson,
}

/// Maps raw speaker labels to roles.
///
/// Resolution order: explicit rule (case-insensitive exact label), then the
/// built-in interviewer convention (`INT`, `INT2`, ... case-insensitive),
/// then the survivor default. In strict mode the survivor default is
/// disabled and unmatched labels fail the parse.
#[derive(Debug, Clone, Default)]
pub struct RoleMap {
    rules: Vec<(String, SpeakerRole)>,
    strict: bool,
}

impl RoleMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an explicit `label -> role` rule (label compared case-insensitively).
    pub fn with_rule(mut self, label: &str, role: SpeakerRole) -> Self {
        self.rules.push((label.to_ascii_lowercase(), role));
        self
    }

    /// Disable the survivor fallback; unmatched labels become parse errors.
    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    /// Resolve a raw label, `None` when strict mode rejects it.
    pub fn resolve(&self, label: &str) -> Option<SpeakerRole> {
        let lower = label.to_ascii_lowercase();
        if let Some((_, role)) = self.rules.iter().find(|(l, _)| *l == lower) {
            return Some(*role);
        }
        if is_interviewer_label(&lower) {
            return Some(SpeakerRole::Interviewer);
        }
        if self.strict {
            None
        } else {
            Some(SpeakerRole::Survivor)
        }
    }
}

/// `INT`, `int`, `INT2`, `Int10`, ... — the interviewer tag convention.
fn is_interviewer_label(lower: &str) -> bool {
    lower.strip_prefix("int")
        .is_some_and(|rest| rest.chars().all(|c| c.is_ascii_digit()))
}

/// Failures while turning raw bytes into a [`Testimony`].
#[derive(Debug, Error)]
pub enum ParseError {
    /// A non-blank line appeared before any labeled turn.
    #[error("line {line}: text before any speaker label: {content:?}")]
    MalformedLine { line: usize, content: String },
    /// The source contained no turns at all.
    #[error("transcript contains no turns")]
    EmptyTranscript,
    /// Strict role mapping rejected a label.
    #[error("line {line}: no role rule matches speaker label {label:?}")]
    UnresolvableSpeaker { line: usize, label: String },
    /// Canonical JSON did not deserialize.
    #[error("invalid canonical transcript JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Wire form of an utterance in canonical JSON (derived fields omitted).
#[derive(Serialize, Deserialize)]
struct UtteranceWire {
    speaker_label: String,
    role: SpeakerRole,
    text: String,
}

/// Wire form of a testimony in canonical JSON.
#[derive(Serialize, Deserialize)]
struct TestimonyWire {
    id: String,
    archive_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    year: Option<i32>,
    #[serde(default)]
    interviewers: Vec<String>,
    utterances: Vec<UtteranceWire>,
}

/// Parse one transcript.
///
/// Plain text: `LABEL:` prefixes open turns (label pattern: letter followed
/// by letters, digits, `_`, `.`, `-`), one space after the colon is eaten,
/// unlabeled lines continue the previous turn (joined with `'\n'`), blank
/// lines are skipped, and consecutive turns with an identical raw label are
/// coalesced. Metadata fields are left empty for the loader to fill in.
///
/// Canonical JSON: deserialized as written; `roles` is not consulted
/// because the file already records a role per utterance.
pub fn parse_transcript(
    raw: &str,
    format: TranscriptFormat,
    roles: &RoleMap,
) -> Result<Testimony, ParseError> {
    match format {
        TranscriptFormat::PlainText => parse_plain_text(raw, roles),
        TranscriptFormat::CanonicalJson => parse_canonical_json(raw),
    }
}

fn split_label_line(line: &str) -> Option<(&str, &str)> {
    let colon = line.find(':')?;
    let label = &line[..colon];
    let mut chars = label.chars();
    let first = chars.next()?;
    if !first.is_ascii_alphabetic() {
        return None;
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')) {
        return None;
    }
    let rest = &line[colon + 1..];
    // Exactly one separator space is part of the layout, not the text.
    Some((label, rest.strip_prefix(' ').unwrap_or(rest)))
}

fn parse_plain_text(raw: &str, roles: &RoleMap) -> Result<Testimony, ParseError> {
    struct RawTurn {
        label: String,
        text: String,
        line: usize,
    }

    let mut turns: Vec<RawTurn> = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        match split_label_line(line) {
            Some((label, text)) => {
                match turns.last_mut() {
                    // Same tag on back-to-back lines is one turn split for layout.
                    Some(prev) if prev.label == label => {
                        prev.text.push('\n');
                        prev.text.push_str(text);
                    }
                    _ => turns.push(RawTurn {
                        label: label.to_owned(),
                        text: text.to_owned(),
                        line: line_no,
                    }),
                }
            }
            None => match turns.last_mut() {
                Some(prev) => {
                    prev.text.push('\n');
                    prev.text.push_str(line);
                }
                None => {
                    return Err(ParseError::MalformedLine {
                        line: line_no,
                        content: line.to_owned(),
                    })
                }
            },
        }
    }

    if turns.is_empty() {
        return Err(ParseError::EmptyTranscript);
    }

    let mut resolved = Vec::with_capacity(turns.len());
    for turn in turns {
        let role = roles.resolve(&turn.label).ok_or(ParseError::UnresolvableSpeaker {
            line: turn.line,
            label: turn.label.clone(),
        })?;
        resolved.push((turn.label, role, turn.text));
    }
    Ok(Testimony::from_turns("", "", resolved))
}

fn parse_canonical_json(raw: &str) -> Result<Testimony, ParseError> {
    let wire: TestimonyWire = serde_json::from_str(raw)?;
    if wire.utterances.is_empty() {
        return Err(ParseError::EmptyTranscript);
    }
    let mut t = Testimony::from_turns(
        &wire.id,
        &wire.archive_id,
        wire.utterances.into_iter().map(|u| (u.speaker_label, u.role, u.text)),
    );
    t.year = wire.year;
    t.interviewers = wire.interviewers;
    Ok(t)
}

/// Render the canonical JSON form (pretty-printed, trailing newline).
///
/// Only source fields are written; indices and word counts are derived on
/// parse. `parse_transcript(to_canonical_json(t), CanonicalJson, _) == t`.
pub fn to_canonical_json(t: &Testimony) -> String {
    let wire = TestimonyWire {
        id: t.id.clone(),
        archive_id: t.archive_id.clone(),
        year: t.year,
        interviewers: t.interviewers.clone(),
        utterances: t
            .utterances
            .iter()
            .map(|u| UtteranceWire {
                speaker_label: u.speaker_label.clone(),
                role: u.role,
                text: u.text.clone(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&wire).expect("testimony serializes");
    s.push('\n');
    s
}

/// Render the plain-text form: one `LABEL: text` turn per line, with any
/// embedded newlines in a turn emitted as continuation lines.
///
/// Round trips exactly when no continuation line itself looks like a
/// `LABEL:` prefix and no turn text begins or ends a line with whitespace
/// that blank-line skipping would eat.
pub fn to_plain_text(t: &Testimony) -> String {
    let mut out = String::new();
    for u in &t.utterances {
        out.push_str(&u.speaker_label);
        out.push_str(": ");
        out.push_str(&u.text);
        out.push('\n');
    }
    out
}

/// One manifest row: a transcript file plus its catalog metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Transcript path, resolved relative to the manifest file.
    pub path: String,
    pub archive_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default)]
    pub interviewers: Vec<String>,
}

/// Failures while assembling a corpus from a manifest.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    MissingFile {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest {path} is not a JSON array of file entries: {message}")]
    ManifestSchema { path: PathBuf, message: String },
    #[error("duplicate testimony id {id:?} (from {path})")]
    DuplicateId { id: String, path: PathBuf },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
}

/// Load a corpus described by a manifest file.
///
/// Format is chosen per entry by extension (`.json` → canonical JSON,
/// anything else → plain text). Testimony ids come from the embedded id for
/// canonical JSON (file stem when empty) and from the file stem for plain
/// text. Manifest metadata overrides whatever the file carries. The result
/// is sorted by id, and files are parsed in parallel.
pub fn load_corpus(manifest_path: &Path, roles: &RoleMap) -> Result<Corpus, CorpusError> {
    let manifest_raw =
        std::fs::read_to_string(manifest_path).map_err(|source| CorpusError::MissingFile {
            path: manifest_path.to_owned(),
            source,
        })?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&manifest_raw).map_err(|e| CorpusError::ManifestSchema {
            path: manifest_path.to_owned(),
            message: e.to_string(),
        })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut testimonies = entries
        .par_iter()
        .map(|entry| load_entry(base, entry, roles))
        .collect::<Result<Vec<_>, _>>()?;

    testimonies.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = testimonies.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(CorpusError::DuplicateId {
            id: w[0].id.clone(),
            path: manifest_path.to_owned(),
        });
    }

    let name = manifest_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_owned());
    Ok(Corpus { name, testimonies })
}

fn load_entry(
    base: &Path,
    entry: &ManifestEntry,
    roles: &RoleMap,
) -> Result<Testimony, CorpusError> {
    let path = base.join(&entry.path);
    let raw = std::fs::read_to_string(&path).map_err(|source| CorpusError::MissingFile {
        path: path.clone(),
        source,
    })?;
    let format = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        TranscriptFormat::CanonicalJson
    } else {
        TranscriptFormat::PlainText
    };
    let mut t = parse_transcript(&raw, format, roles)
        .map_err(|source| CorpusError::Parse { path: path.clone(), source })?;

    if t.id.is_empty() {
        t.id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    t.archive_id = entry.archive_id.clone();
    if entry.year.is_some() {
        t.year = entry.year;
    }
    if !entry.interviewers.is_empty() {
        t.interviewers = entry.interviewers.clone();
    }
    Ok(t)
}

/// Interviewer workload: `(name, testimonies)` sorted by count descending,
/// then name. Joint interviews credit every listed interviewer in full.
pub fn interviewer_distribution(corpus: &Corpus) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &corpus.testimonies {
        for name in &t.interviewers {
            *counts.entry(name.as_str()).or_default() += 1;
        }
    }
    let mut out: Vec<(String, usize)> =
        counts.into_iter().map(|(n, c)| (n.to_owned(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Testimonies per recording year, with an explicit bucket for unknown years.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct YearDistribution {
    pub known: BTreeMap<i32, usize>,
    pub unknown: usize,
}

pub fn year_distribution(corpus: &Corpus) -> YearDistribution {
    let mut known = BTreeMap::new();
    let mut unknown = 0;
    for t in &corpus.testimonies {
        match t.year {
            Some(y) => *known.entry(y).or_default() += 1,
            None => unknown += 1,
        }
    }
    YearDistribution { known, unknown }
}
