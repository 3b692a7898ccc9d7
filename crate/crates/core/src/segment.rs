//! Q/A pairing and chronological partitioning.
//!
//! A testimony is first folded into question/answer *pairs*: a maximal run
//! of interviewer turns followed by the survivor turns it elicits. Pairs
//! tile the testimony — every utterance belongs to exactly one pair — so
//! word totals are conserved through merging.
//!
//! For "how does X change over the course of an interview" questions, a
//! testimony is then split into `k` chronological segments, either by pair
//! count (equal-sized pair groups) or by cumulative words (each utterance
//! goes to the segment its word-midpoint falls in, so utterances are never
//! split across segments).

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::corpus::{SpeakerRole, Testimony};

/// One question/answer exchange.
///
/// Turn lists hold utterance indices in document order. Turns with
/// [`SpeakerRole::Other`] attach to whichever phase of the pair is in
/// progress, and the word totals cover every turn attached to the pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QAPair {
    /// Utterances forming the question phase (may be empty for a
    /// testimony that opens with the survivor speaking).
    pub question_turns: Vec<usize>,
    /// Utterances forming the answer phase (may be empty for a trailing
    /// unanswered question).
    pub answer_turns: Vec<usize>,
    pub question_words: usize,
    pub answer_words: usize,
    /// How many original pairs were folded into this one (1 = unmerged).
    pub merged_from: usize,
}

impl QAPair {
    pub fn total_words(&self) -> usize {
        self.question_words + self.answer_words
    }

    /// Document-order first utterance index of the pair.
    pub fn first_turn(&self) -> Option<usize> {
        match (self.question_turns.first(), self.answer_turns.first()) {
            (Some(&q), Some(&a)) => Some(q.min(a)),
            (Some(&q), None) => Some(q),
            (None, Some(&a)) => Some(a),
            (None, None) => None,
        }
    }
}

/// Fold a testimony into Q/A pairs.
///
/// A pair opens on the first turn after the previous pair closed; the
/// question phase collects interviewer turns, and the first survivor turn
/// flips the pair into its answer phase. The next interviewer turn then
/// closes the pair and opens a new one. Leading survivor speech yields a
/// question-less first pair; a trailing interviewer run yields an
/// answer-less last pair.
pub fn pair_qa(t: &Testimony) -> Vec<QAPair> {
    struct Builder {
        pair: QAPair,
        in_answer: bool,
    }
    impl Builder {
        fn open() -> Self {
            Builder {
                pair: QAPair {
                    question_turns: Vec::new(),
                    answer_turns: Vec::new(),
                    question_words: 0,
                    answer_words: 0,
                    merged_from: 1,
                },
                in_answer: false,
            }
        }
        fn push_question(&mut self, index: usize, words: usize) {
            self.pair.question_turns.push(index);
            self.pair.question_words += words;
        }
        fn push_answer(&mut self, index: usize, words: usize) {
            self.pair.answer_turns.push(index);
            self.pair.answer_words += words;
            self.in_answer = true;
        }
    }

    let mut pairs = Vec::new();
    let mut cur: Option<Builder> = None;
    for u in &t.utterances {
        match u.role {
            SpeakerRole::Interviewer => match cur.as_mut() {
                Some(b) if b.in_answer => {
                    pairs.push(cur.take().expect("builder present").pair);
                    let mut b = Builder::open();
                    b.push_question(u.index, u.word_count);
                    cur = Some(b);
                }
                Some(b) => b.push_question(u.index, u.word_count),
                None => {
                    let mut b = Builder::open();
                    b.push_question(u.index, u.word_count);
                    cur = Some(b);
                }
            },
            SpeakerRole::Survivor => match cur.as_mut() {
                Some(b) => b.push_answer(u.index, u.word_count),
                None => {
                    let mut b = Builder::open();
                    b.push_answer(u.index, u.word_count);
                    cur = Some(b);
                }
            },
            SpeakerRole::Other => match cur.as_mut() {
                Some(b) if b.in_answer => b.push_answer(u.index, u.word_count),
                Some(b) => b.push_question(u.index, u.word_count),
                None => {
                    let mut b = Builder::open();
                    b.push_question(u.index, u.word_count);
                    cur = Some(b);
                }
            },
        }
    }
    if let Some(b) = cur {
        pairs.push(b.pair);
    }
    pairs
}

/// Merge pairs shorter than `min_words` total into their successor (into
/// their predecessor for a short final pair), repeating until every pair
/// meets the floor or only one pair remains. `min_words == 0` disables
/// merging. Merged pairs concatenate their turn lists in document order
/// and accumulate `merged_from`.
pub fn merge_short_pairs(mut pairs: Vec<QAPair>, min_words: usize) -> Vec<QAPair> {
    fn absorb(left: &mut QAPair, right: QAPair) {
        left.question_turns.extend(right.question_turns);
        left.answer_turns.extend(right.answer_turns);
        left.question_words += right.question_words;
        left.answer_words += right.answer_words;
        left.merged_from += right.merged_from;
    }

    if min_words == 0 {
        return pairs;
    }
    loop {
        let mut merged_any = false;
        let mut i = 0;
        while i < pairs.len() && pairs.len() > 1 {
            if pairs[i].total_words() >= min_words {
                i += 1;
                continue;
            }
            merged_any = true;
            if i + 1 < pairs.len() {
                let right = pairs.remove(i + 1);
                absorb(&mut pairs[i], right);
                // Re-examine the merged pair at the same position.
            } else {
                let last = pairs.remove(i);
                absorb(&mut pairs[i - 1], last);
            }
        }
        if !merged_any || pairs.len() <= 1 {
            return pairs;
        }
    }
}

/// How a testimony is split into chronological segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Equal-count groups of Q/A pairs (sizes differ by at most one).
    PairCount,
    /// Word-budget segments; an utterance lands in the segment containing
    /// its cumulative word midpoint and is never split.
    CumulativeWords,
}

/// One chronological segment: a half-open index range over pairs
/// ([`Strategy::PairCount`]) or utterances ([`Strategy::CumulativeWords`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SegmentView {
    pub strategy: Strategy,
    pub k: usize,
    pub seg_index: usize,
    pub start: usize,
    pub end: usize,
    /// Total words carried by the members of the segment.
    pub seg_words: usize,
}

impl SegmentView {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("segment count must be at least 1")]
    ZeroK,
    #[error("cannot split {available} {unit} into {k} segments")]
    KTooLarge {
        available: usize,
        unit: &'static str,
        k: usize,
    },
}

/// Split `pairs` into `k` contiguous groups whose sizes differ by at most
/// one, larger groups first.
pub fn segment_by_pairs(pairs: &[QAPair], k: usize) -> Result<Vec<SegmentView>, SegmentError> {
    if k == 0 {
        return Err(SegmentError::ZeroK);
    }
    let n = pairs.len();
    if n < k {
        return Err(SegmentError::KTooLarge { available: n, unit: "pairs", k });
    }
    let base = n / k;
    let extra = n % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for seg_index in 0..k {
        let end = start + base + usize::from(seg_index < extra);
        let seg_words = pairs[start..end].iter().map(QAPair::total_words).sum();
        out.push(SegmentView {
            strategy: Strategy::PairCount,
            k,
            seg_index,
            start,
            end,
            seg_words,
        });
        start = end;
    }
    Ok(out)
}

/// Split a testimony into `k` word-budget segments.
///
/// With `W` total words, utterance `u` (preceded by `c` words, carrying
/// `w` words) goes to the segment whose word interval contains its
/// midpoint `c + w/2`, i.e. `ceil((2c + w) * k / (2W)) - 1`, clamped to
/// `[0, k-1]`. Midpoints are non-decreasing, so segments are contiguous
/// utterance ranges; a long utterance can leave neighbouring segments
/// empty (`start == end`), which is permitted.
pub fn segment_by_words(t: &Testimony, k: usize) -> Result<Vec<SegmentView>, SegmentError> {
    if k == 0 {
        return Err(SegmentError::ZeroK);
    }
    let n = t.utterances.len();
    if n < k {
        return Err(SegmentError::KTooLarge { available: n, unit: "utterances", k });
    }
    let total = t.total_words;
    if total < k {
        return Err(SegmentError::KTooLarge { available: total, unit: "words", k });
    }

    let (total, k64) = (total as u64, k as u64);
    let mut seg_of = Vec::with_capacity(n);
    let mut cum = 0u64;
    for u in &t.utterances {
        let w = u.word_count as u64;
        let seg = ((2 * cum + w) * k64).div_ceil(2 * total);
        // A zero-word opening utterance has midpoint 0; clamp into segment 0.
        seg_of.push((seg.max(1) - 1).min(k64 - 1) as usize);
        cum += w;
    }

    let mut out = Vec::with_capacity(k);
    let mut idx = 0;
    for seg_index in 0..k {
        let start = idx;
        while idx < n && seg_of[idx] == seg_index {
            idx += 1;
        }
        let seg_words = t.utterances[start..idx].iter().map(|u| u.word_count).sum();
        out.push(SegmentView {
            strategy: Strategy::CumulativeWords,
            k,
            seg_index,
            start,
            end: idx,
            seg_words,
        });
    }
    debug_assert_eq!(idx, n, "midpoints must be non-decreasing");
    Ok(out)
}

/// Segment index for each pair.
///
/// Under [`Strategy::PairCount`] a pair is located by its own index; under
/// [`Strategy::CumulativeWords`] by the utterance index of its first turn.
pub fn assign_pairs(pairs: &[QAPair], segments: &[SegmentView]) -> Vec<usize> {
    let strategy = match segments.first() {
        Some(s) => s.strategy,
        None => return Vec::new(),
    };
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let pos = match strategy {
                Strategy::PairCount => i,
                Strategy::CumulativeWords => p.first_turn().unwrap_or(0),
            };
            segments
                .iter()
                .find(|s| s.start <= pos && pos < s.end)
                .map(|s| s.seg_index)
                .unwrap_or(segments.len() - 1)
        })
        .collect()
}

/// JSON view of a segmentation: strategy, k, and per-segment spans.
pub fn segmentation_to_json(segments: &[SegmentView]) -> serde_json::Value {
    let strategy = segments.first().map(|s| match s.strategy {
        Strategy::PairCount => "pair_count",
        Strategy::CumulativeWords => "cumulative_words",
    });
    json!({
        "strategy": strategy,
        "k": segments.first().map(|s| s.k),
        "segments": segments.iter().map(|s| json!({
            "seg_index": s.seg_index,
            "start": s.start,
            "end": s.end,
            "seg_words": s.seg_words,
            "is_empty": s.is_empty(),
        })).collect::<Vec<_>>(),
    })
}
