//! Synthetic interview generator with pair-level ground truth.
//!
//! A [`StyleProfile`] fixes everything the analysis pipeline is supposed to
//! measure: total-length distribution, per-segment answer/question length
//! curves, per-segment question-type weights, and chronological topic
//! pools. [`generate_corpus`] then emits testimonies whose measured curves
//! converge to the designed ones, together with a [`GroundTruth`] recording
//! the segment, question type, and topic of every generated pair — the
//! yardstick recovery tests compare pipeline output against.
//!
//! Determinism: each testimony draws from its own `ChaCha8` stream seeded
//! by a splitmix64 mix of the master seed and the testimony index, so
//! corpora are reproducible and testimony `i` is identical no matter how
//! many others are generated around it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{word_count, Corpus, SpeakerRole, Testimony};
use crate::qtype::QuestionType;

/// Narrative filler vocabulary answers are padded with. Deliberately
/// disjoint from every preset topic keyword so that keyword-frequency
/// heuristics (and the offline analysis stand-in) can tell injected topic
/// words from padding.
pub const FILLER_WORDS: &[&str] = &[
    "we", "then", "walked", "night", "after", "that", "morning", "there", "was", "nothing",
    "left", "people", "came", "and", "went", "while", "mother", "father", "stayed", "close",
    "together", "until", "light", "cold", "bread", "water", "some", "felt", "like", "years",
    "nobody", "knew", "would", "come", "next", "still", "remember", "every", "small", "thing",
    "from", "time", "again", "always", "never", "quiet", "waiting", "told", "heard", "everyone",
];

/// Pad vocabulary for stretching questions to their target length.
/// Contains no interrogative tokens, so padding never changes the type the
/// rule classifier assigns.
const QUESTION_PAD: &[&str] = &[
    "take", "your", "time", "and", "go", "on", "as", "much", "feels", "right", "to", "you",
    "now", "just", "tell", "it", "in", "own", "way", "from", "back", "then",
];

const WH_ORDER: [QuestionType; 6] = [
    QuestionType::How,
    QuestionType::What,
    QuestionType::When,
    QuestionType::Where,
    QuestionType::Why,
    QuestionType::Who,
];

/// One fixed template per type; each is decidable by the rule classifier
/// (the interrogative leads, imperatives carry none) and no content word
/// repeats within a template.
fn question_template(ty: QuestionType) -> &'static str {
    match ty {
        QuestionType::How => "How did you manage during all of it?",
        QuestionType::What => "What do you remember most from that time?",
        QuestionType::When => "When did that happen exactly?",
        QuestionType::Where => "Where were you living at this point?",
        QuestionType::Why => "Why do you think it happened so?",
        QuestionType::Who => "Who else was with you there?",
        QuestionType::Other => "Tell me more about that period please.",
    }
}

/// Every word (lowercased) that can appear in a generated interviewer
/// turn. Exposed so offline analysis stand-ins can exclude question
/// vocabulary when mining answer keywords.
pub fn question_vocabulary() -> std::collections::BTreeSet<String> {
    let mut vocab: std::collections::BTreeSet<String> =
        QUESTION_PAD.iter().map(|w| w.to_string()).collect();
    for ty in QuestionType::ALL {
        for w in question_template(ty).split_whitespace() {
            vocab.insert(w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase());
        }
    }
    vocab
}

/// Ground truth for one generated Q/A pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTruth {
    pub testimony_id: String,
    /// Position in the testimony's pair sequence (same order `pair_qa`
    /// recovers).
    pub pair_index: usize,
    /// Generation segment (0-based, out of `k`).
    pub seg_index: usize,
    pub qtype: QuestionType,
    pub topic: String,
}

/// Everything a recovery test needs to score the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub profile: String,
    pub seed: u64,
    pub k: usize,
    pub pairs: Vec<PairTruth>,
}

/// All the knobs of one synthetic interviewing style.
#[derive(Debug, Clone)]
pub struct StyleProfile {
    pub name: String,
    /// Default number of testimonies `generate_corpus` produces.
    pub testimonies: usize,
    pub mean_total_words: f64,
    pub sd_total_words: f64,
    /// Generation segments per testimony.
    pub k: usize,
    /// Designed mean answer length per segment (`k` entries).
    pub answer_mean: Vec<f64>,
    /// Designed mean question length per segment (`k` entries).
    pub question_mean: Vec<f64>,
    /// Weight of non-interrogative questions, linearly interpolated from
    /// the first to the last segment.
    pub other_weight: (f64, f64),
    /// Relative mix of the six interrogative types (How, What, When,
    /// Where, Why, Who) within the non-Other mass; must sum to 1.
    pub wh_mix: [f64; 6],
    /// Six chronological phases of weighted topic titles; segment `s` maps
    /// to phase `(2s+1)·6 / 2k`.
    pub topic_phases: Vec<Vec<(String, f64)>>,
}

impl StyleProfile {
    /// Designed question-type weights for a segment, `QuestionType::ALL`
    /// order, summing to 1.
    pub fn qtype_weights(&self, seg: usize) -> [f64; 7] {
        let frac = if self.k > 1 { seg as f64 / (self.k - 1) as f64 } else { 0.0 };
        let other = self.other_weight.0 + (self.other_weight.1 - self.other_weight.0) * frac;
        let rest = 1.0 - other;
        let mut w = [0.0; 7];
        for (i, ty) in WH_ORDER.iter().enumerate() {
            w[ty.index()] = self.wh_mix[i] * rest;
        }
        w[QuestionType::Other.index()] = other;
        w
    }

    /// Phase of a segment (see `topic_phases`).
    pub fn phase_of(&self, seg: usize) -> usize {
        let phases = self.topic_phases.len();
        ((2 * seg + 1) * phases / (2 * self.k)).min(phases - 1)
    }

    /// Designed interviewer interventions per 1000 words in a segment.
    pub fn designed_density(&self, seg: usize) -> f64 {
        1000.0 / (self.question_mean[seg] + self.answer_mean[seg])
    }
}

/// The default six chronological phases, each a weighted pool of three
/// topic titles. Presets share this arc; custom profiles may too.
pub fn phase_pools() -> Vec<Vec<(String, f64)>> {
    let pool = |titles: [&str; 3]| {
        titles
            .iter()
            .zip([0.6, 0.25, 0.15])
            .map(|(t, w)| (t.to_string(), w))
            .collect::<Vec<_>>()
    };
    vec![
        pool(["Family Home", "School Days", "Village Market"]),
        pool(["Border Tension", "Radio Rumors", "Shop Boycott"]),
        pool(["Ghetto Streets", "Ration Lines", "Curfew Hours"]),
        pool(["Cattle Wagon", "Camp Arrival", "Barrack Winter"]),
        pool(["Forced March", "Camp Liberation", "Field Hospital"]),
        pool(["Displaced Persons", "Ship Voyage", "American Visa"]),
    ]
}

/// Segment-led style: many short questions early, answers lengthening as
/// the interviewer loosens the reins, converging with the freeform tail.
pub fn structured_like() -> StyleProfile {
    StyleProfile {
        name: "structured_like".to_owned(),
        testimonies: 120,
        mean_total_words: 8000.0,
        sd_total_words: 700.0,
        k: 15,
        answer_mean: vec![
            35.0, 35.0, 38.0, 42.0, 48.0, 52.0, 56.0, 58.0, 60.0, 55.0, 48.0, 45.0, 45.0, 45.0,
            45.0,
        ],
        question_mean: vec![
            12.0, 12.0, 12.0, 13.0, 13.0, 14.0, 14.0, 14.0, 15.0, 15.0, 15.0, 15.0, 15.0, 15.0,
            15.0,
        ],
        other_weight: (0.08, 0.30),
        wh_mix: [0.20, 0.30, 0.125, 0.125, 0.125, 0.125],
        topic_phases: phase_pools(),
    }
}

/// Narrator-led style: long uninterrupted answers early, the same tail as
/// the structured profile from segment 8 on, and a prompt-heavy question
/// mix throughout.
pub fn freeform_like() -> StyleProfile {
    StyleProfile {
        name: "freeform_like".to_owned(),
        testimonies: 120,
        mean_total_words: 8000.0,
        sd_total_words: 700.0,
        k: 15,
        answer_mean: vec![
            115.0, 110.0, 100.0, 90.0, 80.0, 72.0, 66.0, 62.0, 60.0, 55.0, 48.0, 45.0, 45.0,
            45.0, 45.0,
        ],
        question_mean: vec![
            8.0, 8.0, 8.0, 9.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 15.0, 15.0, 15.0, 15.0,
        ],
        other_weight: (0.40, 0.50),
        wh_mix: [0.20, 0.30, 0.125, 0.125, 0.125, 0.125],
        topic_phases: phase_pools(),
    }
}

/// Structured interviewing at archive scale (mean testimony ≈ 23,396
/// words).
pub fn usc_like() -> StyleProfile {
    StyleProfile {
        name: "usc_like".to_owned(),
        testimonies: 60,
        mean_total_words: 23396.0,
        sd_total_words: 2300.0,
        ..structured_like()
    }
}

/// Freeform interviewing at archive scale (mean testimony ≈ 13,622 words).
pub fn yale_like() -> StyleProfile {
    StyleProfile {
        name: "yale_like".to_owned(),
        testimonies: 60,
        mean_total_words: 13622.0,
        sd_total_words: 1400.0,
        ..freeform_like()
    }
}

/// Preset lookup by name.
pub fn preset(name: &str) -> Option<StyleProfile> {
    match name {
        "structured_like" => Some(structured_like()),
        "freeform_like" => Some(freeform_like()),
        "usc_like" => Some(usc_like()),
        "yale_like" => Some(yale_like()),
        _ => None,
    }
}

pub const PRESET_NAMES: &[&str] = &["structured_like", "freeform_like", "usc_like", "yale_like"];

/// splitmix64-style mix of master seed and testimony index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn pick_weighted<'a, T>(rng: &mut ChaCha8Rng, items: &'a [(T, f64)]) -> &'a T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut roll = rng.random_range(0.0..total);
    for (item, w) in items {
        if roll < *w {
            return item;
        }
        roll -= w;
    }
    &items.last().expect("non-empty weight table").0
}

/// Unbiased randomized rounding: `E[round(x)] = x`.
fn round_randomized(rng: &mut ChaCha8Rng, x: f64) -> usize {
    let floor = x.floor().max(0.0);
    let frac = (x - floor).clamp(0.0, 1.0);
    floor as usize + usize::from(rng.random_bool(frac))
}

fn draw_len(rng: &mut ChaCha8Rng, mean: f64, rel_sd: f64, lo: usize) -> usize {
    let normal = Normal::new(mean, mean * rel_sd).expect("positive sd");
    let drawn = normal.sample(rng).round();
    (drawn.clamp(lo as f64, mean * 2.2)) as usize
}

fn build_question(rng: &mut ChaCha8Rng, ty: QuestionType, target_words: usize) -> String {
    let template = question_template(ty);
    let base = word_count(template);
    if target_words <= base {
        return template.to_owned();
    }
    let mut pad = Vec::with_capacity(target_words - base);
    for _ in 0..target_words - base {
        pad.push(QUESTION_PAD[rng.random_range(0..QUESTION_PAD.len())]);
    }
    let mut sentence = pad.join(" ");
    if let Some(first) = sentence.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    format!("{template} {sentence}.")
}

/// Answers interleave topic keywords (every fifth word, alternating) with
/// filler, so keyword frequency tracks answer length at a 1-in-5 density.
fn build_answer(rng: &mut ChaCha8Rng, topic: &str, target_words: usize) -> String {
    let keywords: Vec<String> = topic.split_whitespace().map(str::to_lowercase).collect();
    let mut words = Vec::with_capacity(target_words);
    let mut kw_cursor = 0usize;
    for i in 0..target_words {
        if i % 5 == 0 && !keywords.is_empty() {
            words.push(keywords[kw_cursor % keywords.len()].clone());
            kw_cursor += 1;
        } else {
            words.push(FILLER_WORDS[rng.random_range(0..FILLER_WORDS.len())].to_owned());
        }
    }
    // Light sentence structure: capitalize openers, period every 12 words.
    let mut out = String::new();
    let mut sentence_start = true;
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if sentence_start {
            let mut chars = w.chars();
            if let Some(c) = chars.next() {
                out.extend(c.to_uppercase());
                out.push_str(chars.as_str());
            }
            sentence_start = false;
        } else {
            out.push_str(w);
        }
        if (i + 1) % 12 == 0 || i + 1 == words.len() {
            out.push('.');
            sentence_start = true;
        }
    }
    out
}

/// Generate a corpus in the given style.
///
/// Per testimony: a total-word target is drawn, split into `k` equal
/// segment budgets; each segment gets `budget / (q̄ + ā)` pairs (randomized
/// rounding, at least one), and each pair draws its type from the
/// segment's weights and its topic from the segment phase's pool.
pub fn generate_corpus(profile: &StyleProfile, seed: u64) -> (Corpus, GroundTruth) {
    assert_eq!(profile.answer_mean.len(), profile.k, "answer curve length");
    assert_eq!(profile.question_mean.len(), profile.k, "question curve length");
    let mut testimonies = Vec::with_capacity(profile.testimonies);
    let mut truth_pairs = Vec::new();
    for idx in 0..profile.testimonies {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, idx as u64));
        let id = format!("{}-{idx:04}", profile.name);

        let total_dist = Normal::new(profile.mean_total_words, profile.sd_total_words)
            .expect("positive sd");
        let target_total = total_dist
            .sample(&mut rng)
            .clamp(profile.mean_total_words * 0.5, profile.mean_total_words * 1.5);
        let budget = target_total / profile.k as f64;

        let mut turns: Vec<(String, SpeakerRole, String)> = Vec::new();
        let mut pair_index = 0usize;
        for seg in 0..profile.k {
            let q_mean = profile.question_mean[seg];
            let a_mean = profile.answer_mean[seg];
            let pairs = round_randomized(&mut rng, budget / (q_mean + a_mean)).max(1);
            let weights: Vec<(QuestionType, f64)> = QuestionType::ALL
                .iter()
                .copied()
                .zip(profile.qtype_weights(seg))
                .collect();
            let pool = &profile.topic_phases[profile.phase_of(seg)];
            for _ in 0..pairs {
                let qtype = *pick_weighted(&mut rng, &weights);
                let topic = pick_weighted(&mut rng, pool).clone();
                let q_len = draw_len(&mut rng, q_mean, 0.15, word_count(question_template(qtype)));
                let a_len = draw_len(&mut rng, a_mean, 0.12, 25);
                turns.push((
                    "INT".to_owned(),
                    SpeakerRole::Interviewer,
                    build_question(&mut rng, qtype, q_len),
                ));
                turns.push((
                    "SUB".to_owned(),
                    SpeakerRole::Survivor,
                    build_answer(&mut rng, &topic, a_len),
                ));
                truth_pairs.push(PairTruth {
                    testimony_id: id.clone(),
                    pair_index,
                    seg_index: seg,
                    qtype,
                    topic,
                });
                pair_index += 1;
            }
        }

        let mut t = Testimony::from_turns(&id, &profile.name, turns);
        t.year = Some(1993 + (idx % 8) as i32);
        t.interviewers = vec![format!("Interviewer {}", idx % 5)];
        testimonies.push(t);
    }
    (
        Corpus { name: profile.name.clone(), testimonies },
        GroundTruth {
            profile: profile.name.clone(),
            seed,
            k: profile.k,
            pairs: truth_pairs,
        },
    )
}
