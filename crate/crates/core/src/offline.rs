//! Deterministic offline stand-in for a live language model.
//!
//! [`analysis_gateway`] scripts the three analysis prompts (topic naming,
//! topic consolidation, question typing) with rule-based responders, so
//! every pipeline — and every test — can run with no network and stable
//! output. The responders are tuned to the synthetic generator's
//! vocabulary: topic naming mines the answer keywords the generator
//! injects, after excluding its filler and question vocabularies. On real
//! transcripts they still produce well-formed (if naive) responses.

use std::collections::BTreeSet;

use crate::gateway::{mock_script, Gateway, MockRule};
use crate::qtype::classify_rule;
use crate::synth::{question_vocabulary, FILLER_WORDS};
use crate::topics::TITLE_STOPWORDS;

/// Tokens never usable as topic keywords: too generic, interviewer-side,
/// or transcript markup.
fn excluded_vocabulary() -> BTreeSet<String> {
    let mut ex = question_vocabulary();
    ex.extend(FILLER_WORDS.iter().map(|w| w.to_string()));
    ex.extend(TITLE_STOPWORDS.iter().map(|w| w.to_string()));
    ex.extend(["whom", "whose", "subject", "other", "survivor"].map(str::to_owned));
    ex
}

fn title_case(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Top-two distinctive tokens of a snippet (≥4 chars, outside the
/// excluded vocabulary), ranked by frequency then first appearance.
fn mine_keywords(snippet: &str) -> Vec<String> {
    let excluded = excluded_vocabulary();
    let mut order: Vec<String> = Vec::new();
    let mut counts: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for token in snippet.split(|c: char| !c.is_alphanumeric()) {
        if token.len() < 4 {
            continue;
        }
        let token = token.to_lowercase();
        if excluded.contains(&token) || token.chars().any(|c| c.is_ascii_digit()) {
            continue;
        }
        if !counts.contains_key(&token) {
            order.push(token.clone());
        }
        *counts.entry(token).or_default() += 1;
    }
    order.sort_by(|a, b| counts[b].cmp(&counts[a]));
    order.truncate(2);
    order
}

fn naming_response(prompt: &str) -> String {
    let snippet = prompt
        .rsplit_once("Text snippet:")
        .map(|(_, rest)| rest.trim().trim_matches('"'))
        .unwrap_or("");
    let keywords = mine_keywords(snippet);
    let title = if keywords.is_empty() {
        "Everyday Matters".to_owned()
    } else {
        keywords.iter().map(|w| title_case(w)).collect::<Vec<_>>().join(" ")
    };
    format!("Title: \"{title}\"\nReason: \"most frequent distinctive words in the snippet\"")
}

fn consolidation_response(prompt: &str) -> String {
    let num_topics: usize = prompt
        .split("Generate ")
        .nth(1)
        .and_then(|rest| {
            let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
            digits.parse().ok()
        })
        .unwrap_or(3);
    let block = prompt
        .split_once("Title Set:")
        .map(|(_, rest)| rest)
        .and_then(|rest| rest.split_once("Your task is:").map(|(block, _)| block))
        .unwrap_or("");
    // Tally lines look like `- <title> (×n)`; rank by count, then by
    // position in the tally (which is first-occurrence order upstream).
    let mut ranked: Vec<(String, usize)> = Vec::new();
    for line in block.lines() {
        let Some(rest) = line.trim().strip_prefix("- ") else { continue };
        let Some((title, count)) = rest.rsplit_once(" (×") else { continue };
        let Ok(n) = count.trim_end_matches(')').parse::<usize>() else { continue };
        ranked.push((title.to_owned(), n));
    }
    let mut idx: Vec<usize> = (0..ranked.len()).collect();
    idx.sort_by(|&a, &b| ranked[b].1.cmp(&ranked[a].1).then(a.cmp(&b)));
    idx.iter()
        .take(num_topics)
        .enumerate()
        .map(|(rank, &i)| format!("{}. \"{}\"", rank + 1, ranked[i].0))
        .collect::<Vec<_>>()
        .join("\n")
}

fn qtype_response(prompt: &str) -> String {
    let question = prompt
        .rsplit_once("Interviewer Question:")
        .map(|(_, rest)| rest.trim().trim_matches('"'))
        .unwrap_or("");
    let label = classify_rule(question)
        .map(|ty| ty.label())
        .unwrap_or("Other");
    format!(
        "{{\"type\": \"{label} Question\", \"explanation\": \"classified by its leading interrogative token\"}}"
    )
}

/// The scripted responders, first match wins. Exposed separately so tests
/// can extend or reorder them.
pub fn analysis_rules() -> Vec<MockRule> {
    vec![
        MockRule::when_contains_fn("Text snippet:", |req| naming_response(&req.prompt)),
        MockRule::when_contains_fn("Title Set:", |req| consolidation_response(&req.prompt)),
        MockRule::when_contains_fn("Interviewer Question:", |req| qtype_response(&req.prompt)),
    ]
}

/// A ready-to-use gateway answering all three analysis prompts offline.
pub fn analysis_gateway() -> Gateway {
    mock_script(analysis_rules())
}
