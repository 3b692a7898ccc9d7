//! Prompt templates and rendering.
//!
//! The three templates are stored byte-for-byte under `prompts/` and
//! compiled in. Rendering follows Python `str.format` semantics for the
//! subset we use: `{name}` substitutes a variable, `{{` and `}}` escape
//! literal braces. Every template carries a content-derived version string
//! so cached completions are keyed to the exact bytes that produced them.

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Stage-1 topic naming: one Q/A exchange in, `Title:`/`Reason:` out.
/// Placeholder: `{text_snippet}`.
pub const TOPIC_NAMING_TEMPLATE: &str = include_str!("../prompts/topic_naming.txt");

/// Stage-2 consolidation: a tally of stage-1 titles in, a numbered list of
/// common topics out. Placeholders: `{num_topics}`, `{title_set}`,
/// `{output_format}`.
pub const COMMON_TOPICS_TEMPLATE: &str = include_str!("../prompts/common_topics.txt");

/// Question typing: one interviewer question in, a JSON object out.
/// Placeholder: `{speaker_line}`.
pub const QUESTION_TYPE_TEMPLATE: &str = include_str!("../prompts/question_type.txt");

/// First 12 hex characters of the SHA-256 of the template bytes.
pub fn version(template: &str) -> String {
    let digest = Sha256::digest(template.as_bytes());
    let mut out = String::with_capacity(12);
    for byte in digest.iter().take(6) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template references unknown placeholder {name:?}")]
    UnknownPlaceholder { name: String },
    #[error("unbalanced brace at byte {pos}")]
    UnbalancedBrace { pos: usize },
}

/// Substitute `{name}` placeholders from `vars`, honouring `{{`/`}}`
/// escapes. Unknown placeholders and stray braces are errors; variables
/// the template does not mention are simply unused.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let bytes = template.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => {
                if bytes.get(i + 1) == Some(&b'{') {
                    out.push('{');
                    i += 2;
                    continue;
                }
                let Some(rel) = template[i + 1..].find('}') else {
                    return Err(PromptError::UnbalancedBrace { pos: i });
                };
                let name = &template[i + 1..i + 1 + rel];
                let Some((_, value)) = vars.iter().find(|(k, _)| *k == name) else {
                    return Err(PromptError::UnknownPlaceholder { name: name.to_owned() });
                };
                out.push_str(value);
                i += rel + 2;
            }
            b'}' => {
                if bytes.get(i + 1) == Some(&b'}') {
                    out.push('}');
                    i += 2;
                } else {
                    return Err(PromptError::UnbalancedBrace { pos: i });
                }
            }
            _ => {
                // Advance one full UTF-8 scalar, not one byte.
                let ch = template[i..].chars().next().expect("in-bounds char");
                out.push(ch);
                i += ch.len_utf8();
            }
        }
    }
    Ok(out)
}
