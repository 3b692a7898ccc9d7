//! Scriptable offline provider.
//!
//! A mock is an ordered list of rules; the first rule whose matcher
//! accepts the prompt answers it (fixed text or a closure over the
//! request). Prompts no rule covers fail loudly with
//! [`GatewayError::UnscriptedPrompt`] so tests can't silently drift.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::{CompletionRequest, Gateway, GatewayConfig, GatewayError, Provider};

/// How a matched rule produces its reply.
#[derive(Clone)]
pub enum MockResponse {
    Text(String),
    Fn(Arc<dyn Fn(&CompletionRequest) -> String + Send + Sync>),
}

impl std::fmt::Debug for MockResponse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MockResponse::Text(t) => f.debug_tuple("Text").field(t).finish(),
            MockResponse::Fn(_) => f.write_str("Fn(..)"),
        }
    }
}

#[derive(Debug, Clone)]
enum Matcher {
    Contains(String),
    Always,
}

/// One `(matcher, response)` entry of a mock script.
#[derive(Debug, Clone)]
pub struct MockRule {
    matcher: Matcher,
    response: MockResponse,
}

impl MockRule {
    /// Reply with `text` when the prompt contains `needle`.
    pub fn when_contains(needle: &str, text: &str) -> Self {
        MockRule {
            matcher: Matcher::Contains(needle.to_owned()),
            response: MockResponse::Text(text.to_owned()),
        }
    }

    /// Compute the reply from the request when the prompt contains `needle`.
    pub fn when_contains_fn(
        needle: &str,
        f: impl Fn(&CompletionRequest) -> String + Send + Sync + 'static,
    ) -> Self {
        MockRule {
            matcher: Matcher::Contains(needle.to_owned()),
            response: MockResponse::Fn(Arc::new(f)),
        }
    }

    /// Reply with `text` for any prompt (place last).
    pub fn fallback(text: &str) -> Self {
        MockRule { matcher: Matcher::Always, response: MockResponse::Text(text.to_owned()) }
    }

    /// Compute the reply for any prompt (place last).
    pub fn fallback_fn(f: impl Fn(&CompletionRequest) -> String + Send + Sync + 'static) -> Self {
        MockRule { matcher: Matcher::Always, response: MockResponse::Fn(Arc::new(f)) }
    }

    fn matches(&self, prompt: &str) -> bool {
        match &self.matcher {
            Matcher::Contains(needle) => prompt.contains(needle),
            Matcher::Always => true,
        }
    }

    fn respond(&self, req: &CompletionRequest) -> String {
        match &self.response {
            MockResponse::Text(t) => t.clone(),
            MockResponse::Fn(f) => f(req),
        }
    }
}

/// Deterministic provider that never touches the network: replies are a
/// pure function of the scripted rules and the request.
pub struct MockProvider {
    rules: Vec<MockRule>,
    calls: AtomicUsize,
}

impl MockProvider {
    pub fn new(rules: Vec<MockRule>) -> Self {
        MockProvider { rules, calls: AtomicUsize::new(0) }
    }

    /// How many prompts reached this provider (cache hits don't).
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Provider for MockProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<String, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        for rule in &self.rules {
            if rule.matches(&req.prompt) {
                return Ok(rule.respond(req));
            }
        }
        let prefix: String = req.prompt.chars().take(80).collect();
        Err(GatewayError::UnscriptedPrompt(prefix))
    }

    fn name(&self) -> &str {
        "mock"
    }
}

/// Build a gateway over a scripted mock: no cache, no rate limit, zero
/// backoff. First matching rule wins.
pub fn mock_script(rules: Vec<MockRule>) -> Gateway {
    let cfg = GatewayConfig {
        cache_dir: None,
        backoff_base: std::time::Duration::ZERO,
        ..Default::default()
    };
    Gateway::new(Box::new(MockProvider::new(rules)), cfg).expect("no cache dir to create")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(prompt: &str) -> CompletionRequest {
        CompletionRequest::new("m", prompt.to_owned(), "v0", "t")
    }

    #[test]
    fn first_matching_rule_wins() {
        let gw = mock_script(vec![
            MockRule::when_contains("alpha", "first"),
            MockRule::when_contains("alpha beta", "second"),
            MockRule::fallback("last"),
        ]);
        assert_eq!(gw.complete(&req("alpha beta")).unwrap().text, "first");
        assert_eq!(gw.complete(&req("gamma")).unwrap().text, "last");
    }

    #[test]
    fn closure_rules_see_the_request() {
        let gw = mock_script(vec![MockRule::fallback_fn(|r| {
            format!("echo:{}", r.prompt.split_whitespace().count())
        })]);
        assert_eq!(gw.complete(&req("one two three")).unwrap().text, "echo:3");
    }

    #[test]
    fn unmatched_prompts_fail_loudly() {
        let gw = mock_script(vec![MockRule::when_contains("specific", "x")]);
        match gw.complete(&req("something else entirely")) {
            Err(GatewayError::UnscriptedPrompt(prefix)) => {
                assert!(prefix.starts_with("something else"));
            }
            other => panic!("expected UnscriptedPrompt, got {other:?}"),
        }
    }

    #[test]
    fn mock_replies_are_reproducible() {
        let build = || {
            mock_script(vec![
                MockRule::when_contains("q", "r1"),
                MockRule::fallback_fn(|r| r.prompt.to_uppercase()),
            ])
        };
        let (a, b) = (build(), build());
        for p in ["q here", "other", "third one"] {
            assert_eq!(a.complete(&req(p)).unwrap().text, b.complete(&req(p)).unwrap().text);
        }
    }
}
