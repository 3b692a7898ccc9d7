//! Completion gateway: one narrow seam between the pipeline and any LLM.
//!
//! A [`Gateway`] wraps a [`Provider`] (HTTP endpoint, scripted mock, or the
//! built-in offline responder) and adds the operational behaviour every
//! caller needs exactly once: a content-addressed disk cache, bounded
//! retries with exponential backoff, an optional requests-per-second
//! limiter, and a hard cap on concurrent in-flight requests.
//!
//! Requests are cached by a digest of `(model_id, prompt_version,
//! temperature, prompt)`, so editing a prompt template automatically
//! invalidates old completions.

mod http;
mod mock;

pub use http::HttpProvider;
pub use mock::{mock_script, MockProvider, MockResponse, MockRule};

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// One completion call, fully specified.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model_id: String,
    pub prompt: String,
    pub temperature: f64,
    /// Provider-side output token cap, when supported.
    pub max_output: Option<u32>,
    /// Free-form label for logs ("topic_naming", "question_type", ...).
    pub tag: String,
    /// Version stamp of the template that produced `prompt`.
    pub prompt_version: String,
}

impl CompletionRequest {
    pub fn new(model_id: &str, prompt: String, prompt_version: &str, tag: &str) -> Self {
        CompletionRequest {
            model_id: model_id.to_owned(),
            prompt,
            temperature: 0.0,
            max_output: None,
            tag: tag.to_owned(),
            prompt_version: prompt_version.to_owned(),
        }
    }
}

/// What came back, and how.
#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub text: String,
    /// True when served from the disk cache (no provider call was made,
    /// and `attempt_count` is 0).
    pub cached: bool,
    pub latency: Duration,
    pub attempt_count: u32,
}

/// Content digest identifying a request in the cache.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn for_request(req: &CompletionRequest) -> Self {
        let mut h = Sha256::new();
        let temp_bits = format!("{:016x}", req.temperature.to_bits());
        for part in [
            req.model_id.as_str(),
            req.prompt_version.as_str(),
            temp_bits.as_str(),
            req.prompt.as_str(),
        ] {
            // Length-prefix each component so concatenations can't collide.
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        let mut hex = String::with_capacity(64);
        for b in h.finalize() {
            hex.push_str(&format!("{b:02x}"));
        }
        CacheKey(hex)
    }

    pub fn as_hex(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited by provider: {0}")]
    RateLimited(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("no scripted response matches prompt starting {0:?}")]
    UnscriptedPrompt(String),
    #[error("completion cache I/O: {0}")]
    Cache(#[from] std::io::Error),
}

impl GatewayError {
    /// Transient failures worth another attempt.
    pub fn retryable(&self) -> bool {
        matches!(
            self,
            GatewayError::RateLimited(_) | GatewayError::Provider(_) | GatewayError::Timeout(_)
        )
    }
}

/// Anything that can answer a prompt.
pub trait Provider: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, GatewayError>;
    fn name(&self) -> &str;
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, GatewayError> {
        (**self).complete(req)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Directory for cached completions; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
    /// Total tries per request (1 = no retry).
    pub max_attempts: u32,
    /// First backoff delay; doubles per retry.
    pub backoff_base: Duration,
    /// Hard cap on concurrently executing provider calls.
    pub max_in_flight: usize,
    /// Optional request rate ceiling.
    pub requests_per_second: Option<f64>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            cache_dir: None,
            max_attempts: 3,
            backoff_base: Duration::from_millis(250),
            max_in_flight: 4,
            requests_per_second: None,
        }
    }
}

/// Counting gate for in-flight provider calls; also records the peak so
/// tests can observe that the cap held.
struct InFlightGauge {
    state: Mutex<(usize, usize)>, // (current, peak)
    released: Condvar,
    cap: usize,
}

impl InFlightGauge {
    fn new(cap: usize) -> Self {
        InFlightGauge {
            state: Mutex::new((0, 0)),
            released: Condvar::new(),
            cap: cap.max(1),
        }
    }

    fn acquire(&self) -> InFlightPermit<'_> {
        let mut g = self.state.lock().expect("gauge lock");
        while g.0 >= self.cap {
            g = self.released.wait(g).expect("gauge lock");
        }
        g.0 += 1;
        g.1 = g.1.max(g.0);
        InFlightPermit { gauge: self }
    }

    fn peak(&self) -> usize {
        self.state.lock().expect("gauge lock").1
    }
}

struct InFlightPermit<'a> {
    gauge: &'a InFlightGauge,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        let mut g = self.gauge.state.lock().expect("gauge lock");
        g.0 -= 1;
        drop(g);
        self.gauge.released.notify_one();
    }
}

/// Strict-spacing token bucket (capacity one token).
struct RateLimiter {
    state: Mutex<(f64, Instant)>, // (tokens, last refill)
    per_second: f64,
}

impl RateLimiter {
    fn new(per_second: f64) -> Self {
        RateLimiter {
            state: Mutex::new((1.0, Instant::now())),
            per_second: per_second.max(1e-6),
        }
    }

    fn wait(&self) {
        loop {
            let sleep_for = {
                let mut g = self.state.lock().expect("limiter lock");
                let now = Instant::now();
                let refill = now.duration_since(g.1).as_secs_f64() * self.per_second;
                g.0 = (g.0 + refill).min(1.0);
                g.1 = now;
                if g.0 >= 1.0 {
                    g.0 -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - g.0) / self.per_second)
            };
            std::thread::sleep(sleep_for);
        }
    }
}

/// On-disk shape of one cached completion.
#[derive(Serialize, Deserialize)]
struct CacheEntry {
    text: String,
    meta: CacheMeta,
}

#[derive(Serialize, Deserialize)]
struct CacheMeta {
    model_id: String,
    prompt_version: String,
    temperature: f64,
    tag: String,
    prompt: String,
}

/// Provider plus caching, retries, rate limiting, and concurrency control.
pub struct Gateway {
    provider: Box<dyn Provider>,
    cfg: GatewayConfig,
    gauge: InFlightGauge,
    limiter: Option<RateLimiter>,
}

impl Gateway {
    pub fn new(provider: Box<dyn Provider>, cfg: GatewayConfig) -> Result<Self, GatewayError> {
        if let Some(dir) = &cfg.cache_dir {
            std::fs::create_dir_all(dir)?;
        }
        let gauge = InFlightGauge::new(cfg.max_in_flight);
        let limiter = cfg.requests_per_second.map(RateLimiter::new);
        Ok(Gateway { provider, cfg, gauge, limiter })
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    /// Highest number of provider calls that were ever executing at once.
    pub fn peak_in_flight(&self) -> usize {
        self.gauge.peak()
    }

    /// Resolve a request: cache first, then the provider with retries.
    pub fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        let started = Instant::now();
        let key = CacheKey::for_request(req);
        if let Some(text) = self.cache_lookup(&key) {
            return Ok(CompletionResult {
                text,
                cached: true,
                latency: started.elapsed(),
                attempt_count: 0,
            });
        }

        let _permit = self.gauge.acquire();
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            if let Some(limiter) = &self.limiter {
                limiter.wait();
            }
            match self.provider.complete(req) {
                Ok(text) => {
                    self.cache_store(&key, req, &text)?;
                    return Ok(CompletionResult {
                        text,
                        cached: false,
                        latency: started.elapsed(),
                        attempt_count: attempt,
                    });
                }
                Err(err) if err.retryable() && attempt < self.cfg.max_attempts => {
                    let delay = self.cfg.backoff_base * 2u32.saturating_pow(attempt - 1);
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                }
                Err(err) => return Err(err),
            }
        }
    }

    fn cache_path(&self, key: &CacheKey) -> Option<PathBuf> {
        self.cfg.cache_dir.as_ref().map(|d| d.join(format!("{}.json", key.as_hex())))
    }

    fn cache_lookup(&self, key: &CacheKey) -> Option<String> {
        let path = self.cache_path(key)?;
        let raw = std::fs::read_to_string(path).ok()?;
        // An unreadable entry is a miss; the fresh completion rewrites it.
        serde_json::from_str::<CacheEntry>(&raw).ok().map(|e| e.text)
    }

    fn cache_store(
        &self,
        key: &CacheKey,
        req: &CompletionRequest,
        text: &str,
    ) -> Result<(), GatewayError> {
        let Some(path) = self.cache_path(key) else {
            return Ok(());
        };
        let entry = CacheEntry {
            text: text.to_owned(),
            meta: CacheMeta {
                model_id: req.model_id.clone(),
                prompt_version: req.prompt_version.clone(),
                temperature: req.temperature,
                tag: req.tag.clone(),
                prompt: req.prompt.clone(),
            },
        };
        let body = serde_json::to_string_pretty(&entry).expect("cache entry serializes");
        // Write-then-rename so concurrent readers never see a torn file.
        let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn req(prompt: &str) -> CompletionRequest {
        CompletionRequest::new("test-model", prompt.to_owned(), "v000000000000", "test")
    }

    fn counting_mock(rules: Vec<MockRule>) -> (Arc<MockProvider>, Box<dyn Provider>) {
        let provider = Arc::new(MockProvider::new(rules));
        (provider.clone(), Box::new(provider))
    }

    fn fast_cfg() -> GatewayConfig {
        GatewayConfig { backoff_base: Duration::ZERO, ..Default::default() }
    }

    #[test]
    fn cache_serves_second_identical_request_without_provider_call() {
        let dir = tempfile::tempdir().unwrap();
        let (handle, provider) = counting_mock(vec![MockRule::fallback("hello")]);
        let cfg = GatewayConfig { cache_dir: Some(dir.path().to_owned()), ..fast_cfg() };
        let gw = Gateway::new(provider, cfg).unwrap();

        let first = gw.complete(&req("hi there")).unwrap();
        assert!(!first.cached);
        assert_eq!(first.attempt_count, 1);
        assert_eq!(handle.calls(), 1);

        let second = gw.complete(&req("hi there")).unwrap();
        assert!(second.cached);
        assert_eq!(second.attempt_count, 0);
        assert_eq!(second.text, "hello");
        assert_eq!(handle.calls(), 1, "cache hit must not reach the provider");
    }

    #[test]
    fn cache_key_separates_model_prompt_version_and_temperature() {
        let base = req("same prompt");
        let mut other_model = base.clone();
        other_model.model_id = "other".to_owned();
        let mut other_version = base.clone();
        other_version.prompt_version = "v111111111111".to_owned();
        let mut other_temp = base.clone();
        other_temp.temperature = 0.5;
        let mut other_prompt = base.clone();
        other_prompt.prompt = "same prompt!".to_owned();

        let k = CacheKey::for_request(&base);
        for variant in [&other_model, &other_version, &other_temp, &other_prompt] {
            assert_ne!(k, CacheKey::for_request(variant));
        }
        assert_eq!(k, CacheKey::for_request(&base.clone()));
        assert_eq!(k.as_hex().len(), 64);
    }

    #[test]
    fn corrupt_cache_entries_are_treated_as_misses() {
        let dir = tempfile::tempdir().unwrap();
        let (handle, provider) = counting_mock(vec![MockRule::fallback("fresh")]);
        let cfg = GatewayConfig { cache_dir: Some(dir.path().to_owned()), ..fast_cfg() };
        let gw = Gateway::new(provider, cfg).unwrap();

        let key = CacheKey::for_request(&req("x"));
        std::fs::write(dir.path().join(format!("{}.json", key.as_hex())), "{not json").unwrap();

        let r = gw.complete(&req("x")).unwrap();
        assert!(!r.cached);
        assert_eq!(r.text, "fresh");
        assert_eq!(handle.calls(), 1);
        // The bad entry was replaced with a good one.
        let r2 = gw.complete(&req("x")).unwrap();
        assert!(r2.cached);
    }

    struct Flaky {
        failures: AtomicUsize,
        error: fn(String) -> GatewayError,
    }

    impl Provider for Flaky {
        fn complete(&self, _req: &CompletionRequest) -> Result<String, GatewayError> {
            if self.failures.load(Ordering::SeqCst) > 0 {
                self.failures.fetch_sub(1, Ordering::SeqCst);
                Err((self.error)("induced".to_owned()))
            } else {
                Ok("recovered".to_owned())
            }
        }
        fn name(&self) -> &str {
            "flaky"
        }
    }

    #[test]
    fn transient_failures_are_retried_with_attempt_count() {
        let gw = Gateway::new(
            Box::new(Flaky { failures: AtomicUsize::new(2), error: GatewayError::RateLimited }),
            fast_cfg(),
        )
        .unwrap();
        let r = gw.complete(&req("x")).unwrap();
        assert_eq!(r.attempt_count, 3);
        assert_eq!(r.text, "recovered");
    }

    #[test]
    fn attempts_are_bounded() {
        let gw = Gateway::new(
            Box::new(Flaky { failures: AtomicUsize::new(5), error: GatewayError::Timeout }),
            GatewayConfig { max_attempts: 2, ..fast_cfg() },
        )
        .unwrap();
        assert!(matches!(gw.complete(&req("x")), Err(GatewayError::Timeout(_))));
    }

    struct AlwaysAuthFail(AtomicUsize);

    impl Provider for AlwaysAuthFail {
        fn complete(&self, _req: &CompletionRequest) -> Result<String, GatewayError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Err(GatewayError::Auth("bad key".to_owned()))
        }
        fn name(&self) -> &str {
            "authfail"
        }
    }

    #[test]
    fn auth_errors_are_not_retried() {
        let provider = Arc::new(AlwaysAuthFail(AtomicUsize::new(0)));
        let gw = Gateway::new(Box::new(provider.clone()), fast_cfg()).unwrap();
        assert!(matches!(gw.complete(&req("x")), Err(GatewayError::Auth(_))));
        assert_eq!(provider.0.load(Ordering::SeqCst), 1);
    }

    struct SlowMock;

    impl Provider for SlowMock {
        fn complete(&self, _req: &CompletionRequest) -> Result<String, GatewayError> {
            std::thread::sleep(Duration::from_millis(25));
            Ok("done".to_owned())
        }
        fn name(&self) -> &str {
            "slow"
        }
    }

    #[test]
    fn in_flight_cap_holds_under_parallel_load() {
        let gw = Arc::new(
            Gateway::new(Box::new(SlowMock), GatewayConfig { max_in_flight: 2, ..fast_cfg() })
                .unwrap(),
        );
        let threads: Vec<_> = (0..8)
            .map(|i| {
                let gw = gw.clone();
                std::thread::spawn(move || gw.complete(&req(&format!("p{i}"))).unwrap())
            })
            .collect();
        for t in threads {
            t.join().unwrap();
        }
        assert!(gw.peak_in_flight() <= 2, "peak {} exceeded cap", gw.peak_in_flight());
        assert_eq!(gw.peak_in_flight(), 2, "cap should actually be reached under load");
    }
}
