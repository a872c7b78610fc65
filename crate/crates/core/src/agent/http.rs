//! Chat-completion client and the oracle built on it.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::oracle::{Answer, Mode, Oracle, OracleError, OracleRequest, OracleStats, ScriptedOracle};

pub const DEFAULT_API_KEY_ENV: &str = "PORTNAV_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_attempts: usize,
    pub backoff_ms: u64,
    /// 0 disables rate limiting.
    pub requests_per_minute: u32,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4".into(),
            temperature: 0.0,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 60,
            max_attempts: 3,
            backoff_ms: 500,
            requests_per_minute: 0,
        }
    }
}

/// Minimum spacing between requests, shareable across clients.
#[derive(Debug, Clone)]
pub struct RateLimiter {
    interval: Duration,
    next: Arc<Mutex<Option<Instant>>>,
}

impl RateLimiter {
    pub fn per_minute(requests: u32) -> Self {
        let interval = if requests == 0 { Duration::ZERO } else { Duration::from_secs(60) / requests };
        RateLimiter { interval, next: Arc::new(Mutex::new(None)) }
    }

    pub fn wait(&self) {
        if self.interval.is_zero() {
            return;
        }
        let sleep_for = {
            let mut next = self.next.lock().expect("rate limiter lock");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        std::thread::sleep(sleep_for);
    }
}

pub struct ChatClient {
    cfg: EndpointConfig,
    key: String,
    http: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl ChatClient {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(cfg: EndpointConfig) -> Result<Self, OracleError> {
        let key = std::env::var(&cfg.api_key_env).map_err(|_| OracleError::MissingKey(cfg.api_key_env.clone()))?;
        Self::with_key(cfg, key)
    }

    pub fn with_key(cfg: EndpointConfig, key: String) -> Result<Self, OracleError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| OracleError::Transport { attempts: 0, message: e.to_string() })?;
        let limiter = RateLimiter::per_minute(cfg.requests_per_minute);
        Ok(ChatClient { cfg, key, http, limiter })
    }

    pub fn with_limiter(mut self, limiter: RateLimiter) -> Self {
        self.limiter = limiter;
        self
    }

    /// Sends one system/user exchange and returns the reply text.
    pub fn complete(&self, system: &str, user: &str) -> Result<String, OracleError> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let attempts = self.cfg.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.cfg.backoff_ms << (attempt - 1)));
            }
            self.limiter.wait();
            let resp = match self.http.post(&url).bearer_auth(&self.key).json(&body).send() {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status();
            if status.is_server_error() || status.as_u16() == 429 {
                last = format!("HTTP {status}");
                continue;
            }
            if !status.is_success() {
                return Err(OracleError::Transport { attempts: attempt + 1, message: format!("HTTP {status}") });
            }
            let value: serde_json::Value = resp.json().map_err(|e| OracleError::Body(e.to_string()))?;
            return value["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| OracleError::Body(value.to_string()));
        }
        Err(OracleError::Transport { attempts, message: last })
    }
}

fn normalize(text: &str) -> String {
    text.trim()
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_lowercase()
}

/// Case- and punctuation-insensitive match of a reply against the candidates.
pub fn parse_choice(reply: &str, candidates: &[String]) -> Option<String> {
    let r = normalize(reply);
    candidates.iter().find(|c| normalize(c) == r).cloned()
}

pub fn parse_yes_no(reply: &str) -> Option<Answer> {
    match normalize(reply).split(|c: char| !c.is_alphanumeric()).next() {
        Some("yes") => Some(Answer::Yes),
        Some("no") => Some(Answer::No),
        _ => None,
    }
}

/// Oracle backed by a chat-completion endpoint. Unparseable replies are
/// retried once, then answered by the scripted rule and counted.
pub struct LlmOracle {
    client: ChatClient,
    fallback: ScriptedOracle,
    stats: OracleStats,
}

impl LlmOracle {
    pub fn new(client: ChatClient, fallback: ScriptedOracle) -> Self {
        LlmOracle { client, fallback, stats: OracleStats::default() }
    }
}

impl Oracle for LlmOracle {
    fn respond(&mut self, request: &OracleRequest) -> Result<Answer, OracleError> {
        if request.mode == Mode::ChooseObject && request.candidates.is_empty() {
            return Err(OracleError::NoCandidates);
        }
        self.stats.requests += 1;
        for _ in 0..2 {
            let reply = self.client.complete(&request.system, &request.user)?;
            let parsed = match request.mode {
                Mode::ChooseObject => parse_choice(&reply, &request.candidates).map(Answer::Object),
                Mode::YesNo => parse_yes_no(&reply),
            };
            if let Some(a) = parsed {
                return Ok(a);
            }
            log::debug!("unparseable oracle reply {reply:?}");
        }
        self.stats.fallbacks += 1;
        self.fallback.decide(request)
    }

    fn stats(&self) -> OracleStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::oracle::RequestContext;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Serves the given (status, reply text) pairs in order, one per connection.
    fn mock_server(replies: Vec<(u16, &'static str)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for (status, text) in replies {
                let Ok((mut stream, _)) = listener.accept() else { return };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let payload = json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string();
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}"), hits)
    }

    fn oracle(url: String) -> LlmOracle {
        let cfg = EndpointConfig { base_url: url, backoff_ms: 1, timeout_secs: 5, ..Default::default() };
        LlmOracle::new(ChatClient::with_key(cfg, "test-key".into()).unwrap(), ScriptedOracle::default())
    }

    fn request(mode: Mode, candidates: &[&str]) -> OracleRequest {
        OracleRequest {
            system: "s".into(),
            user: "u".into(),
            candidates: candidates.iter().map(|s| s.to_string()).collect(),
            mode,
            context: RequestContext { traceback_cost: Some(1), remaining_steps: 5, ..Default::default() },
        }
    }

    #[test]
    fn normalizes_choice() {
        let (url, _) = mock_server(vec![(200, "Mug")]);
        let mut o = oracle(url);
        assert_eq!(o.respond(&request(Mode::ChooseObject, &["mug", "sofa"])).unwrap(), Answer::Object("mug".into()));
        assert_eq!(o.stats().fallbacks, 0);
    }

    #[test]
    fn falls_back_after_two_bad_replies() {
        let (url, hits) = mock_server(vec![(200, "banana"), (200, "banana")]);
        let mut o = oracle(url);
        assert_eq!(o.respond(&request(Mode::ChooseObject, &["mug", "sofa"])).unwrap(), Answer::Object("mug".into()));
        assert_eq!(o.stats().fallbacks, 1);
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn yes_with_punctuation() {
        let (url, _) = mock_server(vec![(200, "YES.")]);
        let mut o = oracle(url);
        assert_eq!(o.respond(&request(Mode::YesNo, &[])).unwrap(), Answer::Yes);
    }

    #[test]
    fn retries_server_errors() {
        let (url, hits) = mock_server(vec![(500, ""), (503, ""), (200, "sofa")]);
        let mut o = oracle(url);
        assert_eq!(o.respond(&request(Mode::ChooseObject, &["mug", "sofa"])).unwrap(), Answer::Object("sofa".into()));
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let (url, _) = mock_server(vec![(500, ""), (500, ""), (500, "")]);
        let mut o = oracle(url);
        assert!(matches!(
            o.respond(&request(Mode::ChooseObject, &["mug"])),
            Err(OracleError::Transport { attempts: 3, .. })
        ));
    }

    #[test]
    fn missing_key_is_reported() {
        let cfg = EndpointConfig { api_key_env: "PORTNAV_TEST_UNSET_KEY_VAR".into(), ..Default::default() };
        assert!(matches!(ChatClient::from_env(cfg), Err(OracleError::MissingKey(_))));
    }

    #[test]
    fn reply_parsing() {
        let c = vec!["salt and pepper shakers".to_string(), "mug".to_string()];
        assert_eq!(parse_choice(" Salt and pepper shakers.\n", &c).as_deref(), Some("salt and pepper shakers"));
        assert_eq!(parse_choice("\"mug\"", &c).as_deref(), Some("mug"));
        assert_eq!(parse_choice("cup", &c), None);
        assert_eq!(parse_yes_no("no, thanks"), Some(Answer::No));
        assert_eq!(parse_yes_no("maybe"), None);
    }
}
