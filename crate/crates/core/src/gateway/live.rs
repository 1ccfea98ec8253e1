use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{ChatProvider, GatewayError, ProviderConfig, ProviderError, ProviderKind};
use crate::prompt::{ChatTurn, Sender};

/// Client-side token bucket shared by every session of a run.
#[derive(Debug)]
pub struct RateLimiter {
    per_sec: f64,
    burst: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn per_minute(requests: u32) -> Self {
        let per_sec = f64::from(requests.max(1)) / 60.0;
        RateLimiter {
            per_sec,
            burst: 1.0,
            state: Mutex::new((1.0, Instant::now())),
        }
    }

    /// Blocks until a request may be sent.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().expect("limiter lock");
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.per_sec).min(self.burst);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.per_sec
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct Response {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: String,
}

/// Chat-completions style HTTP provider with bearer-token auth.
pub struct LiveProvider {
    client: Client,
    endpoint: String,
    model: String,
    token: String,
    temperature: f64,
    max_tokens: u32,
    limiter: Arc<RateLimiter>,
}

impl LiveProvider {
    pub fn new(config: &ProviderConfig, limiter: Arc<RateLimiter>) -> Result<Self, GatewayError> {
        let var = config.auth_env.clone().unwrap_or_default();
        let token = std::env::var(&var)
            .ok()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| GatewayError::Config(format!("environment variable {var} is not set")))?;
        let client = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(format!("http client: {e}")))?;
        Ok(LiveProvider {
            client,
            endpoint: config.endpoint.clone().unwrap_or_default(),
            model: config.model_name.clone().unwrap_or_default(),
            token,
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            limiter,
        })
    }
}

fn retry_after(headers: &reqwest::header::HeaderMap) -> Option<Duration> {
    headers
        .get(reqwest::header::RETRY_AFTER)?
        .to_str()
        .ok()?
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|s| s.is_finite() && *s >= 0.0)
        .map(Duration::from_secs_f64)
}

impl ChatProvider for LiveProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Live
    }

    fn model_name(&self) -> String {
        self.model.clone()
    }

    fn reply(&mut self, history: &[ChatTurn]) -> Result<String, ProviderError> {
        let messages = history
            .iter()
            .map(|t| Message {
                role: match t.sender {
                    Sender::User => "user",
                    Sender::Assistant => "assistant",
                },
                content: &t.text,
            })
            .collect();
        let body = Request {
            model: &self.model,
            messages,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        };
        self.limiter.acquire();
        // Error texts are built from the status and body only; the token
        // travels in a header and is never formatted.
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.token)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::Transport(e.without_url().to_string()))?;
        let status = resp.status();
        if status == StatusCode::TOO_MANY_REQUESTS {
            return Err(ProviderError::RateLimited {
                retry_after: retry_after(resp.headers()),
            });
        }
        let text = resp
            .text()
            .map_err(|e| ProviderError::Transport(e.without_url().to_string()))?;
        if status.is_server_error() {
            return Err(ProviderError::Transport(format!("server returned {status}")));
        }
        if !status.is_success() {
            let snippet: String = text.chars().take(200).collect();
            return Err(ProviderError::Fatal(format!("provider returned {status}: {snippet}")));
        }
        let parsed: Response =
            serde_json::from_str(&text).map_err(|e| ProviderError::Fatal(format!("unexpected response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ProviderError::Fatal("response has no choices".into()))
    }
}
