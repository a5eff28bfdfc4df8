//! Completion clients. Everything network-specific lives in [`LiveClient`].

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompt::prompt_hash;
use crate::error::{Error, Result};

pub trait CompletionClient: Send + Sync {
    fn complete(&self, system: &str, user: &str) -> Result<String>;

    /// Short label recorded in audit logs.
    fn name(&self) -> String;
}

/// Returns canned responses in order; for tests and demonstrations.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    responses: Mutex<VecDeque<String>>,
    calls: Mutex<usize>,
}

impl ScriptedClient {
    pub fn new<I: IntoIterator<Item = String>>(responses: I) -> Self {
        ScriptedClient {
            responses: Mutex::new(responses.into_iter().collect()),
            calls: Mutex::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl CompletionClient for ScriptedClient {
    fn complete(&self, _system: &str, _user: &str) -> Result<String> {
        *self.calls.lock().unwrap() += 1;
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| Error::Client("scripted client has no responses left".into()))
    }

    fn name(&self) -> String {
        "scripted".into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub prompt_hash: String,
    pub response: String,
}

/// Answers from recorded transcripts keyed by prompt hash.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    by_hash: BTreeMap<String, String>,
}

impl ReplayClient {
    pub fn from_transcripts<I: IntoIterator<Item = Transcript>>(t: I) -> Self {
        ReplayClient {
            by_hash: t.into_iter().map(|t| (t.prompt_hash, t.response)).collect(),
        }
    }

    /// JSON-lines file of [`Transcript`] records.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut ts = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            ts.push(serde_json::from_str(line).map_err(|e| Error::Row {
                row: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(Self::from_transcripts(ts))
    }

    pub fn len(&self) -> usize {
        self.by_hash.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_hash.is_empty()
    }
}

impl CompletionClient for ReplayClient {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        let h = prompt_hash(system, user);
        self.by_hash
            .get(&h)
            .cloned()
            .ok_or_else(|| Error::Client(format!("no replay transcript for prompt {h}")))
    }

    fn name(&self) -> String {
        "replay".into()
    }
}

/// Wraps another client and keeps every exchange for later replay.
pub struct RecordingClient<C> {
    inner: C,
    log: Mutex<BTreeMap<String, String>>,
}

impl<C: CompletionClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        RecordingClient { inner, log: Mutex::new(BTreeMap::new()) }
    }

    pub fn transcripts(&self) -> Vec<Transcript> {
        self.log
            .lock()
            .unwrap()
            .iter()
            .map(|(h, r)| Transcript { prompt_hash: h.clone(), response: r.clone() })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for t in self.transcripts() {
            out.push_str(&serde_json::to_string(&t)?);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

impl<C: CompletionClient> CompletionClient for RecordingClient<C> {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        let r = self.inner.complete(system, user)?;
        self.log.lock().unwrap().insert(prompt_hash(system, user), r.clone());
        Ok(r)
    }

    fn name(&self) -> String {
        format!("recording({})", self.inner.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveSettings {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_concurrent: usize,
    pub timeout_s: u64,
    pub retries: usize,
}

impl Default for LiveSettings {
    fn default() -> Self {
        LiveSettings {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: "GAL_API_KEY".into(),
            temperature: 0.0,
            max_concurrent: 4,
            timeout_s: 120,
            retries: 3,
        }
    }
}

/// Counting semaphore for the request cap.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut n = self.cv.wait_while(self.free.lock().unwrap(), |n| *n == 0).unwrap();
            *n -= 1;
        }
        let out = f();
        *self.free.lock().unwrap() += 1;
        self.cv.notify_one();
        out
    }
}

/// Chat-completions POST against an OpenAI-compatible endpoint.
pub struct LiveClient {
    settings: LiveSettings,
    key: String,
    agent: ureq::Agent,
    gate: Gate,
}

impl LiveClient {
    pub fn new(settings: LiveSettings) -> Result<Self> {
        let key = std::env::var(&settings.api_key_env)
            .map_err(|_| Error::Config(format!("environment variable {} is not set", settings.api_key_env)))?;
        if settings.max_concurrent == 0 {
            return Err(Error::Config("client.max_concurrent must be at least 1".into()));
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(settings.timeout_s))
            .build();
        Ok(LiveClient {
            gate: Gate { free: Mutex::new(settings.max_concurrent), cv: Condvar::new() },
            settings,
            key,
            agent,
        })
    }

    fn request(&self, body: &Value) -> Result<String> {
        let url = format!("{}/chat/completions", self.settings.base_url.trim_end_matches('/'));
        let resp = self
            .agent
            .post(&url)
            .set("Authorization", &format!("Bearer {}", self.key))
            .send_json(body)
            .map_err(|e| Error::Client(format!("POST {url}: {e}")))?;
        let v: Value = resp
            .into_json()
            .map_err(|e| Error::Client(format!("reading response from {url}: {e}")))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::Client(format!("response from {url} has no choices[0].message.content")))
    }
}

impl CompletionClient for LiveClient {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        let body = json!({
            "model": self.settings.model,
            "temperature": self.settings.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        self.gate.run(|| {
            let mut last = None;
            for attempt in 0..self.settings.retries.max(1) {
                if attempt > 0 {
                    std::thread::sleep(Duration::from_millis(500 << attempt.min(5)));
                }
                match self.request(&body) {
                    Ok(s) => return Ok(s),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
    }

    fn name(&self) -> String {
        format!("live({})", self.settings.model)
    }
}
