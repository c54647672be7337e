use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::judge::{sha256_hex, ChatTransport, ModelEndpoint, TransportError};

/// A model that answers generation prompts.
pub trait Generator: Send + Sync {
    fn id(&self) -> &str;

    fn model(&self) -> &str;

    fn generate(&self, prompt: &str) -> Result<String, TransportError>;
}

/// Generator backed by a chat endpoint.
pub struct ChatGenerator {
    pub endpoint: ModelEndpoint,
    pub transport: Arc<dyn ChatTransport>,
}

impl ChatGenerator {
    pub fn new(endpoint: ModelEndpoint, transport: Arc<dyn ChatTransport>) -> Self {
        Self { endpoint, transport }
    }
}

impl Generator for ChatGenerator {
    fn id(&self) -> &str {
        &self.endpoint.name
    }

    fn model(&self) -> &str {
        &self.endpoint.model
    }

    fn generate(&self, prompt: &str) -> Result<String, TransportError> {
        let mut attempt = 0;
        loop {
            match self.transport.complete(&self.endpoint, prompt) {
                Ok(text) => return Ok(text),
                Err(e) if attempt >= self.endpoint.retry.max_retries => return Err(e),
                Err(e) => {
                    log::debug!("generator {} attempt {} failed: {e}", self.endpoint.name, attempt + 1);
                    std::thread::sleep(self.endpoint.retry.delay(attempt));
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub prompt_hash: String,
    pub model: String,
    pub response: String,
}

/// Generation responses keyed by `(prompt hash, model)`, optionally
/// persisted as append-only JSON lines.
#[derive(Debug, Default)]
pub struct GenerationCache {
    entries: RwLock<HashMap<(String, String), String>>,
    file: Option<Mutex<File>>,
}

impl GenerationCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref();
        let mut entries = HashMap::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let r: CachedResponse = serde_json::from_str(&line)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1)))?;
                entries.insert((r.prompt_hash, r.model), r.response);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { entries: RwLock::new(entries), file: Some(Mutex::new(file)) })
    }

    pub fn prompt_hash(prompt: &str) -> String {
        sha256_hex(prompt.as_bytes())
    }

    pub fn get(&self, prompt: &str, model: &str) -> Option<String> {
        let key = (Self::prompt_hash(prompt), model.to_owned());
        self.entries.read().expect("cache lock").get(&key).cloned()
    }

    pub fn insert(&self, prompt: &str, model: &str, response: &str) -> io::Result<()> {
        let rec = CachedResponse { prompt_hash: Self::prompt_hash(prompt), model: model.to_owned(), response: response.to_owned() };
        let mut map = self.entries.write().expect("cache lock");
        if let Some(f) = &self.file {
            writeln!(f.lock().expect("cache file lock"), "{}", serde_json::to_string(&rec)?)?;
        }
        map.insert((rec.prompt_hash, rec.model), rec.response);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Serves cached responses and records new ones. Without an inner
/// generator it replays the cache only, and a miss is an error.
pub struct CachedGenerator {
    id: String,
    model: String,
    inner: Option<Box<dyn Generator>>,
    cache: Arc<GenerationCache>,
}

impl CachedGenerator {
    pub fn new(inner: Box<dyn Generator>, cache: Arc<GenerationCache>) -> Self {
        Self { id: inner.id().to_owned(), model: inner.model().to_owned(), inner: Some(inner), cache }
    }

    pub fn replay(id: impl Into<String>, model: impl Into<String>, cache: Arc<GenerationCache>) -> Self {
        Self { id: id.into(), model: model.into(), inner: None, cache }
    }
}

impl Generator for CachedGenerator {
    fn id(&self) -> &str {
        &self.id
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn generate(&self, prompt: &str) -> Result<String, TransportError> {
        if let Some(hit) = self.cache.get(prompt, &self.model) {
            return Ok(hit);
        }
        let inner = self.inner.as_ref().ok_or_else(|| {
            TransportError::Other(format!("no cached response for model {} and no live endpoint", self.model))
        })?;
        let text = inner.generate(prompt)?;
        if let Err(e) = self.cache.insert(prompt, &self.model, &text) {
            log::warn!("could not persist generation: {e}");
        }
        Ok(text)
    }
}

/// Fixed prompt-independent answers, mainly for tests and demos.
pub struct ScriptedGenerator {
    pub id: String,
    pub responses: Vec<Result<String, String>>,
    next: Mutex<usize>,
}

impl ScriptedGenerator {
    /// Answers with `responses` in order, repeating the last one.
    pub fn new(id: impl Into<String>, responses: Vec<Result<String, String>>) -> Self {
        Self { id: id.into(), responses, next: Mutex::new(0) }
    }

    pub fn always(id: impl Into<String>, response: impl Into<String>) -> Self {
        Self::new(id, vec![Ok(response.into())])
    }
}

impl Generator for ScriptedGenerator {
    fn id(&self) -> &str {
        &self.id
    }

    fn model(&self) -> &str {
        &self.id
    }

    fn generate(&self, _prompt: &str) -> Result<String, TransportError> {
        let mut n = self.next.lock().expect("script lock");
        let i = (*n).min(self.responses.len().saturating_sub(1));
        *n += 1;
        match self.responses.get(i) {
            Some(Ok(s)) => Ok(s.clone()),
            Some(Err(e)) => Err(TransportError::Other(e.clone())),
            None => Err(TransportError::Other("empty script".into())),
        }
    }
}
