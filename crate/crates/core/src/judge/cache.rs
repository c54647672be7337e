use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{pair_hash, sha256_hex, TurnRecord, Verdict};
use crate::align::EditPair;

/// Cache key: pair content hash combined with the judge fingerprint.
pub fn cache_key(pair: &EditPair, fingerprint: &str) -> String {
    sha256_hex(format!("{}|{fingerprint}", pair_hash(pair)).as_bytes())
}

/// One line of a verdict dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub pair_hash: String,
    pub valid: bool,
    pub analysis: String,
    pub turn_history: Vec<TurnRecord>,
    pub provenance: String,
}

impl VerdictRecord {
    pub fn new(pair: &EditPair, verdict: &Verdict) -> Self {
        Self {
            pair_hash: pair_hash(pair),
            valid: verdict.valid,
            analysis: verdict.analysis.clone(),
            turn_history: verdict.turn_history.clone(),
            provenance: verdict.provenance.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    verdict: Verdict,
}

/// Verdict cache with many concurrent readers and serialized writers,
/// optionally backed by an append-only JSON lines file.
#[derive(Debug, Default)]
pub struct VerdictCache {
    entries: RwLock<HashMap<String, Verdict>>,
    file: Option<(PathBuf, Mutex<File>)>,
}

impl VerdictCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists and appends new entries to it.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref();
        let mut entries = HashMap::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheLine = serde_json::from_str(&line)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1)))?;
                entries.insert(rec.key, rec.verdict);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { entries: RwLock::new(entries), file: Some((path.to_owned(), Mutex::new(file))) })
    }

    pub fn get(&self, key: &str) -> Option<Verdict> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, key: String, verdict: Verdict) -> io::Result<()> {
        let mut map = self.entries.write().expect("cache lock");
        if let Some((_, file)) = &self.file {
            let line = serde_json::to_string(&CacheLine { key: key.clone(), verdict: verdict.clone() })?;
            let mut f = file.lock().expect("cache file lock");
            writeln!(f, "{line}")?;
        }
        map.insert(key, verdict);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops every entry, truncating the backing file if there is one.
    pub fn clear(&self) -> io::Result<()> {
        let mut map = self.entries.write().expect("cache lock");
        if let Some((_, file)) = &self.file {
            let f = file.lock().expect("cache file lock");
            f.set_len(0)?;
        }
        map.clear();
        Ok(())
    }
}
