//! Run manifests and artifact writing.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Embedded in every artifact. `timestamp` comes from `SOURCE_DATE_EPOCH`
/// so that reruns stay byte-identical; it is `null` when that is unset.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_fingerprint: String,
    pub inputs: BTreeMap<String, String>,
    pub tool_version: String,
    pub timestamp: Option<u64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads inputs and remembers their hashes for the manifest.
#[derive(Default)]
pub struct Inputs {
    hashes: RefCell<BTreeMap<String, String>>,
}

impl Inputs {
    pub fn read(&self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.hashes.borrow_mut().insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn manifest(&self, command: &str, settings: &Value) -> RunManifest {
        let canonical = serde_json::to_string(settings).expect("settings serialize");
        RunManifest {
            command: command.to_owned(),
            config_fingerprint: sha256_hex(canonical.as_bytes()),
            inputs: self.hashes.borrow().clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()),
        }
    }
}

/// JSON lines with a `{"manifest": ...}` header.
pub fn jsonl<T: Serialize>(manifest: &RunManifest, rows: impl IntoIterator<Item = T>) -> String {
    let mut out = serde_json::to_string(&serde_json::json!({ "manifest": manifest })).expect("manifest serializes");
    out.push('\n');
    for row in rows {
        out.push_str(&serde_json::to_string(&row).expect("row serializes"));
        out.push('\n');
    }
    out
}

/// A JSON document with the manifest as its first field.
pub fn json_doc<T: Serialize>(manifest: &RunManifest, body: &T) -> String {
    let mut map = serde_json::Map::new();
    map.insert("manifest".into(), serde_json::to_value(manifest).expect("manifest serializes"));
    match serde_json::to_value(body).expect("body serializes") {
        Value::Object(o) => map.extend(o),
        other => {
            map.insert("result".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("document serializes");
    s.push('\n');
    s
}

pub fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// M2 has no room for a header, so the manifest goes next to the file.
pub fn write_with_sidecar(path: Option<&Path>, text: &str, manifest: &RunManifest) -> Result<()> {
    write_out(path, text)?;
    match path {
        Some(p) => {
            let mut side = PathBuf::from(p).into_os_string();
            side.push(".manifest.json");
            write_out(Some(Path::new(&side)), &json_doc(manifest, &serde_json::json!({})))
        }
        None => {
            log::info!("manifest not written: M2 output went to stdout");
            Ok(())
        }
    }
}
