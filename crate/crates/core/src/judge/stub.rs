use std::collections::HashMap;

use serde::Deserialize;

use super::{fingerprint_of, sha256_hex, Judge, JudgeError, Verdict};
use crate::align::EditPair;

/// Judges that never touch the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubJudge {
    AlwaysValid,
    AlwaysInvalid,
}

impl StubJudge {
    fn name(self) -> &'static str {
        match self {
            StubJudge::AlwaysValid => "always-valid",
            StubJudge::AlwaysInvalid => "always-invalid",
        }
    }
}

impl Judge for StubJudge {
    fn judge(&self, _pair: &EditPair) -> Result<Verdict, JudgeError> {
        let valid = matches!(self, StubJudge::AlwaysValid);
        Ok(Verdict::single(self.name(), valid, format!("stub: {}", self.name()), self.fingerprint()))
    }

    fn fingerprint(&self) -> String {
        fingerprint_of(&serde_json::json!({"kind": self.name()}))
    }
}

#[derive(Deserialize)]
struct TableRow {
    s1: String,
    s2: String,
    valid: bool,
}

/// Looks verdicts up by `(s1, s2)` joined with single spaces.
#[derive(Debug, Clone, Default)]
pub struct TableJudge {
    table: HashMap<(String, String), bool>,
    default: Option<bool>,
    fingerprint: String,
}

impl TableJudge {
    pub fn new<I>(rows: I, default: Option<bool>) -> Self
    where
        I: IntoIterator<Item = ((String, String), bool)>,
    {
        let table: HashMap<(String, String), bool> = rows.into_iter().collect();
        let fingerprint = Self::compute_fingerprint(&table, default);
        Self { table, default, fingerprint }
    }

    fn compute_fingerprint(table: &HashMap<(String, String), bool>, default: Option<bool>) -> String {
        let mut entries: Vec<_> = table.iter().collect();
        entries.sort();
        fingerprint_of(&serde_json::json!({
            "kind": "table",
            "entries": sha256_hex(serde_json::to_string(&entries).expect("serializable").as_bytes()),
            "default": default,
        }))
    }

    /// Lines of `{"s1": "...", "s2": "...", "valid": bool}`.
    pub fn from_jsonl(text: &str, default: Option<bool>) -> Result<Self, String> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: TableRow = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            rows.push(((row.s1, row.s2), row.valid));
        }
        Ok(Self::new(rows, default))
    }

    pub fn insert(&mut self, s1: &str, s2: &str, valid: bool) {
        self.table.insert((s1.to_owned(), s2.to_owned()), valid);
        self.fingerprint = Self::compute_fingerprint(&self.table, self.default);
    }
}

impl Judge for TableJudge {
    fn judge(&self, pair: &EditPair) -> Result<Verdict, JudgeError> {
        let key = (pair.s1.join(" "), pair.s2.join(" "));
        let valid = match self.table.get(&key) {
            Some(v) => *v,
            None => self.default.ok_or_else(|| JudgeError::NotInTable(format!("{} => {}", key.0, key.1)))?,
        };
        Ok(Verdict::single("table", valid, format!("table lookup: {}", u8::from(valid)), self.fingerprint.clone()))
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}
