//! Parsers for the two judge reply grammars.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no 'Final Judgment' line in response: {raw:?}")]
    MissingJudgment { raw: String },
    #[error("judgment value {value:?} is not 0 or 1 in response: {raw:?}")]
    BadJudgment { value: String, raw: String },
    #[error("response is not a JSON object: {raw:?}")]
    NotAnObject { raw: String },
    #[error("missing or invalid key {key:?} in response: {raw:?}")]
    MissingKey { key: &'static str, raw: String },
}

fn strip_decoration(s: &str) -> &str {
    s.trim().trim_start_matches(['*', '#', '"', '`', ' ']).trim()
}

/// Parses `Analysis: ...` / `Final Judgment: [0/1]` replies.
///
/// The last judgment line wins. Brackets, quotes and a trailing period
/// around the digit are tolerated. A missing analysis line yields an empty
/// analysis.
pub fn parse_first_turn_response(text: &str) -> Result<(String, bool), ParseError> {
    let mut analysis = None;
    let mut judgment = None;
    for line in text.lines() {
        let l = strip_decoration(line);
        let lower = l.to_ascii_lowercase();
        if analysis.is_none() && lower.starts_with("analysis") {
            if let Some((_, rest)) = l.split_once(':') {
                analysis = Some(rest.trim().trim_matches(['*', '"']).trim().to_owned());
            }
        } else if lower.starts_with("final judgment") || lower.starts_with("final judgement") {
            if let Some((_, rest)) = l.split_once(':') {
                judgment = Some(rest.to_owned());
            }
        }
    }
    let raw_value = judgment.ok_or_else(|| ParseError::MissingJudgment { raw: text.to_owned() })?;
    let value = raw_value.trim().trim_matches(|c: char| c == '[' || c == ']' || c == '*' || c == '"' || c == '.' || c.is_whitespace());
    let prediction = match value {
        "1" => true,
        "0" => false,
        _ => return Err(ParseError::BadJudgment { value: raw_value.trim().to_owned(), raw: text.to_owned() }),
    };
    Ok((analysis.unwrap_or_default(), prediction))
}

fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = match rest.find('\n') {
        Some(nl) => &rest[nl + 1..],
        None => rest,
    };
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Parses the two-key refinement object
/// `{"llm_analysis": ..., "llm_prediction": ...}`.
///
/// Markdown code fences are removed first, and prose around the object is
/// ignored. The prediction may be 0/1, a boolean or a numeric string.
pub fn parse_refinement_response(text: &str) -> Result<(String, bool), ParseError> {
    let body = strip_fences(text);
    let not_object = || ParseError::NotAnObject { raw: text.to_owned() };
    let start = body.find('{').ok_or_else(not_object)?;
    let end = body.rfind('}').ok_or_else(not_object)?;
    if end < start {
        return Err(not_object());
    }
    let value: Value = serde_json::from_str(&body[start..=end]).map_err(|_| not_object())?;
    let obj = value.as_object().ok_or_else(not_object)?;

    let analysis = obj
        .get("llm_analysis")
        .and_then(Value::as_str)
        .ok_or(ParseError::MissingKey { key: "llm_analysis", raw: text.to_owned() })?
        .trim()
        .to_owned();
    let bad_prediction = || ParseError::MissingKey { key: "llm_prediction", raw: text.to_owned() };
    let prediction = match obj.get("llm_prediction").ok_or_else(bad_prediction)? {
        Value::Bool(b) => *b,
        Value::Number(n) => match n.as_f64() {
            Some(1.0) => true,
            Some(0.0) => false,
            _ => return Err(bad_prediction()),
        },
        Value::String(s) => match s.trim() {
            "1" | "1.0" | "true" => true,
            "0" | "0.0" | "false" => false,
            _ => return Err(bad_prediction()),
        },
        _ => return Err(bad_prediction()),
    };
    Ok((analysis, prediction))
}
