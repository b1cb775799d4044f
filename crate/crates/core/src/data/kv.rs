//! `key = value` text with `#` comments.

use super::DataError;

/// Non-empty `(line number, key, value)` entries in file order.
pub fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>, DataError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| DataError::Syntax {
            line: n + 1,
            reason: format!("expected `key = value`, found {line:?}"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(DataError::Syntax {
                line: n + 1,
                reason: "empty key".into(),
            });
        }
        out.push((n + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub fn bad_value(line: usize, key: &str, value: &str) -> DataError {
    DataError::Syntax {
        line,
        reason: format!("bad value {value:?} for {key}"),
    }
}

pub fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, DataError> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(bad_value(line, key, value)),
    }
}
