//! The JSON envelope every subcommand prints.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub subcommand: String,
    /// SHA-256 of the resolved configuration and the bytes of every input
    /// file, so it only changes when the inputs do.
    pub config_hash: String,
    pub version: String,
    pub results: Value,
    pub wall_time_seconds: f64,
}

/// Hashes a canonical (key-sorted) JSON rendering of `config` followed by
/// the digests of `files` in order.
pub fn config_hash<C: Serialize>(config: &C, files: &[&Path]) -> Result<String, CliError> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&canonical(serde_json::to_value(config)?))?);
    for f in files {
        h.update(Sha256::digest(std::fs::read(f).map_err(|e| CliError::io(f, e))?));
    }
    Ok(hex(&h.finalize()))
}

/// Rebuilds every object with its keys in sorted order, whatever map type
/// serde_json was compiled with.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonical(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        other => other,
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(&canonical(serde_json::to_value(value)?))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_config_only() {
        let a = config_hash(&serde_json::json!({"b": 1, "a": 2}), &[]).unwrap();
        let b = config_hash(&serde_json::json!({"a": 2, "b": 1}), &[]).unwrap();
        let c = config_hash(&serde_json::json!({"a": 3, "b": 1}), &[]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
