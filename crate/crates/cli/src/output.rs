use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Format;

/// A failure turned into an exit code and a JSON error object.
#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: "usage", message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError { kind: "input", message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        if self.kind == "unsupported" {
            3
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl From<frameport::Error> for CliError {
    fn from(e: frameport::Error) -> Self {
        let kind = match e {
            frameport::Error::Unsupported(_) => "unsupported",
            _ => "validation",
        };
        CliError { kind, message: e.to_string() }
    }
}

/// Raw input file: its bytes' SHA-256 and the parsed JSON tree.
pub struct Input {
    pub path: String,
    pub sha256: String,
    pub value: Value,
}

impl Input {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let value = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Ok(Input {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            value,
        })
    }

    /// "measure", "matrix" or "coupling", by the keys present.
    pub fn kind(&self) -> &'static str {
        let has = |k: &str| self.value.get(k).is_some();
        if has("atoms") {
            "measure"
        } else if has("rows") {
            "matrix"
        } else if has("pairs") {
            "coupling"
        } else {
            "unknown"
        }
    }

    pub fn parse<T: serde::de::DeserializeOwned>(&self, what: &str) -> Result<T, CliError> {
        if self.kind() != what {
            return Err(CliError::input(format!("{}: expected a {what}, found {}", self.path, self.kind())));
        }
        T::deserialize(&self.value).map_err(|e| CliError::input(format!("{}: {e}", self.path)))
    }

    pub fn summary(&self) -> Value {
        json!({ "path": self.path, "kind": self.kind(), "sha256": self.sha256 })
    }
}

pub fn emit(report: &Value, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut cols = Vec::new();
            flatten("", report, &mut cols);
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::input(e.to_string());
            w.write_record(cols.iter().map(|(k, _)| k)).map_err(io)?;
            w.write_record(cols.iter().map(|(_, v)| v)).map_err(io)?;
            let bytes = w.into_inner().map_err(|e| CliError::input(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv is utf-8"))
        }
    }
}

/// Leaves of a JSON tree as `(dotted.path, text)`, arrays indexed from 0,
/// so matrices come out row-major.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&key(k), child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), child, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}
