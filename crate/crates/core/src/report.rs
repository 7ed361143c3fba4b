//! Run reports and their canonical JSON form.
//!
//! Canonical output has sorted object keys, two-space indentation and every
//! non-integer number written as `%.12e`, so two runs on the same input, seed
//! and tolerance produce identical bytes. Non-finite numbers become `null`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Version recorded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Why a run did not reach a verdict.
#[derive(Clone, Debug, Serialize)]
pub struct RunFailure {
    pub stage: String,
    pub kind: String,
    pub message: String,
    pub witnesses: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Value>,
    pub stages: Value,
    pub verdict: bool,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<RunFailure>,
    /// Only filled in on request, since it breaks byte-for-byte reproducibility.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, tol: f64) -> Self {
        Self {
            command: command.into(),
            tool_version: TOOL_VERSION.into(),
            seed,
            tol,
            label: None,
            input_digest: None,
            hypotheses: None,
            stages: Value::Object(Default::default()),
            verdict: false,
            exit_code: 0,
            failure: None,
            wall_clock_seconds: None,
        }
    }

    /// Adds a named stage output.
    pub fn stage(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("stage outputs serialize");
        if let Value::Object(map) = &mut self.stages {
            map.insert(name.into(), v);
        }
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }
}

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical JSON text of any serializable value, with a trailing newline.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes");
    let mut out = String::new();
    emit(&v, 0, &mut out);
    out.push('\n');
    out
}

fn emit(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                out.push_str(&n.to_string());
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    out.push_str(&format!("{f:.12e}"));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            if items.iter().all(|i| !i.is_array() && !i.is_object()) {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    emit(item, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(indent + 2, out);
                emit(item, indent + 2, out);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                emit(&map[*key], indent + 2, out);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

/// Writes `text` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Writes the canonical form of `rr` to `path`.
pub fn write_report(rr: &RunReport, path: &Path) -> std::io::Result<()> {
    write_atomic(path, &rr.to_canonical_json())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_form_sorts_and_formats() {
        let v = json!({"b": 1.5, "a": [1, 2], "c": {"z": null, "y": "q\"uote"}, "d": [{"k": 0.1}]});
        let text = canonical_json(&v);
        assert_eq!(
            text,
            "{\n  \"a\": [1, 2],\n  \"b\": 1.500000000000e0,\n  \"c\": {\n    \"y\": \"q\\\"uote\",\n    \"z\": null\n  },\n  \"d\": [\n    {\n      \"k\": 1.000000000000e-1\n    }\n  ]\n}\n"
        );
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"], json!(1.5));
    }

    #[test]
    fn non_finite_numbers_become_null() {
        let text = canonical_json(&vec![f64::INFINITY, 2.0]);
        assert_eq!(text, "[null, 2.000000000000e0]\n");
    }

    #[test]
    fn report_fields() {
        let mut rr = RunReport::new("validate", 5, 1e-9);
        rr.stage("x", json!({"dim": 9}));
        rr.verdict = true;
        let v: Value = serde_json::from_str(&rr.to_canonical_json()).unwrap();
        assert_eq!(v["verdict"], json!(true));
        assert_eq!(v["stages"]["x"]["dim"], json!(9));
        assert!(v.get("wall_clock_seconds").is_none());
        assert_eq!(rr.to_canonical_json(), rr.clone().to_canonical_json());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(digest(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
