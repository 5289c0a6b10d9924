//! Result persistence: a deterministic JSON writer, the run envelope and
//! CSV export of the plot series.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Writes `v` with every float in 17-significant-digit scientific notation
/// and object keys in sorted order, so equal values give equal bytes.
pub fn to_canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize, out: &mut String| {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', 2 * d));
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                let _ = write!(out, "{x:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            // short numeric rows stay on one line
            let flat = a.len() <= 8 && a.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if flat {
                        out.push(' ');
                    }
                }
                if !flat {
                    pad(depth + 1, out);
                }
                write_value(x, depth + 1, out);
            }
            if !flat {
                pad(depth, out);
            }
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                pad(depth + 1, out);
                out.push_str(&serde_json::to_string(k).expect("key encodes"));
                out.push_str(": ");
                write_value(&m[*k], depth + 1, out);
            }
            pad(depth, out);
            out.push('}');
        }
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Internal(format!("serialization failed: {e}")))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<="` or `">="` relative to the threshold.
    pub comparison: String,
    pub passed: bool,
}

impl Certificate {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Certificate { name: name.into(), value, threshold, comparison: "<=".into(), passed: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Certificate { name: name.into(), value, threshold, comparison: ">=".into(), passed: value >= threshold }
    }
}

/// A plot series stored in the payload; `label` separates several series of
/// one kind, such as bound fits for different source types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub kind: String,
    pub label: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub const SERIES_KINDS: [&str; 3] = ["tube-norm-series", "bound-fit", "remainder-scan"];

pub fn series_columns(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "tube-norm-series" => &["t_j", "norm_sq"],
        "bound-fit" => &["rho", "ratio", "log_gap"],
        "remainder-scan" => &["epsilon", "remainder_norm"],
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub payload: String,
    pub payload_sha256: String,
    pub series: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub task: String,
    pub version: String,
    pub seed: u64,
    pub inputs_digest: String,
    pub outputs: Outputs,
    pub certificates: Vec<Certificate>,
    pub timing: Timing,
}

impl Envelope {
    pub fn all_passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

pub fn read_envelope(path: &Path) -> Result<(Envelope, PathBuf), CliError> {
    let path = if path.is_dir() { path.join("envelope.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Invalid(format!("cannot read envelope {}: {e}", path.display())))?;
    let env: Envelope =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((env, dir))
}

/// Finds the series of `kind` (and `label`, if given) in a payload and
/// writes it as a headered CSV.
pub fn export_series(payload: &Value, kind: &str, label: Option<&str>, out: &Path) -> Result<usize, CliError> {
    let Some(cols) = series_columns(kind) else {
        return Err(CliError::Invalid(format!("unknown series kind {kind:?}; expected one of {SERIES_KINDS:?}")));
    };
    let all: Vec<Series> = match payload.get("series") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Invalid(format!("malformed series: {e}")))?,
        None => Vec::new(),
    };
    let found = all
        .into_iter()
        .find(|s| s.kind == kind && label.is_none_or(|l| s.label == l))
        .ok_or_else(|| CliError::MissingSeries(format!("{kind}{}", label.map(|l| format!(" ({l})")).unwrap_or_default())))?;
    // only the contract columns are exported, in contract order
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| {
            found
                .columns
                .iter()
                .position(|x| x == c)
                .ok_or_else(|| CliError::Invalid(format!("series {kind} lacks column {c}")))
        })
        .collect::<Result<_, _>>()?;
    let mut w = csv::Writer::from_path(out).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", out.display())))?;
    let header: Vec<&str> = idx.iter().map(|&i| found.columns[i].as_str()).collect();
    let io = |e: csv::Error| CliError::Internal(format!("csv: {e}"));
    w.write_record(&header).map_err(io)?;
    for row in &found.rows {
        w.write_record(idx.iter().map(|&i| format!("{:.16e}", row[i]))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Internal(format!("csv: {e}")))?;
    Ok(found.rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_json_is_stable_and_parses() {
        let a = json!({"b": [0.1, 1e-300, 2], "a": {"y": true, "x": null}, "c": "s\"q"});
        let text = to_canonical_json(&a);
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn digits_round_trip() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, 6.02214076e23, -2.5e-17] {
            let s = format!("{x:.16e}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
