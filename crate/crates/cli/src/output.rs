//! Deterministic output files, each carrying the same metadata block.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("pput ", env!("CARGO_PKG_VERSION"));

/// Conventions every consumer of the outputs needs to read numbers correctly.
pub const CONVENTIONS: [(&str, &str); 6] = [
    ("std", "sample standard deviation (n - 1); 0 for a single value"),
    ("profit", "EUR per MWh of storage capacity cycled, one cycle per day, clamped at 0"),
    ("efficiency", "charge = discharge = sqrt(round-trip efficiency)"),
    ("break_even", "(wear cost - energy profit) * average band utilization, EUR/MW"),
    ("profitable", "strictly greater than the threshold"),
    ("hours", "elapsed hours from local midnight; 23- and 25-hour days kept"),
];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct Metadata {
    pub config_sha256: String,
    /// Dataset label to SHA-256 of its CSV bytes.
    pub datasets: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(config_text: &str, wear_grid_override: Option<&str>) -> Self {
        let mut hashed = config_text.to_string();
        if let Some(g) = wear_grid_override {
            hashed.push_str("\n# --wear-grid ");
            hashed.push_str(g);
        }
        Metadata {
            config_sha256: sha256_hex(hashed.as_bytes()),
            datasets: BTreeMap::new(),
        }
    }

    pub fn csv_header(&self) -> String {
        let mut out = format!("# tool: {TOOL}\n# config_sha256: {}\n", self.config_sha256);
        for (label, hash) in &self.datasets {
            out.push_str(&format!("# dataset {label}: sha256 {hash}\n"));
        }
        for (k, v) in CONVENTIONS {
            out.push_str(&format!("# convention {k}: {v}\n"));
        }
        out
    }

    pub fn json(&self) -> Value {
        let conventions: BTreeMap<&str, &str> = CONVENTIONS.into_iter().collect();
        json!({
            "tool": TOOL,
            "config_sha256": self.config_sha256,
            "datasets": self.datasets,
            "conventions": conventions,
        })
    }
}

/// Writes files below one directory and remembers what was written.
pub struct Writer<'a> {
    pub dir: PathBuf,
    pub meta: &'a Metadata,
    pub written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(dir: &Path, meta: &'a Metadata) -> Self {
        Writer {
            dir: dir.to_path_buf(),
            meta,
            written: Vec::new(),
        }
    }

    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV with the metadata block as leading `#` comment lines.
    pub fn csv(&mut self, rel: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let mut text = self.meta.csv_header();
        text.push_str(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.put(rel, text.as_bytes())
    }

    /// Pretty JSON object with a leading `metadata` member.
    pub fn json<T: Serialize>(&mut self, rel: &str, body: &T) -> Result<PathBuf> {
        let mut doc = serde_json::Map::new();
        doc.insert("metadata".into(), self.meta.json());
        match serde_json::to_value(body)? {
            Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let mut bytes = serde_json::to_vec_pretty(&Value::Object(doc))?;
        bytes.push(b'\n');
        self.put(rel, &bytes)
    }
}

/// Optional number as a CSV cell.
pub fn cell(v: Option<impl ToString>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Rounds for presentation, e.g. thresholds to 0.1 EUR/MWh.
pub fn round_to(v: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (v * f).round() / f
}
