//! On-disk cache layout and verification.
//!
//! ```text
//! <cache_dir>/<zone>/<dataset>/<start>_<end>.raw        payload as received
//! <cache_dir>/<zone>/<dataset>/<start>_<end>.csv        converted from .raw
//! <cache_dir>/<zone>/<dataset>/<start>_<end>.meta.json  fingerprint, hashes, warnings
//! ```
//!
//! The meta file is written last, so its presence marks a finished entry.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use pput_core::DateRange;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::convert::{convert_payload, GapWarning};
use crate::{AcquireError, DataSourceConfig, Dataset};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Stable key for one request.
pub fn fingerprint(indicator: &str, zone: &str, geo_id: Option<i64>, span: &DateRange) -> String {
    let geo = geo_id.map(|g| g.to_string()).unwrap_or_default();
    sha256_hex(format!("indicator={indicator}\nzone={zone}\ngeo={geo}\nstart={}\nend={}\n", span.start, span.end).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryPaths {
    pub raw: PathBuf,
    pub csv: PathBuf,
    pub meta: PathBuf,
}

impl EntryPaths {
    pub fn new(cache_dir: &Path, zone: &str, dataset_key: &str, span: &DateRange) -> Self {
        let dir = cache_dir.join(zone).join(dataset_key);
        let stem = format!("{}_{}", span.start, span.end);
        EntryPaths {
            raw: dir.join(format!("{stem}.raw")),
            csv: dir.join(format!("{stem}.csv")),
            meta: dir.join(format!("{stem}.meta.json")),
        }
    }

    fn from_meta(meta: &Path) -> Self {
        let name = meta.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let stem = name.trim_end_matches(".meta.json");
        let dir = meta.parent().unwrap_or(Path::new("."));
        EntryPaths {
            raw: dir.join(format!("{stem}.raw")),
            csv: dir.join(format!("{stem}.csv")),
            meta: meta.to_path_buf(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub fingerprint: String,
    pub dataset: String,
    pub indicator: String,
    pub zone: String,
    pub geo_id: Option<i64>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub url: String,
    /// RFC 3339, UTC.
    pub retrieved_at: String,
    pub raw_sha256: String,
    pub csv_sha256: String,
    pub rows: usize,
    pub warnings: Vec<GapWarning>,
}

impl CacheMeta {
    pub fn span(&self) -> DateRange {
        DateRange::new(self.start, self.end)
    }
}

/// A finished cache entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub dataset: Dataset,
    pub meta: CacheMeta,
    pub paths: EntryPaths,
    /// False when this call went to the network.
    pub from_cache: bool,
}

impl CacheEntry {
    pub fn fingerprint(&self) -> &str {
        &self.meta.fingerprint
    }

    pub fn csv_path(&self) -> &Path {
        &self.paths.csv
    }

    pub fn raw_payload(&self) -> Result<Vec<u8>, AcquireError> {
        read(&self.paths.raw)
    }

    pub fn warnings(&self) -> &[GapWarning] {
        &self.meta.warnings
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> AcquireError + '_ {
    move |source| AcquireError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>, AcquireError> {
    fs::read(path).map_err(io_err(path))
}

/// Writes through a sibling temp file and renames into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), AcquireError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("entry");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub(crate) fn read_meta(path: &Path) -> Result<CacheMeta, AcquireError> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| AcquireError::Meta {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub(crate) fn write_meta(path: &Path, meta: &CacheMeta) -> Result<(), AcquireError> {
    let mut bytes = serde_json::to_vec_pretty(meta).expect("meta serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CacheIssue {
    pub entry: PathBuf,
    pub reason: String,
}

/// Outcome of [`verify_cache`]. Problems are listed, never fatal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub verified: Vec<PathBuf>,
    /// Converted CSV differs from what the raw payload converts to.
    pub mismatches: Vec<CacheIssue>,
    /// Raw payload missing, so nothing to re-derive from.
    pub unverifiable: Vec<CacheIssue>,
    /// Unreadable metadata or a raw payload that no longer matches its hash or converts.
    pub corrupt: Vec<CacheIssue>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.unverifiable.is_empty() && self.corrupt.is_empty()
    }
}

/// Re-derives every converted CSV from its raw payload and compares bytes.
pub fn verify_cache(config: &DataSourceConfig) -> Result<VerifyReport, AcquireError> {
    let root = &config.cache_dir;
    if !root.is_dir() {
        return Err(AcquireError::Io {
            path: root.clone(),
            source: io::Error::new(io::ErrorKind::NotFound, "cache directory does not exist"),
        });
    }
    let mut metas: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.file_name().to_string_lossy().ends_with(".meta.json"))
        .map(|e| e.into_path())
        .collect();
    metas.sort();

    let mut report = VerifyReport::default();
    for meta_path in metas {
        let paths = EntryPaths::from_meta(&meta_path);
        let issue = |reason: String| CacheIssue {
            entry: meta_path.clone(),
            reason,
        };
        let meta = match read_meta(&meta_path) {
            Ok(m) => m,
            Err(e) => {
                report.corrupt.push(issue(e.to_string()));
                continue;
            }
        };
        let raw = match fs::read(&paths.raw) {
            Ok(r) => r,
            Err(e) => {
                report.unverifiable.push(issue(format!("raw payload {}: {e}", paths.raw.display())));
                continue;
            }
        };
        if sha256_hex(&raw) != meta.raw_sha256 {
            report.corrupt.push(issue("raw payload hash differs from metadata".into()));
            continue;
        }
        let converted = match convert_payload(&raw, meta.geo_id, &meta.span()) {
            Ok(c) => c,
            Err(e) => {
                report.corrupt.push(issue(format!("raw payload no longer converts: {e}")));
                continue;
            }
        };
        match fs::read(&paths.csv) {
            Ok(csv) if csv == converted.csv => report.verified.push(meta_path),
            Ok(_) => report.mismatches.push(issue(format!("{} differs from re-derived CSV", paths.csv.display()))),
            Err(e) => report.mismatches.push(issue(format!("converted CSV {}: {e}", paths.csv.display()))),
        }
    }
    Ok(report)
}
