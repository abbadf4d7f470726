//! HTTP acquisition of market data into a raw-first, immutable cache.
//!
//! Payloads are stored exactly as received, then converted to the canonical
//! CSV schemas read by `pput-core`. A repeated request with the same
//! fingerprint is answered from disk without touching the network.

mod cache;
mod config;
mod convert;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use chrono::{SecondsFormat, Utc};
use log::{debug, info, warn};
use pput_core::market_data::{read_price_csv, write_reserve_csv, ReserveHour, ReserveMarketSeries};
use pput_core::{DateRange, MarketKind, ValidationProfile};
use thiserror::Error;

pub use cache::{fingerprint, verify_cache, CacheEntry, CacheIssue, CacheMeta, EntryPaths, VerifyReport};
pub use config::{DataSourceConfig, Dataset, ReserveField, DEFAULT_TOKEN_ENV, DEFAULT_TOKEN_HEADER};
pub use convert::{convert_payload, Converted, GapWarning};

use cache::{read, read_meta, sha256_hex, write_atomic, write_meta};

const EXCERPT_LEN: usize = 300;

#[derive(Debug, Error)]
pub enum AcquireError {
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("no indicator mapped for dataset `{dataset}` (mapped: {mapped:?})")]
    Unmapped { dataset: String, mapped: Vec<String> },
    #[error("API token missing: environment variable {env} is not set")]
    AuthMissing { env: String },
    #[error("HTTP {status} from {url}: {excerpt}")]
    Http { url: String, status: u16, excerpt: String },
    #[error("request to {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("payload schema changed: {0}")]
    SchemaDrift(String),
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cache metadata {}: {message}", path.display())]
    Meta { path: PathBuf, message: String },
    #[error("reserve assembly: {0}")]
    Reserve(String),
}

/// Sequential fetcher. Requests are spaced by the configured delay.
pub struct Fetcher {
    config: DataSourceConfig,
    client: reqwest::blocking::Client,
    last_request: Option<Instant>,
    requests: usize,
}

impl Fetcher {
    pub fn new(config: DataSourceConfig) -> Result<Self, AcquireError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| AcquireError::Transport {
                url: config.base_url.clone(),
                message: e.to_string(),
            })?;
        Ok(Fetcher {
            config,
            client,
            last_request: None,
            requests: 0,
        })
    }

    pub fn config(&self) -> &DataSourceConfig {
        &self.config
    }

    /// Network requests issued so far.
    pub fn requests_made(&self) -> usize {
        self.requests
    }

    /// Fetches one dataset for one zone and span, or returns the cached entry.
    pub fn fetch(&mut self, dataset: Dataset, zone: &str, span: DateRange) -> Result<CacheEntry, AcquireError> {
        let indicator = self.config.indicator(dataset)?.to_string();
        let geo_id = self.config.geo_id(zone);
        let fp = fingerprint(&indicator, zone, geo_id, &span);
        let paths = EntryPaths::new(&self.config.cache_dir, zone, dataset.key(), &span);

        if let Some(entry) = self.from_cache(dataset, &fp, &paths)? {
            debug!("{dataset} {zone} {span}: cache hit");
            return Ok(entry);
        }

        let url = self.indicator_url(&indicator);
        let raw = self.get(&url, geo_id, &span)?;
        // raw first, so a conversion failure leaves the payload for inspection
        write_atomic(&paths.raw, &raw)?;
        let converted = convert_payload(&raw, geo_id, &span)?;
        write_atomic(&paths.csv, &converted.csv)?;
        for w in &converted.warnings {
            warn!("{dataset} {zone} {span}: {w:?}");
        }
        let meta = CacheMeta {
            fingerprint: fp,
            dataset: dataset.key().to_string(),
            indicator,
            zone: zone.to_string(),
            geo_id,
            start: span.start,
            end: span.end,
            url,
            retrieved_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            raw_sha256: sha256_hex(&raw),
            csv_sha256: sha256_hex(&converted.csv),
            rows: converted.rows,
            warnings: converted.warnings,
        };
        write_meta(&paths.meta, &meta)?;
        info!("{dataset} {zone} {span}: {} rows cached", meta.rows);
        Ok(CacheEntry {
            dataset,
            meta,
            paths,
            from_cache: false,
        })
    }

    /// Fetches several datasets. Every mapping is checked before the first request.
    pub fn fetch_all(&mut self, jobs: &[(Dataset, String, DateRange)]) -> Result<Vec<CacheEntry>, AcquireError> {
        let datasets: Vec<Dataset> = jobs.iter().map(|(d, _, _)| *d).collect();
        self.config.check_mapped(&datasets)?;
        jobs.iter()
            .map(|(d, zone, span)| self.fetch(*d, zone, *span))
            .collect()
    }

    /// Fetches the band price and the four reserve quantities, then joins
    /// them into one reserve CSV at `<cache>/<zone>/reserve/<start>_<end>.csv`.
    pub fn fetch_reserve(&mut self, zone: &str, span: DateRange) -> Result<ReserveAssembly, AcquireError> {
        let mut datasets = vec![Dataset::Market(MarketKind::SecondaryBandPrice)];
        datasets.extend(ReserveField::ALL.map(Dataset::Reserve));
        self.config.check_mapped(&datasets)?;
        let entries = datasets
            .iter()
            .map(|d| self.fetch(*d, zone, span))
            .collect::<Result<Vec<_>, _>>()?;
        let out = self.config.cache_dir.join(zone).join("reserve").join(format!("{}_{}.csv", span.start, span.end));
        assemble_reserve(zone, &entries, &out)
    }

    fn indicator_url(&self, indicator: &str) -> String {
        format!("{}/indicators/{}", self.config.base_url.trim_end_matches('/'), indicator)
    }

    /// Serves a finished entry from disk. A missing converted CSV is
    /// re-derived from the raw payload; anything else refetches.
    fn from_cache(&self, dataset: Dataset, fp: &str, paths: &EntryPaths) -> Result<Option<CacheEntry>, AcquireError> {
        if !paths.meta.is_file() || !paths.raw.is_file() {
            return Ok(None);
        }
        let meta = match read_meta(&paths.meta) {
            Ok(m) if m.fingerprint == fp => m,
            Ok(_) => return Ok(None),
            Err(e) => {
                warn!("ignoring unreadable cache metadata: {e}");
                return Ok(None);
            }
        };
        if !paths.csv.is_file() {
            let raw = read(&paths.raw)?;
            let converted = convert_payload(&raw, meta.geo_id, &meta.span())?;
            write_atomic(&paths.csv, &converted.csv)?;
        }
        Ok(Some(CacheEntry {
            dataset,
            meta,
            paths: paths.clone(),
            from_cache: true,
        }))
    }

    fn get(&mut self, url: &str, geo_id: Option<i64>, span: &DateRange) -> Result<Vec<u8>, AcquireError> {
        let token = std::env::var(&self.config.token_env).ok().filter(|t| !t.is_empty());
        if self.config.require_token && token.is_none() {
            return Err(AcquireError::AuthMissing {
                env: self.config.token_env.clone(),
            });
        }
        if let Some(last) = self.last_request {
            let delay = Duration::from_millis(self.config.request_delay_ms);
            let elapsed = last.elapsed();
            if elapsed < delay {
                thread::sleep(delay - elapsed);
            }
        }
        let mut query = vec![
            ("start_date".to_string(), format!("{}T00:00:00", span.start)),
            ("end_date".to_string(), format!("{}T23:59:59", span.end)),
            ("time_trunc".to_string(), "hour".to_string()),
        ];
        if let Some(g) = geo_id {
            query.push(("geo_ids[]".to_string(), g.to_string()));
        }
        let mut req = self.client.get(url).query(&query).header("Accept", "application/json");
        if let Some(t) = token {
            req = req.header(self.config.token_header.as_str(), t);
        }
        self.last_request = Some(Instant::now());
        self.requests += 1;
        let transport = |e: reqwest::Error| AcquireError::Transport {
            url: url.to_string(),
            message: e.to_string(),
        };
        let resp = req.send().map_err(transport)?;
        let status = resp.status();
        let body = resp.bytes().map_err(transport)?;
        if !status.is_success() {
            let text = String::from_utf8_lossy(&body);
            return Err(AcquireError::Http {
                url: url.to_string(),
                status: status.as_u16(),
                excerpt: text.chars().take(EXCERPT_LEN).collect(),
            });
        }
        Ok(body.to_vec())
    }
}

/// Convenience wrapper for a single request.
pub fn fetch(config: &DataSourceConfig, dataset: Dataset, zone: &str, span: DateRange) -> Result<CacheEntry, AcquireError> {
    Fetcher::new(config.clone())?.fetch(dataset, zone, span)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReserveAssembly {
    pub path: PathBuf,
    pub hours: usize,
    /// Hours present in some components but not all; left out.
    pub dropped_hours: usize,
    /// Downward values published as positive magnitudes and negated.
    pub coerced_values: usize,
}

fn component(entry: &CacheEntry) -> Result<BTreeMap<chrono::DateTime<chrono::FixedOffset>, f64>, AcquireError> {
    let bytes = read(entry.csv_path())?;
    // the parser needs a market kind; band price is the one non-energy kind and is never capped
    let parsed = read_price_csv(bytes.as_slice(), MarketKind::SecondaryBandPrice, &entry.meta.zone, ValidationProfile::Uncapped)
        .map_err(|e| AcquireError::Reserve(format!("{}: {e}", entry.csv_path().display())))?;
    Ok(parsed.series.points().iter().map(|p| (p.hour_start, p.value)).collect())
}

/// Joins band price, bands and activated energies on the hour.
pub fn assemble_reserve(zone: &str, entries: &[CacheEntry], out: &Path) -> Result<ReserveAssembly, AcquireError> {
    let find = |d: Dataset| {
        entries
            .iter()
            .find(|e| e.dataset == d)
            .ok_or_else(|| AcquireError::Reserve(format!("missing component {d}")))
    };
    let price = component(find(Dataset::Market(MarketKind::SecondaryBandPrice))?)?;
    let [band_up, band_down, energy_up, energy_down] = ReserveField::ALL.map(|f| find(Dataset::Reserve(f)).and_then(component));
    let (band_up, band_down, energy_up, energy_down) = (band_up?, band_down?, energy_up?, energy_down?);

    let mut all_hours: Vec<_> = price
        .keys()
        .chain(band_up.keys())
        .chain(band_down.keys())
        .chain(energy_up.keys())
        .chain(energy_down.keys())
        .copied()
        .collect();
    all_hours.sort();
    all_hours.dedup();

    let mut coerced = 0;
    let mut negative = |v: f64| {
        if v > 0.0 {
            coerced += 1;
            -v
        } else {
            v
        }
    };
    let mut hours = Vec::new();
    for t in &all_hours {
        let (Some(&p), Some(&bu), Some(&bd), Some(&eu), Some(&ed)) =
            (price.get(t), band_up.get(t), band_down.get(t), energy_up.get(t), energy_down.get(t))
        else {
            continue;
        };
        hours.push(ReserveHour {
            hour_start: *t,
            band_price: p,
            band_price_down: None,
            band_up: bu,
            band_down: negative(bd),
            energy_up: eu,
            energy_down: negative(ed),
        });
    }
    let dropped = all_hours.len() - hours.len();
    if dropped > 0 {
        warn!("reserve {zone}: {dropped} hours lack one or more components and were dropped");
    }
    let series = ReserveMarketSeries::new(zone, hours).map_err(|e| AcquireError::Reserve(e.to_string()))?;
    let mut bytes = Vec::new();
    write_reserve_csv(&series, &mut bytes).map_err(|source| AcquireError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    write_atomic(out, &bytes)?;
    Ok(ReserveAssembly {
        path: out.to_path_buf(),
        hours: series.len(),
        dropped_hours: dropped,
        coerced_values: coerced,
    })
}
