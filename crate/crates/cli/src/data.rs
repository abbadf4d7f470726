//! Resolving and loading the datasets a config declares.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use log::warn;
use pput_acquire::{Dataset, Fetcher};
use pput_core::market_data::{ingest_csv, ingest_reserve_csv, IngestReport};
use pput_core::{HourlyPriceSeries, MarketKind, ReserveMarketSeries};

use crate::config::{DatasetKind, DatasetSpec, RunConfig, Source};
use crate::output::sha256_hex;

/// Local CSV path for a dataset, fetching into the cache when needed.
/// Cached entries are served without network access.
pub fn resolve_path(config: &RunConfig, spec: &DatasetSpec, fetcher: &mut Option<Fetcher>) -> Result<PathBuf> {
    let span = match &spec.source {
        Source::Path(p) => return Ok(p.clone()),
        Source::Fetch(span) => *span,
    };
    if fetcher.is_none() {
        let source = config.source.clone().ok_or_else(|| anyhow!("no [source] configured"))?;
        *fetcher = Some(Fetcher::new(source)?);
    }
    let f = fetcher.as_mut().expect("fetcher initialized");
    match spec.kind {
        DatasetKind::Market(m) => {
            let entry = f.fetch(Dataset::Market(m), &spec.zone, span)?;
            Ok(entry.csv_path().to_path_buf())
        }
        DatasetKind::Reserve => Ok(f.fetch_reserve(&spec.zone, span)?.path),
    }
}

#[derive(Debug)]
pub enum Loaded {
    Prices(HourlyPriceSeries),
    Reserve(ReserveMarketSeries),
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub spec: DatasetSpec,
    pub path: PathBuf,
    pub sha256: String,
    pub data: Loaded,
    pub report: IngestReport,
}

/// Reads and validates one dataset. Errors name the file.
pub fn load_one(config: &RunConfig, spec: &DatasetSpec, path: PathBuf) -> Result<LoadedDataset> {
    let bytes = std::fs::read(&path).with_context(|| format!("{}: cannot read {}", spec.label(), path.display()))?;
    let sha256 = sha256_hex(&bytes);
    let (data, report) = match spec.kind {
        DatasetKind::Market(m) => {
            let got = ingest_csv(&path, m, &spec.zone, config.profile(&spec.zone))
                .with_context(|| format!("{}: {}", spec.label(), path.display()))?;
            (Loaded::Prices(got.series), got.report)
        }
        DatasetKind::Reserve => {
            let got = ingest_reserve_csv(&path, &spec.zone).with_context(|| format!("{}: {}", spec.label(), path.display()))?;
            (Loaded::Reserve(got.series), got.report)
        }
    };
    for w in &report.warnings {
        warn!("{}: row {}: {:?}", spec.label(), w.row, w.kind);
    }
    Ok(LoadedDataset {
        spec: spec.clone(),
        path,
        sha256,
        data,
        report,
    })
}

/// Every dataset of a run, indexed by zone and kind.
#[derive(Debug, Default)]
pub struct DataSet {
    pub prices: BTreeMap<(String, MarketKind), HourlyPriceSeries>,
    pub reserve: BTreeMap<String, ReserveMarketSeries>,
    /// Label to SHA-256 of the file bytes.
    pub fingerprints: BTreeMap<String, String>,
}

impl DataSet {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let mut fetcher = None;
        let mut out = DataSet::default();
        for spec in &config.datasets {
            let path = resolve_path(config, spec, &mut fetcher)?;
            let d = load_one(config, spec, path)?;
            out.fingerprints.insert(spec.label(), d.sha256);
            match d.data {
                Loaded::Prices(s) => {
                    out.prices.insert((spec.zone.clone(), s.market()), s);
                }
                Loaded::Reserve(r) => {
                    out.reserve.insert(spec.zone.clone(), r);
                }
            }
        }
        Ok(out)
    }

    pub fn price(&self, zone: &str, market: MarketKind) -> Option<&HourlyPriceSeries> {
        self.prices.get(&(zone.to_string(), market))
    }
}
