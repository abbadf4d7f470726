use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pput_core::MarketKind;
use serde::{Deserialize, Serialize};

use crate::AcquireError;

pub const DEFAULT_TOKEN_ENV: &str = "MARKET_API_TOKEN";
pub const DEFAULT_TOKEN_HEADER: &str = "x-api-key";

/// One hourly reserve quantity published as its own remote dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReserveField {
    BandUp,
    BandDown,
    EnergyUp,
    EnergyDown,
}

impl ReserveField {
    pub const ALL: [ReserveField; 4] = [
        ReserveField::BandUp,
        ReserveField::BandDown,
        ReserveField::EnergyUp,
        ReserveField::EnergyDown,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ReserveField::BandUp => "reserve_band_up",
            ReserveField::BandDown => "reserve_band_down",
            ReserveField::EnergyUp => "reserve_energy_up",
            ReserveField::EnergyDown => "reserve_energy_down",
        }
    }
}

/// Anything that can be fetched: a price series or a reserve quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dataset {
    Market(MarketKind),
    Reserve(ReserveField),
}

impl Dataset {
    /// Key used in indicator mappings and cache directory names.
    pub fn key(self) -> &'static str {
        match self {
            Dataset::Market(m) => m.slug(),
            Dataset::Reserve(f) => f.slug(),
        }
    }

    pub fn all() -> impl Iterator<Item = Dataset> {
        MarketKind::ALL
            .into_iter()
            .map(Dataset::Market)
            .chain(ReserveField::ALL.into_iter().map(Dataset::Reserve))
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Dataset {
    type Err = AcquireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(f) = ReserveField::ALL.into_iter().find(|f| f.slug() == s) {
            return Ok(Dataset::Reserve(f));
        }
        s.parse::<MarketKind>()
            .map(Dataset::Market)
            .map_err(|_| AcquireError::UnknownDataset(s.to_string()))
    }
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.to_string()
}

fn default_token_header() -> String {
    DEFAULT_TOKEN_HEADER.to_string()
}

fn default_timeout() -> u64 {
    60
}

/// Where and how to fetch. Indicator ids are configuration, not constants:
/// operators renumber datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSourceConfig {
    pub base_url: String,
    /// Dataset key (for example `day_ahead` or `reserve_band_up`) to remote id.
    #[serde(default)]
    pub indicators: BTreeMap<String, String>,
    /// Name of the environment variable holding the API token.
    #[serde(default = "default_token_env")]
    pub token_env: String,
    #[serde(default = "default_token_header")]
    pub token_header: String,
    #[serde(default)]
    pub require_token: bool,
    pub cache_dir: PathBuf,
    /// Pause between consecutive network requests.
    #[serde(default)]
    pub request_delay_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Zone to remote geography id, used to filter multi-zone payloads.
    #[serde(default)]
    pub geo_ids: BTreeMap<String, i64>,
}

impl DataSourceConfig {
    pub fn new(base_url: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        DataSourceConfig {
            base_url: base_url.into(),
            indicators: BTreeMap::new(),
            token_env: default_token_env(),
            token_header: default_token_header(),
            require_token: false,
            cache_dir: cache_dir.into(),
            request_delay_ms: 0,
            timeout_secs: default_timeout(),
            geo_ids: BTreeMap::new(),
        }
    }

    pub fn with_indicator(mut self, dataset: Dataset, id: impl Into<String>) -> Self {
        self.indicators.insert(dataset.key().to_string(), id.into());
        self
    }

    /// Rejects mapping keys that name no known dataset.
    pub fn validate(&self) -> Result<(), AcquireError> {
        for key in self.indicators.keys() {
            key.parse::<Dataset>()?;
        }
        Ok(())
    }

    pub fn indicator(&self, dataset: Dataset) -> Result<&str, AcquireError> {
        self.indicators
            .get(dataset.key())
            .map(String::as_str)
            .ok_or_else(|| AcquireError::Unmapped {
                dataset: dataset.key().to_string(),
                mapped: self.indicators.keys().cloned().collect(),
            })
    }

    /// Fails when any of `datasets` has no mapping. Call before any fetch.
    pub fn check_mapped(&self, datasets: &[Dataset]) -> Result<(), AcquireError> {
        datasets.iter().try_for_each(|&d| self.indicator(d).map(|_| ()))
    }

    pub fn geo_id(&self, zone: &str) -> Option<i64> {
        self.geo_ids.get(zone).copied()
    }
}
