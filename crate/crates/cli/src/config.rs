//! Run configuration: one TOML file describes a complete, reproducible run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use pput_acquire::DataSourceConfig;
use pput_core::arbitrage::{Coverage, ImbalanceRole};
use pput_core::reserve::EnergyMode;
use pput_core::{ApplicationKind, BatteryParams, DateRange, MarketKind, ValidationProfile, WearGrid};
use serde::Deserialize;

/// Markets traded alongside the day-ahead in the multi-service basket by default.
pub const DEFAULT_ANCILLARY: [MarketKind; 6] = [
    MarketKind::DeviationMgmtUp,
    MarketKind::DeviationMgmtDown,
    MarketKind::TertiaryUp,
    MarketKind::TertiaryDown,
    MarketKind::ImbalanceUp,
    MarketKind::ImbalanceDown,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DatasetKind {
    Market(MarketKind),
    Reserve,
}

impl DatasetKind {
    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("reserve") {
            return Ok(DatasetKind::Reserve);
        }
        s.parse::<MarketKind>()
            .map(DatasetKind::Market)
            .map_err(|_| anyhow!("unknown dataset kind `{s}`"))
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetKind::Market(m) => f.write_str(m.name()),
            DatasetKind::Reserve => f.write_str("Reserve"),
        }
    }
}

/// A calendar year or an explicit inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PeriodSpec {
    Year(i32),
    Range { start: NaiveDate, end: NaiveDate },
}

impl PeriodSpec {
    pub fn range(self) -> Result<DateRange> {
        match self {
            PeriodSpec::Year(y) => Ok(DateRange::year(y)),
            PeriodSpec::Range { start, end } if start <= end => Ok(DateRange::new(start, end)),
            PeriodSpec::Range { start, end } => bail!("period start {start} is after end {end}"),
        }
    }
}

/// Label for a period: the year when it is exactly one, else `start..end`.
pub fn period_label(p: &DateRange) -> String {
    use chrono::Datelike;
    if *p == DateRange::year(p.start.year()) {
        p.start.year().to_string()
    } else {
        p.to_string()
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchSpec {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    market: String,
    zone: String,
    path: Option<PathBuf>,
    fetch: Option<FetchSpec>,
}

#[derive(Debug, Clone)]
pub enum Source {
    Path(PathBuf),
    Fetch(DateRange),
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub zone: String,
    pub source: Source,
}

impl DatasetSpec {
    pub fn label(&self) -> String {
        format!("{}/{}", self.zone, self.kind)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArbitrage {
    ancillary: Option<Vec<String>>,
    #[serde(default)]
    imbalance_role: ImbalanceRole,
    #[serde(default)]
    coverage: Coverage,
    period: Option<PeriodSpec>,
}

#[derive(Debug, Clone)]
pub struct ArbitrageSection {
    pub ancillary: Vec<MarketKind>,
    pub imbalance_role: ImbalanceRole,
    pub coverage: Coverage,
    pub period: Option<DateRange>,
}

/// Published annual aggregates, evaluated without hourly data.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateSpec {
    pub period: PeriodSpec,
    pub band_up: f64,
    pub energy_up: f64,
    pub band_down: f64,
    pub energy_down: f64,
    pub day_ahead: f64,
    pub secondary_up: f64,
    pub secondary_down: f64,
}

fn default_modes() -> Vec<EnergyMode> {
    vec![EnergyMode::Table, EnergyMode::Hourly]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReserve {
    periods: Option<Vec<PeriodSpec>>,
    #[serde(default = "default_modes")]
    modes: Vec<EnergyMode>,
    #[serde(default)]
    aggregates: Vec<AggregateSpec>,
}

#[derive(Debug, Clone)]
pub struct ReserveSection {
    /// Periods to evaluate; `None` means every whole year in the data.
    pub periods: Option<Vec<DateRange>>,
    pub modes: Vec<EnergyMode>,
    pub aggregates: Vec<AggregateSpec>,
}

fn default_target() -> f64 {
    0.2
}

fn default_applications() -> Vec<String> {
    ApplicationKind::ALL.iter().map(|k| k.name().to_string()).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(default = "default_applications")]
    applications: Vec<String>,
    #[serde(default = "default_target")]
    target: f64,
    wear_grid: Option<String>,
    period: Option<PeriodSpec>,
    /// Energy term for reserve curves: `table` (period means) or `hourly`.
    #[serde(default = "default_sweep_energy")]
    energy: EnergyMode,
    zones: Option<Vec<String>>,
}

fn default_sweep_energy() -> EnergyMode {
    EnergyMode::Hourly
}

#[derive(Debug, Clone)]
pub struct SweepSection {
    pub applications: Vec<ApplicationKind>,
    pub target: f64,
    pub wear_grid: WearGrid,
    pub period: Option<DateRange>,
    pub energy: EnergyMode,
    /// Restrict to these zones; all zones with data otherwise.
    pub zones: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    /// Markets summarized; default every price dataset.
    pub markets: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    battery: BatteryParams,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    profiles: BTreeMap<String, String>,
    #[serde(default)]
    datasets: Vec<RawDataset>,
    source: Option<DataSourceConfig>,
    arbitrage: Option<RawArbitrage>,
    reserve: Option<RawReserve>,
    sweep: Option<RawSweep>,
    stats: Option<StatsSection>,
}

/// Validated configuration with paths resolved against the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub battery: BatteryParams,
    pub output_dir: PathBuf,
    pub profiles: BTreeMap<String, ValidationProfile>,
    pub datasets: Vec<DatasetSpec>,
    pub source: Option<DataSourceConfig>,
    pub arbitrage: Option<ArbitrageSection>,
    pub reserve: Option<ReserveSection>,
    pub sweep: Option<SweepSection>,
    pub stats: Option<StatsSection>,
    /// Exact bytes of the config file, for hashing.
    pub text: String,
}

impl RunConfig {
    pub fn load(path: &Path, wear_grid_override: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, wear_grid_override).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path, wear_grid_override: Option<&str>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let mut profiles = BTreeMap::new();
        for (zone, name) in raw.profiles {
            let p = name.parse::<ValidationProfile>().map_err(|e| anyhow!("profile for {zone}: {e}"))?;
            profiles.insert(zone, p);
        }

        let mut datasets = Vec::new();
        let mut seen = BTreeSet::new();
        for d in raw.datasets {
            let kind = DatasetKind::parse(&d.market)?;
            let source = match (d.path, d.fetch) {
                (Some(p), None) => Source::Path(resolve(p)),
                (None, Some(f)) if f.start <= f.end => Source::Fetch(DateRange::new(f.start, f.end)),
                (None, Some(f)) => bail!("dataset {}/{kind}: fetch start {} is after end {}", d.zone, f.start, f.end),
                _ => bail!("dataset {}/{kind}: give exactly one of `path` or `fetch`", d.zone),
            };
            if !seen.insert((d.zone.clone(), kind)) {
                bail!("dataset {}/{kind} declared twice", d.zone);
            }
            datasets.push(DatasetSpec {
                kind,
                zone: d.zone,
                source,
            });
        }
        let needs_source = datasets.iter().any(|d| matches!(d.source, Source::Fetch(_)));
        let source = raw.source.map(|mut s| {
            s.cache_dir = resolve(s.cache_dir);
            s
        });
        if needs_source && source.is_none() {
            bail!("datasets use `fetch` but no [source] section is configured");
        }
        if let Some(s) = &source {
            s.validate()?;
        }

        let arbitrage = raw
            .arbitrage
            .map(|a| -> Result<ArbitrageSection> {
                let ancillary = match a.ancillary {
                    Some(names) => names
                        .iter()
                        .map(|n| n.parse::<MarketKind>().map_err(|_| anyhow!("unknown ancillary market `{n}`")))
                        .collect::<Result<Vec<_>>>()?,
                    None => DEFAULT_ANCILLARY.to_vec(),
                };
                if ancillary.contains(&MarketKind::DayAhead) {
                    bail!("ancillary list must not contain DayAhead");
                }
                Ok(ArbitrageSection {
                    ancillary,
                    imbalance_role: a.imbalance_role,
                    coverage: a.coverage,
                    period: a.period.map(PeriodSpec::range).transpose()?,
                })
            })
            .transpose()?;

        let reserve = raw
            .reserve
            .map(|r| -> Result<ReserveSection> {
                if r.modes.is_empty() {
                    bail!("reserve.modes is empty");
                }
                for a in &r.aggregates {
                    a.period.range()?;
                }
                Ok(ReserveSection {
                    periods: r
                        .periods
                        .map(|ps| ps.into_iter().map(PeriodSpec::range).collect::<Result<Vec<_>>>())
                        .transpose()?,
                    modes: r.modes,
                    aggregates: r.aggregates,
                })
            })
            .transpose()?;

        let sweep = raw
            .sweep
            .map(|s| -> Result<SweepSection> {
                let applications = s
                    .applications
                    .iter()
                    .map(|a| a.parse::<ApplicationKind>().map_err(|e| anyhow!(e)))
                    .collect::<Result<Vec<_>>>()?;
                let grid_spec = wear_grid_override.map(str::to_string).or(s.wear_grid);
                let wear_grid = match grid_spec {
                    Some(g) => WearGrid::parse(&g)?,
                    None => WearGrid::default_grid(),
                };
                if !(s.target > 0.0) {
                    bail!("sweep.target must be positive, got {}", s.target);
                }
                Ok(SweepSection {
                    applications,
                    target: s.target,
                    wear_grid,
                    period: s.period.map(PeriodSpec::range).transpose()?,
                    energy: s.energy,
                    zones: s.zones,
                })
            })
            .transpose()?;
        if sweep.is_none() {
            if let Some(g) = wear_grid_override {
                WearGrid::parse(g)?;
            }
        }

        let config = RunConfig {
            battery: raw.battery,
            output_dir: resolve(raw.output_dir.unwrap_or_else(|| PathBuf::from("out"))),
            profiles,
            datasets,
            source,
            arbitrage,
            reserve,
            sweep,
            stats: raw.stats,
            text: text.to_string(),
        };
        config.check_required()?;
        Ok(config)
    }

    pub fn profile(&self, zone: &str) -> ValidationProfile {
        self.profiles.get(zone).copied().unwrap_or_else(|| ValidationProfile::for_zone(zone))
    }

    pub fn has(&self, zone: &str, kind: DatasetKind) -> bool {
        self.datasets.iter().any(|d| d.zone == zone && d.kind == kind)
    }

    /// Zones in declaration order.
    pub fn zones(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for d in &self.datasets {
            if !out.contains(&d.zone) {
                out.push(d.zone.clone());
            }
        }
        out
    }

    /// Datasets an application needs in one zone.
    pub fn required_for(kind: ApplicationKind) -> Vec<DatasetKind> {
        let m = DatasetKind::Market;
        match kind {
            ApplicationKind::ArbDayAhead | ApplicationKind::ArbWithAncillary => vec![m(MarketKind::DayAhead)],
            ApplicationKind::SecondaryUp | ApplicationKind::SecondaryDown => vec![
                DatasetKind::Reserve,
                m(MarketKind::DayAhead),
                m(MarketKind::SecondaryEnergyUp),
                m(MarketKind::SecondaryEnergyDown),
            ],
        }
    }

    /// Zones the sweep runs `kind` for.
    pub fn sweep_zones(&self, kind: ApplicationKind) -> Vec<String> {
        let Some(s) = &self.sweep else { return Vec::new() };
        let candidates = s.zones.clone().unwrap_or_else(|| self.zones());
        candidates
            .into_iter()
            .filter(|z| {
                let complete = Self::required_for(kind).iter().all(|k| self.has(z, *k));
                let basket = kind != ApplicationKind::ArbWithAncillary || self.ancillary_in(z).next().is_some();
                complete && basket
            })
            .collect()
    }

    pub fn ancillary_markets(&self) -> Vec<MarketKind> {
        self.arbitrage
            .as_ref()
            .map(|a| a.ancillary.clone())
            .unwrap_or_else(|| DEFAULT_ANCILLARY.to_vec())
    }

    /// Ancillary datasets declared for `zone`.
    pub fn ancillary_in<'a>(&'a self, zone: &'a str) -> impl Iterator<Item = MarketKind> + 'a {
        self.ancillary_markets()
            .into_iter()
            .filter(move |m| self.has(zone, DatasetKind::Market(*m)))
    }

    /// Fails with the full list of missing datasets for the requested analyses.
    fn check_required(&self) -> Result<()> {
        let mut missing = BTreeSet::new();
        let zones = self.zones();
        if self.arbitrage.is_some() && !zones.iter().any(|z| self.has(z, DatasetKind::Market(MarketKind::DayAhead))) {
            missing.insert("arbitrage: a DayAhead dataset".to_string());
        }
        if let Some(r) = &self.reserve {
            let has_reserve = zones.iter().any(|z| self.has(z, DatasetKind::Reserve));
            if r.aggregates.is_empty() && !has_reserve {
                missing.insert("reserve: a Reserve dataset or [[reserve.aggregates]]".to_string());
            }
            for z in zones.iter().filter(|z| self.has(z, DatasetKind::Reserve)) {
                for k in Self::required_for(ApplicationKind::SecondaryUp) {
                    if !self.has(z, k) {
                        missing.insert(format!("reserve: {z}/{k}"));
                    }
                }
            }
        }
        if let Some(s) = &self.sweep {
            for kind in &s.applications {
                let targets = s.zones.clone().unwrap_or_else(|| zones.clone());
                let mut any = false;
                for z in &targets {
                    let lacking: Vec<_> = Self::required_for(*kind).into_iter().filter(|k| !self.has(z, *k)).collect();
                    let basket_ok = *kind != ApplicationKind::ArbWithAncillary || self.ancillary_in(z).next().is_some();
                    if lacking.is_empty() && basket_ok {
                        any = true;
                    } else if s.zones.is_some() {
                        for k in lacking {
                            missing.insert(format!("sweep {kind}: {z}/{k}"));
                        }
                        if !basket_ok {
                            missing.insert(format!("sweep {kind}: {z}/an ancillary market"));
                        }
                    }
                }
                if !any && s.zones.is_none() {
                    let need: Vec<String> = Self::required_for(*kind).iter().map(|k| k.to_string()).collect();
                    let mut need = need.join(" + ");
                    if *kind == ApplicationKind::ArbWithAncillary {
                        need.push_str(" + an ancillary market");
                    }
                    missing.insert(format!("sweep {kind}: one zone with {need}"));
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            let list: Vec<String> = missing.into_iter().collect();
            bail!("missing datasets:\n  {}", list.join("\n  "))
        }
    }
}
