//! Hourly market series: types, CSV ingestion, day partitioning and statistics.

mod calendar;
mod ingest;
mod stats;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDate, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calendar::{split_days, CoverageReport, DayIndex, DayIndexError, DaySlice};
pub use ingest::{
    export_csv, export_reserve_csv, ingest_csv, ingest_reserve_csv, read_price_csv,
    read_reserve_csv, write_price_csv, write_reserve_csv, IngestError, IngestReport,
    IngestWarning, Ingested, SkippedRow, WarningKind, TIMESTAMP_FORMAT,
};
pub use stats::{
    complete_day_values, describe, mean_daily_std, price_stats, price_stats_complete_days,
    GroupKey, GroupStats, Grouping, Summary,
};

/// Upper bound of the Spanish day-ahead bid/offer price range, €/MWh.
pub const ES_PRICE_CAP: f64 = 180.3;
/// Lower bound of the Spanish price range, €/MWh.
pub const ES_PRICE_FLOOR: f64 = 0.0;

/// Market or service an hourly series was settled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MarketKind {
    DayAhead,
    IntradayAdjustment,
    TertiaryUp,
    TertiaryDown,
    DeviationMgmtUp,
    DeviationMgmtDown,
    ImbalanceUp,
    ImbalanceDown,
    SecondaryBandPrice,
    SecondaryEnergyUp,
    SecondaryEnergyDown,
}

impl MarketKind {
    pub const ALL: [MarketKind; 11] = [
        MarketKind::DayAhead,
        MarketKind::IntradayAdjustment,
        MarketKind::TertiaryUp,
        MarketKind::TertiaryDown,
        MarketKind::DeviationMgmtUp,
        MarketKind::DeviationMgmtDown,
        MarketKind::ImbalanceUp,
        MarketKind::ImbalanceDown,
        MarketKind::SecondaryBandPrice,
        MarketKind::SecondaryEnergyUp,
        MarketKind::SecondaryEnergyDown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MarketKind::DayAhead => "DayAhead",
            MarketKind::IntradayAdjustment => "IntradayAdjustment",
            MarketKind::TertiaryUp => "TertiaryUp",
            MarketKind::TertiaryDown => "TertiaryDown",
            MarketKind::DeviationMgmtUp => "DeviationMgmtUp",
            MarketKind::DeviationMgmtDown => "DeviationMgmtDown",
            MarketKind::ImbalanceUp => "ImbalanceUp",
            MarketKind::ImbalanceDown => "ImbalanceDown",
            MarketKind::SecondaryBandPrice => "SecondaryBandPrice",
            MarketKind::SecondaryEnergyUp => "SecondaryEnergyUp",
            MarketKind::SecondaryEnergyDown => "SecondaryEnergyDown",
        }
    }

    /// Lower-case identifier used in file and cache paths.
    pub fn slug(self) -> &'static str {
        match self {
            MarketKind::DayAhead => "day_ahead",
            MarketKind::IntradayAdjustment => "intraday_adjustment",
            MarketKind::TertiaryUp => "tertiary_up",
            MarketKind::TertiaryDown => "tertiary_down",
            MarketKind::DeviationMgmtUp => "deviation_mgmt_up",
            MarketKind::DeviationMgmtDown => "deviation_mgmt_down",
            MarketKind::ImbalanceUp => "imbalance_up",
            MarketKind::ImbalanceDown => "imbalance_down",
            MarketKind::SecondaryBandPrice => "secondary_band_price",
            MarketKind::SecondaryEnergyUp => "secondary_energy_up",
            MarketKind::SecondaryEnergyDown => "secondary_energy_down",
        }
    }

    /// Energy series are priced per MWh; the secondary band per MW of capacity.
    pub fn is_energy_price(self) -> bool {
        self != MarketKind::SecondaryBandPrice
    }

    pub fn unit(self) -> &'static str {
        if self.is_energy_price() {
            "EUR/MWh"
        } else {
            "EUR/MW"
        }
    }

    pub fn is_imbalance(self) -> bool {
        matches!(self, MarketKind::ImbalanceUp | MarketKind::ImbalanceDown)
    }
}

impl fmt::Display for MarketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("unknown market kind `{0}`")]
pub struct UnknownMarketKind(pub String);

impl FromStr for MarketKind {
    type Err = UnknownMarketKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MarketKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s) || k.slug() == s)
            .ok_or_else(|| UnknownMarketKind(s.to_string()))
    }
}

/// Price validation applied at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationProfile {
    /// Energy prices restricted to `[ES_PRICE_FLOOR, ES_PRICE_CAP]`.
    #[serde(rename = "ES-capped", alias = "es-capped")]
    EsCapped,
    /// Negative and uncapped prices allowed.
    Uncapped,
}

impl ValidationProfile {
    /// Default profile for a market zone label.
    pub fn for_zone(zone: &str) -> Self {
        if zone.eq_ignore_ascii_case("ES") {
            ValidationProfile::EsCapped
        } else {
            ValidationProfile::Uncapped
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ValidationProfile::EsCapped => "ES-capped",
            ValidationProfile::Uncapped => "uncapped",
        }
    }

    /// Whether `value` is acceptable for a series of kind `market`.
    pub fn admits(self, market: MarketKind, value: f64) -> bool {
        match self {
            ValidationProfile::Uncapped => true,
            ValidationProfile::EsCapped => {
                !market.is_energy_price() || (ES_PRICE_FLOOR..=ES_PRICE_CAP).contains(&value)
            }
        }
    }
}

impl FromStr for ValidationProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "es-capped" | "es_capped" | "capped" => Ok(ValidationProfile::EsCapped),
            "uncapped" | "fr" => Ok(ValidationProfile::Uncapped),
            _ => Err(format!("unknown validation profile `{s}`")),
        }
    }
}

/// Inclusive range of civil dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        assert!(start <= end, "date range start {start} after end {end}");
        DateRange { start, end }
    }

    /// The calendar year `year`.
    pub fn year(year: i32) -> Self {
        DateRange {
            start: NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year"),
            end: NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year"),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn covers(&self, other: &DateRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub hour_start: DateTime<FixedOffset>,
    pub value: f64,
}

impl PricePoint {
    pub fn new(hour_start: DateTime<FixedOffset>, value: f64) -> Self {
        PricePoint { hour_start, value }
    }

    /// Civil date in the point's own offset.
    pub fn civil_date(&self) -> NaiveDate {
        self.hour_start.date_naive()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("point {index}: hour {hour} repeats the previous hour")]
    DuplicateHour { index: usize, hour: String },
    #[error("point {index}: hour {hour} precedes the previous hour")]
    OutOfOrder { index: usize, hour: String },
    #[error("point {index}: {hour} is not aligned to the start of an hour")]
    NotOnTheHour { index: usize, hour: String },
    #[error("point {index}: value is not finite")]
    NonFinite { index: usize },
    #[error("{field} has {found} entries, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("hour {index}: {field} = {value} has the wrong sign")]
    WrongSign {
        index: usize,
        field: &'static str,
        value: f64,
    },
    #[error("hour {index}: band price {value} is negative")]
    NegativeBandPrice { index: usize, value: f64 },
}

pub(crate) fn check_hour_index(hours: &[DateTime<FixedOffset>]) -> Result<(), SeriesError> {
    for (index, h) in hours.iter().enumerate() {
        if h.minute() != 0 || h.second() != 0 || h.nanosecond() != 0 {
            return Err(SeriesError::NotOnTheHour {
                index,
                hour: h.to_rfc3339(),
            });
        }
        if index > 0 {
            let prev = hours[index - 1];
            if *h == prev {
                return Err(SeriesError::DuplicateHour {
                    index,
                    hour: h.to_rfc3339(),
                });
            }
            if *h < prev {
                return Err(SeriesError::OutOfOrder {
                    index,
                    hour: h.to_rfc3339(),
                });
            }
        }
    }
    Ok(())
}

/// Settled hourly prices of one market in one zone.
///
/// Points are strictly increasing in time. Missing hours are simply absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyPriceSeries {
    market: MarketKind,
    zone: String,
    points: Vec<PricePoint>,
}

impl HourlyPriceSeries {
    pub fn new(
        market: MarketKind,
        zone: impl Into<String>,
        points: Vec<PricePoint>,
    ) -> Result<Self, SeriesError> {
        let hours: Vec<_> = points.iter().map(|p| p.hour_start).collect();
        check_hour_index(&hours)?;
        if let Some(index) = points.iter().position(|p| !p.value.is_finite()) {
            return Err(SeriesError::NonFinite { index });
        }
        Ok(HourlyPriceSeries {
            market,
            zone: zone.into(),
            points,
        })
    }

    pub fn market(&self) -> MarketKind {
        self.market
    }

    pub fn zone(&self) -> &str {
        &self.zone
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    /// Civil dates of the first and last points.
    pub fn span(&self) -> Option<DateRange> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        Some(DateRange::new(first.civil_date(), last.civil_date()))
    }

    /// Points whose civil date lies in `period`.
    pub fn restrict(&self, period: &DateRange) -> HourlyPriceSeries {
        HourlyPriceSeries {
            market: self.market,
            zone: self.zone.clone(),
            points: self
                .points
                .iter()
                .filter(|p| period.contains(p.civil_date()))
                .copied()
                .collect(),
        }
    }
}

/// Reserve direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Up, Direction::Down];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One hour of secondary-reserve settlement data.
///
/// Downward band and energy are stored as negative magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReserveHour {
    pub hour_start: DateTime<FixedOffset>,
    /// €/MW. Applies to both directions unless `band_price_down` is set.
    pub band_price: f64,
    /// €/MW for the downward band when the source publishes it separately.
    pub band_price_down: Option<f64>,
    pub band_up: f64,
    pub band_down: f64,
    pub energy_up: f64,
    pub energy_down: f64,
}

impl ReserveHour {
    pub fn civil_date(&self) -> NaiveDate {
        self.hour_start.date_naive()
    }

    pub fn band_price_for(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Up => self.band_price,
            Direction::Down => self.band_price_down.unwrap_or(self.band_price),
        }
    }

    /// Assigned band magnitude in MW.
    pub fn band(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Up => self.band_up.abs(),
            Direction::Down => self.band_down.abs(),
        }
    }

    /// Activated energy magnitude in MWh.
    pub fn energy(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Up => self.energy_up.abs(),
            Direction::Down => self.energy_down.abs(),
        }
    }
}

/// Hourly secondary-reserve band prices, assigned bands and activated energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveMarketSeries {
    zone: String,
    hours: Vec<ReserveHour>,
}

impl ReserveMarketSeries {
    pub fn new(zone: impl Into<String>, hours: Vec<ReserveHour>) -> Result<Self, SeriesError> {
        let index: Vec<_> = hours.iter().map(|h| h.hour_start).collect();
        check_hour_index(&index)?;
        let has_down_price = hours.first().map(|h| h.band_price_down.is_some());
        for (index, h) in hours.iter().enumerate() {
            for (field, value) in [
                ("band_price", h.band_price),
                ("band_up", h.band_up),
                ("band_down", h.band_down),
                ("energy_up", h.energy_up),
                ("energy_down", h.energy_down),
            ] {
                if !value.is_finite() {
                    return Err(SeriesError::NonFinite { index });
                }
                let ok = match field {
                    "band_price" => value >= 0.0,
                    "band_up" | "energy_up" => value >= 0.0,
                    _ => value <= 0.0,
                };
                if !ok {
                    if field == "band_price" {
                        return Err(SeriesError::NegativeBandPrice { index, value });
                    }
                    return Err(SeriesError::WrongSign {
                        index,
                        field,
                        value,
                    });
                }
            }
            match h.band_price_down {
                Some(v) if v < 0.0 || !v.is_finite() => {
                    return Err(SeriesError::NegativeBandPrice { index, value: v })
                }
                _ => {}
            }
            if Some(h.band_price_down.is_some()) != has_down_price {
                return Err(SeriesError::LengthMismatch {
                    field: "band_price_down",
                    expected: hours.len(),
                    found: hours.iter().filter(|h| h.band_price_down.is_some()).count(),
                });
            }
        }
        Ok(ReserveMarketSeries {
            zone: zone.into(),
            hours,
        })
    }

    pub fn zone(&self) -> &str {
        &self.zone
    }

    pub fn hours(&self) -> &[ReserveHour] {
        &self.hours
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn has_directional_prices(&self) -> bool {
        self.hours.first().is_some_and(|h| h.band_price_down.is_some())
    }

    pub fn span(&self) -> Option<DateRange> {
        let first = self.hours.first()?;
        let last = self.hours.last()?;
        Some(DateRange::new(first.civil_date(), last.civil_date()))
    }

    pub fn in_period<'a>(&'a self, period: &'a DateRange) -> impl Iterator<Item = &'a ReserveHour> {
        self.hours
            .iter()
            .filter(move |h| period.contains(h.civil_date()))
    }

    /// Hourly band price as a price series.
    pub fn band_price_series(&self, direction: Direction) -> HourlyPriceSeries {
        HourlyPriceSeries {
            market: MarketKind::SecondaryBandPrice,
            zone: self.zone.clone(),
            points: self
                .hours
                .iter()
                .map(|h| PricePoint::new(h.hour_start, h.band_price_for(direction)))
                .collect(),
        }
    }
}
