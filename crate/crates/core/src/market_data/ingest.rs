//! CSV reading and writing for price and reserve series.
//!
//! Energy/price schema: `hour_start,value` with an optional trailing `unit`
//! column. Reserve schema:
//! `hour_start,band_price,band_up,band_down,energy_up,energy_down` with an
//! optional trailing `band_price_down` column.
//!
//! Row numbers in errors and reports are file line numbers (the header is
//! line 1).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset, Timelike};
use csv::{ReaderBuilder, StringRecord, Trim};
use serde::Serialize;
use thiserror::Error;

use super::{
    Direction, HourlyPriceSeries, MarketKind, PricePoint, ReserveHour, ReserveMarketSeries,
    SeriesError, ValidationProfile,
};

/// Timestamp layout used when writing CSV.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%:z";

const PRICE_HEADER: [&str; 2] = ["hour_start", "value"];
const RESERVE_HEADER: [&str; 6] = [
    "hour_start",
    "band_price",
    "band_up",
    "band_down",
    "energy_up",
    "energy_down",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("row {row}: unreadable CSV record: {message}")]
    Csv { row: u64, message: String },
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}, field {field}: malformed timestamp `{value}`")]
    MalformedTimestamp {
        row: u64,
        field: &'static str,
        value: String,
    },
    #[error("row {row}, field hour_start: `{value}` is not the start of an hour")]
    NotOnTheHour { row: u64, value: String },
    #[error("row {row}, field hour_start: duplicate hour {hour}")]
    DuplicateHour { row: u64, hour: String },
    #[error("row {row}, field hour_start: hour {hour} is earlier than the previous row")]
    OutOfOrder { row: u64, hour: String },
    #[error("row {row}, field {field}: malformed number `{value}`")]
    MalformedValue {
        row: u64,
        field: String,
        value: String,
    },
    #[error("row {row}, field unit: expected {expected}, found `{found}`")]
    UnitMismatch {
        row: u64,
        expected: &'static str,
        found: String,
    },
    #[error("row {row}, field value: {value} outside [{min}, {max}] under profile {profile}")]
    CapViolation {
        row: u64,
        value: f64,
        min: f64,
        max: f64,
        profile: &'static str,
    },
    #[error("row {row}, field {field}: negative band price {value}")]
    NegativeBandPrice {
        row: u64,
        field: &'static str,
        value: f64,
    },
    #[error("row {row}, field {field}: upward quantity {value} must not be negative")]
    NegativeUpward {
        row: u64,
        field: &'static str,
        value: f64,
    },
    #[error("row {row}: hour index misaligned, missing {missing:?}")]
    MisalignedColumns { row: u64, missing: Vec<String> },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedRow {
    pub row: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarningKind {
    /// A downward quantity arrived positive and was negated.
    SignCoercion { field: String },
    /// Activated energy exceeds one hour of the assigned band.
    EnergyExceedsBand { direction: Direction },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestWarning {
    pub row: u64,
    #[serde(flatten)]
    pub kind: WarningKind,
}

/// Bookkeeping for one ingestion: `rows_parsed == points + skipped.len()`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows_parsed: usize,
    pub skipped: Vec<SkippedRow>,
    pub warnings: Vec<IngestWarning>,
}

#[derive(Debug, Clone)]
pub struct Ingested<T> {
    pub series: T,
    pub report: IngestReport,
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(reader)
}

fn csv_error(e: csv::Error) -> IngestError {
    let row = e.position().map(|p| p.line()).unwrap_or(0);
    IngestError::Csv {
        row,
        message: e.to_string(),
    }
}

fn check_header(
    record: Option<&StringRecord>,
    required: &[&str],
    optional: &str,
) -> Result<bool, IngestError> {
    let found: Vec<&str> = record
        .map(|r| r.iter().collect())
        .unwrap_or_default();
    let ok_required = found.len() >= required.len() && found[..required.len()] == *required;
    let extra = &found[required.len().min(found.len())..];
    let ok_extra = extra.is_empty() || (extra.len() == 1 && extra[0] == optional);
    if ok_required && ok_extra {
        return Ok(extra.len() == 1);
    }
    let trimmed = found.first().map(|f| f.trim_start_matches('\u{feff}'));
    if trimmed == Some(required[0]) && found[0] != required[0] {
        // UTF-8 byte-order mark ahead of the first column name.
        let mut fixed: Vec<String> = found.iter().map(|s| s.to_string()).collect();
        fixed[0] = required[0].to_string();
        let rec = StringRecord::from(fixed);
        return check_header(Some(&rec), required, optional);
    }
    Err(IngestError::Header {
        expected: format!("{}[,{}]", required.join(","), optional),
        found: found.join(","),
    })
}

fn parse_hour(row: u64, raw: &str) -> Result<DateTime<FixedOffset>, IngestError> {
    let ts = DateTime::parse_from_rfc3339(raw).map_err(|_| IngestError::MalformedTimestamp {
        row,
        field: "hour_start",
        value: raw.to_string(),
    })?;
    if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
        return Err(IngestError::NotOnTheHour {
            row,
            value: raw.to_string(),
        });
    }
    Ok(ts)
}

fn parse_number(row: u64, field: &str, raw: &str) -> Result<f64, IngestError> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::MalformedValue {
            row,
            field: field.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn check_order(
    row: u64,
    hour: DateTime<FixedOffset>,
    prev: Option<DateTime<FixedOffset>>,
) -> Result<(), IngestError> {
    match prev {
        Some(p) if p == hour => Err(IngestError::DuplicateHour {
            row,
            hour: hour.format(TIMESTAMP_FORMAT).to_string(),
        }),
        Some(p) if hour < p => Err(IngestError::OutOfOrder {
            row,
            hour: hour.format(TIMESTAMP_FORMAT).to_string(),
        }),
        _ => Ok(()),
    }
}

fn unit_matches(expected: &str, found: &str) -> bool {
    let normalized = found.replace('€', "EUR").to_ascii_uppercase();
    normalized == expected.to_ascii_uppercase()
}

/// Reads a price series from CSV text.
pub fn read_price_csv<R: Read>(
    reader: R,
    market: MarketKind,
    zone: &str,
    profile: ValidationProfile,
) -> Result<Ingested<HourlyPriceSeries>, IngestError> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    let header = records.next().transpose().map_err(csv_error)?;
    let has_unit = check_header(header.as_ref(), &PRICE_HEADER, "unit")?;

    let mut report = IngestReport::default();
    let mut points: Vec<PricePoint> = Vec::new();
    let mut prev = None;
    for record in records {
        let record = record.map_err(csv_error)?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        report.rows_parsed += 1;
        let hour = parse_hour(row, record.get(0).unwrap_or(""))?;
        check_order(row, hour, prev)?;
        prev = Some(hour);

        if has_unit {
            let unit = record.get(2).unwrap_or("");
            if !unit.is_empty() && !unit_matches(market.unit(), unit) {
                return Err(IngestError::UnitMismatch {
                    row,
                    expected: market.unit(),
                    found: unit.to_string(),
                });
            }
        }
        let raw = record.get(1).unwrap_or("");
        if raw.is_empty() {
            report.skipped.push(SkippedRow {
                row,
                reason: "missing value".into(),
            });
            continue;
        }
        let value = parse_number(row, "value", raw)?;
        if !profile.admits(market, value) {
            return Err(IngestError::CapViolation {
                row,
                value,
                min: super::ES_PRICE_FLOOR,
                max: super::ES_PRICE_CAP,
                profile: profile.name(),
            });
        }
        points.push(PricePoint::new(hour, value));
    }
    let series = HourlyPriceSeries::new(market, zone, points)?;
    Ok(Ingested { series, report })
}

/// Reads and validates an hourly price CSV file.
pub fn ingest_csv(
    path: impl AsRef<Path>,
    market: MarketKind,
    zone: &str,
    profile: ValidationProfile,
) -> Result<Ingested<HourlyPriceSeries>, IngestError> {
    read_price_csv(open(path.as_ref())?, market, zone, profile)
}

/// Reads a reserve series from CSV text.
///
/// Downward values entered positive are negated and reported as
/// [`WarningKind::SignCoercion`].
pub fn read_reserve_csv<R: Read>(
    reader: R,
    zone: &str,
) -> Result<Ingested<ReserveMarketSeries>, IngestError> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    let header = records.next().transpose().map_err(csv_error)?;
    let directional = check_header(header.as_ref(), &RESERVE_HEADER, "band_price_down")?;
    let mut fields: Vec<&'static str> = RESERVE_HEADER[1..].to_vec();
    if directional {
        fields.push("band_price_down");
    }

    let mut report = IngestReport::default();
    let mut hours = Vec::new();
    let mut prev = None;
    for record in records {
        let record = record.map_err(csv_error)?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        report.rows_parsed += 1;
        let hour = parse_hour(row, record.get(0).unwrap_or(""))?;
        check_order(row, hour, prev)?;
        prev = Some(hour);

        let raw: Vec<&str> = (1..=fields.len())
            .map(|i| record.get(i).unwrap_or(""))
            .collect();
        let missing: Vec<String> = fields
            .iter()
            .zip(&raw)
            .filter(|(_, v)| v.is_empty())
            .map(|(f, _)| f.to_string())
            .collect();
        if missing.len() == fields.len() {
            report.skipped.push(SkippedRow {
                row,
                reason: "missing values".into(),
            });
            continue;
        }
        if !missing.is_empty() {
            return Err(IngestError::MisalignedColumns { row, missing });
        }
        let mut values = [0.0; 6];
        for (i, (field, text)) in fields.iter().zip(&raw).enumerate() {
            values[i] = parse_number(row, field, text)?;
        }
        let [band_price, band_up, mut band_down, energy_up, mut energy_down, price_down] = values;

        if band_price < 0.0 {
            return Err(IngestError::NegativeBandPrice {
                row,
                field: "band_price",
                value: band_price,
            });
        }
        if directional && price_down < 0.0 {
            return Err(IngestError::NegativeBandPrice {
                row,
                field: "band_price_down",
                value: price_down,
            });
        }
        for (field, value) in [("band_up", band_up), ("energy_up", energy_up)] {
            if value < 0.0 {
                return Err(IngestError::NegativeUpward { row, field, value });
            }
        }
        for (field, value) in [("band_down", &mut band_down), ("energy_down", &mut energy_down)] {
            if *value > 0.0 {
                *value = -*value;
                report.warnings.push(IngestWarning {
                    row,
                    kind: WarningKind::SignCoercion {
                        field: field.to_string(),
                    },
                });
            }
        }
        let h = ReserveHour {
            hour_start: hour,
            band_price,
            band_price_down: directional.then_some(price_down),
            band_up,
            band_down,
            energy_up,
            energy_down,
        };
        for direction in Direction::BOTH {
            if h.energy(direction) > h.band(direction) {
                report.warnings.push(IngestWarning {
                    row,
                    kind: WarningKind::EnergyExceedsBand { direction },
                });
            }
        }
        hours.push(h);
    }
    if !report.warnings.is_empty() {
        log::warn!(
            "reserve data for {zone}: {} warnings (first at row {})",
            report.warnings.len(),
            report.warnings[0].row
        );
    }
    let series = ReserveMarketSeries::new(zone, hours)?;
    Ok(Ingested { series, report })
}

/// Reads and validates a reserve CSV file.
pub fn ingest_reserve_csv(
    path: impl AsRef<Path>,
    zone: &str,
) -> Result<Ingested<ReserveMarketSeries>, IngestError> {
    read_reserve_csv(open(path.as_ref())?, zone)
}

/// Writes a series in the canonical price schema. Values use the shortest
/// representation that parses back to the identical `f64`.
pub fn write_price_csv<W: Write>(series: &HourlyPriceSeries, writer: W) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{}", PRICE_HEADER.join(","))?;
    for p in series.points() {
        writeln!(w, "{},{}", p.hour_start.format(TIMESTAMP_FORMAT), p.value)?;
    }
    w.flush()
}

pub fn write_reserve_csv<W: Write>(series: &ReserveMarketSeries, writer: W) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    let directional = series.has_directional_prices();
    write!(w, "{}", RESERVE_HEADER.join(","))?;
    if directional {
        write!(w, ",band_price_down")?;
    }
    writeln!(w)?;
    for h in series.hours() {
        write!(
            w,
            "{},{},{},{},{},{}",
            h.hour_start.format(TIMESTAMP_FORMAT),
            h.band_price,
            h.band_up,
            h.band_down,
            h.energy_up,
            h.energy_down
        )?;
        if let Some(p) = h.band_price_down {
            write!(w, ",{p}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn export_csv(series: &HourlyPriceSeries, path: impl AsRef<Path>) -> io::Result<()> {
    write_price_csv(series, File::create(path)?)
}

pub fn export_reserve_csv(series: &ReserveMarketSeries, path: impl AsRef<Path>) -> io::Result<()> {
    write_reserve_csv(series, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn price(text: &str, profile: ValidationProfile) -> Result<Ingested<HourlyPriceSeries>, IngestError> {
        read_price_csv(text.as_bytes(), MarketKind::DayAhead, "ES", profile)
    }

    #[test]
    fn three_rows_echo() {
        let csv = "hour_start,value\n\
                   2019-11-28T00:00:00+01:00,10\n\
                   2019-11-28T01:00:00+01:00,20\n\
                   2019-11-28T02:00:00+01:00,30\n";
        let got = price(csv, ValidationProfile::EsCapped).unwrap();
        let values: Vec<f64> = got.series.values().collect();
        assert_eq!(values, vec![10.0, 20.0, 30.0]);
        assert_eq!(got.report.rows_parsed, 3);
        assert!(got.report.skipped.is_empty());
    }

    #[test]
    fn duplicate_hour_names_row() {
        let csv = "hour_start,value\n\
                   2019-11-28T03:00:00+01:00,10\n\
                   2019-11-28T04:00:00+01:00,20\n\
                   2019-11-28T04:00:00+01:00,30\n";
        match price(csv, ValidationProfile::EsCapped) {
            Err(IngestError::DuplicateHour { row, hour }) => {
                assert_eq!(row, 4);
                assert_eq!(hour, "2019-11-28T04:00:00+01:00");
            }
            other => panic!("expected DuplicateHour, got {other:?}"),
        }
    }

    #[test]
    fn cap_depends_on_profile() {
        let csv = "hour_start,value\n\
                   2019-11-28T00:00:00+01:00,50\n\
                   2019-11-28T01:00:00+01:00,185.0\n";
        assert!(matches!(
            price(csv, ValidationProfile::EsCapped),
            Err(IngestError::CapViolation { row: 3, .. })
        ));
        let ok = price(csv, ValidationProfile::Uncapped).unwrap();
        assert_eq!(ok.series.len(), 2);
    }

    #[test]
    fn negative_price_only_under_uncapped() {
        let csv = "hour_start,value\n2019-11-28T00:00:00+01:00,-3.5\n";
        assert!(matches!(
            price(csv, ValidationProfile::EsCapped),
            Err(IngestError::CapViolation { .. })
        ));
        assert!(price(csv, ValidationProfile::Uncapped).is_ok());
    }

    #[test]
    fn errors_name_row_and_field() {
        let csv = "hour_start,value\n2019-11-28 00:00,1\n";
        let err = price(csv, ValidationProfile::EsCapped).unwrap_err();
        assert!(matches!(err, IngestError::MalformedTimestamp { row: 2, field: "hour_start", .. }));
        let csv = "hour_start,value\n2019-11-28T00:00:00+01:00,abc\n";
        let err = price(csv, ValidationProfile::EsCapped).unwrap_err();
        assert_eq!(err.to_string(), "row 2, field value: malformed number `abc`");
        let csv = "hour_start,value\n2019-11-28T00:15:00+01:00,1\n";
        assert!(matches!(
            price(csv, ValidationProfile::EsCapped),
            Err(IngestError::NotOnTheHour { row: 2, .. })
        ));
    }

    #[test]
    fn unit_column_must_match_market() {
        let csv = "hour_start,value,unit\n2019-11-28T00:00:00+01:00,1,EUR/MW\n";
        assert!(matches!(
            price(csv, ValidationProfile::EsCapped),
            Err(IngestError::UnitMismatch { row: 2, expected: "EUR/MWh", .. })
        ));
        let csv = "hour_start,value,unit\n2019-11-28T00:00:00+01:00,1,€/MWh\n";
        assert!(price(csv, ValidationProfile::EsCapped).is_ok());
        let band = read_price_csv(
            "hour_start,value,unit\n2019-11-28T00:00:00+01:00,1,EUR/MW\n".as_bytes(),
            MarketKind::SecondaryBandPrice,
            "ES",
            ValidationProfile::EsCapped,
        );
        assert!(band.is_ok());
    }

    #[test]
    fn wrong_header_rejected() {
        let csv = "time,price\n2019-11-28T00:00:00+01:00,1\n";
        assert!(matches!(
            price(csv, ValidationProfile::EsCapped),
            Err(IngestError::Header { .. })
        ));
    }

    #[test]
    fn empty_value_is_a_reported_skip() {
        let csv = "hour_start,value\n\
                   2019-11-28T00:00:00+01:00,10\n\
                   2019-11-28T01:00:00+01:00,\n\
                   2019-11-28T02:00:00+01:00,30\n";
        let got = price(csv, ValidationProfile::EsCapped).unwrap();
        assert_eq!(got.report.rows_parsed, got.series.len() + got.report.skipped.len());
        assert_eq!(got.report.skipped[0].row, 3);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let csv = "hour_start,value\n\
                   2019-10-27T02:00:00+02:00,0.1\n\
                   2019-10-27T02:00:00+01:00,47.680000000000007\n\
                   2019-10-27T03:00:00+01:00,1e-7\n";
        let first = price(csv, ValidationProfile::EsCapped).unwrap().series;
        let mut buf = Vec::new();
        write_price_csv(&first, &mut buf).unwrap();
        let second = price(std::str::from_utf8(&buf).unwrap(), ValidationProfile::EsCapped)
            .unwrap()
            .series;
        assert_eq!(first, second);
        for (a, b) in first.values().zip(second.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    const RESERVE_HEAD: &str = "hour_start,band_price,band_up,band_down,energy_up,energy_down\n";

    #[test]
    fn reserve_down_sign_coercion_warns() {
        let csv = format!("{RESERVE_HEAD}2019-01-01T00:00:00+01:00,10,100,80,20,15\n");
        let got = read_reserve_csv(csv.as_bytes(), "ES").unwrap();
        let h = got.series.hours()[0];
        assert_eq!(h.band_down, -80.0);
        assert_eq!(h.energy_down, -15.0);
        let fields: Vec<_> = got
            .report
            .warnings
            .iter()
            .filter_map(|w| match &w.kind {
                WarningKind::SignCoercion { field } => Some(field.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(fields, vec!["band_down", "energy_down"]);
    }

    #[test]
    fn reserve_negative_band_price_rejected() {
        let csv = format!("{RESERVE_HEAD}2019-01-01T00:00:00+01:00,-1,100,-80,20,-15\n");
        assert!(matches!(
            read_reserve_csv(csv.as_bytes(), "ES"),
            Err(IngestError::NegativeBandPrice { row: 2, field: "band_price", .. })
        ));
    }

    #[test]
    fn reserve_partial_row_is_misaligned() {
        let csv = format!("{RESERVE_HEAD}2019-01-01T00:00:00+01:00,10,100,,20,-15\n");
        match read_reserve_csv(csv.as_bytes(), "ES") {
            Err(IngestError::MisalignedColumns { row, missing }) => {
                assert_eq!(row, 2);
                assert_eq!(missing, vec!["band_down".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let short = format!("{RESERVE_HEAD}2019-01-01T00:00:00+01:00,10,100\n");
        assert!(matches!(
            read_reserve_csv(short.as_bytes(), "ES"),
            Err(IngestError::MisalignedColumns { .. })
        ));
    }

    #[test]
    fn reserve_energy_above_band_is_warning() {
        let csv = format!("{RESERVE_HEAD}2019-01-01T00:00:00+01:00,10,10,-80,20,-15\n");
        let got = read_reserve_csv(csv.as_bytes(), "ES").unwrap();
        assert_eq!(
            got.report.warnings,
            vec![IngestWarning {
                row: 2,
                kind: WarningKind::EnergyExceedsBand {
                    direction: Direction::Up
                }
            }]
        );
    }

    #[test]
    fn reserve_roundtrip_with_directional_prices() {
        let csv = "hour_start,band_price,band_up,band_down,energy_up,energy_down,band_price_down\n\
                   2019-01-01T00:00:00+01:00,10.5,100,-80,20,-15,7.25\n";
        let first = read_reserve_csv(csv.as_bytes(), "ES").unwrap().series;
        assert!(first.has_directional_prices());
        let mut buf = Vec::new();
        write_reserve_csv(&first, &mut buf).unwrap();
        let second = read_reserve_csv(buf.as_slice(), "ES").unwrap().series;
        assert_eq!(first, second);
        assert_eq!(second.hours()[0].band_price_for(Direction::Down), 7.25);
    }
}
