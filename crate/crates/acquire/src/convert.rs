//! Remote JSON payloads to the canonical `hour_start,value` CSV.
//!
//! Expected payload shape:
//! `{"indicator": {"values": [{"value": 41.5, "datetime": "...", "geo_id": 3}, ...]}}`.
//! Timestamps carry their own UTC offset; values may be numbers or numeric
//! strings. A `null` value is dropped and shows up as a gap.

use std::fmt::Write as _;

use chrono::{DateTime, FixedOffset, NaiveTime, Timelike};
use pput_core::market_data::TIMESTAMP_FORMAT;
use pput_core::DateRange;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::AcquireError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GapWarning {
    /// Hours missing between two consecutive rows.
    Interior { after: String, missing_hours: i64 },
    /// First row is later than local midnight of the span's first day.
    LateStart { first: String },
    /// Last row is earlier than 23:00 local on the span's last day.
    EarlyEnd { last: String },
    /// Rows whose value was null.
    NullValues { count: usize },
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Converted {
    pub csv: Vec<u8>,
    pub rows: usize,
    pub warnings: Vec<GapWarning>,
}

fn drift(detail: impl Into<String>) -> AcquireError {
    AcquireError::SchemaDrift(detail.into())
}

fn invalid(detail: impl Into<String>) -> AcquireError {
    AcquireError::InvalidPayload(detail.into())
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Converts a raw payload. Deterministic: the same bytes always give the
/// same CSV bytes.
pub fn convert_payload(raw: &[u8], geo_id: Option<i64>, span: &DateRange) -> Result<Converted, AcquireError> {
    let root: Value = serde_json::from_slice(raw).map_err(|e| drift(format!("payload is not JSON: {e}")))?;
    let values = root
        .get("indicator")
        .ok_or_else(|| drift("missing field `indicator`"))?
        .get("values")
        .ok_or_else(|| drift("missing field `indicator.values`"))?
        .as_array()
        .ok_or_else(|| drift("`indicator.values` is not an array"))?;

    let mut points: Vec<(DateTime<FixedOffset>, f64)> = Vec::with_capacity(values.len());
    let mut nulls = 0;
    for (i, entry) in values.iter().enumerate() {
        let obj = entry
            .as_object()
            .ok_or_else(|| drift(format!("values[{i}] is not an object")))?;
        if let (Some(want), Some(got)) = (geo_id, obj.get("geo_id").and_then(Value::as_i64)) {
            if want != got {
                continue;
            }
        }
        let raw_ts = obj
            .get("datetime")
            .ok_or_else(|| drift(format!("values[{i}] has no `datetime`")))?
            .as_str()
            .ok_or_else(|| drift(format!("values[{i}].datetime is not a string")))?;
        let value = obj
            .get("value")
            .ok_or_else(|| drift(format!("values[{i}] has no `value`")))?;
        let ts = DateTime::parse_from_rfc3339(raw_ts)
            .map_err(|_| invalid(format!("values[{i}].datetime `{raw_ts}` is not RFC 3339")))?;
        if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
            return Err(invalid(format!("values[{i}].datetime `{raw_ts}` is not on the hour")));
        }
        if value.is_null() {
            nulls += 1;
            continue;
        }
        let v = number(value)
            .filter(|v| v.is_finite())
            .ok_or_else(|| invalid(format!("values[{i}].value `{value}` is not a finite number")))?;
        points.push((ts, v));
    }
    points.sort_by_key(|(t, _)| *t);
    if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(invalid(format!("duplicate hour {}", w[0].0.format(TIMESTAMP_FORMAT))));
    }

    let mut csv = String::from("hour_start,value\n");
    for (t, v) in &points {
        writeln!(csv, "{},{}", t.format(TIMESTAMP_FORMAT), v).expect("writing to a String");
    }
    Ok(Converted {
        csv: csv.into_bytes(),
        rows: points.len(),
        warnings: gap_warnings(&points, nulls, span),
    })
}

fn gap_warnings(points: &[(DateTime<FixedOffset>, f64)], nulls: usize, span: &DateRange) -> Vec<GapWarning> {
    let mut out = Vec::new();
    let (Some(first), Some(last)) = (points.first(), points.last()) else {
        out.push(GapWarning::Empty);
        return out;
    };
    let fmt = |t: &DateTime<FixedOffset>| t.format(TIMESTAMP_FORMAT).to_string();
    let midnight = NaiveTime::MIN;
    if first.0.date_naive() > span.start || (first.0.date_naive() == span.start && first.0.time() != midnight) {
        out.push(GapWarning::LateStart { first: fmt(&first.0) });
    }
    for w in points.windows(2) {
        let step = (w[1].0 - w[0].0).num_hours();
        if step > 1 {
            out.push(GapWarning::Interior {
                after: fmt(&w[0].0),
                missing_hours: step - 1,
            });
        }
    }
    if last.0.date_naive() < span.end || (last.0.date_naive() == span.end && last.0.hour() != 23) {
        out.push(GapWarning::EarlyEnd { last: fmt(&last.0) });
    }
    if nulls > 0 {
        out.push(GapWarning::NullValues { count: nulls });
    }
    out
}
