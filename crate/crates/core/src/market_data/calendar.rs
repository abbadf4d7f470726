//! Partition of an hourly series into local civil days.
//!
//! Each point belongs to the civil date of its own UTC offset, so daylight
//! saving days come out with 23 or 25 hours without a timezone database.

use chrono::{Duration, NaiveDate, NaiveTime, TimeZone, Timelike};
use serde::Serialize;
use thiserror::Error;

use super::{HourlyPriceSeries, MarketKind, PricePoint};

/// Accepted number of hours in a civil day.
pub const DAY_LENGTHS: [usize; 3] = [23, 24, 25];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DayIndexError {
    #[error("{date}: a day cannot have {hours} hours")]
    InvalidLength { date: NaiveDate, hours: usize },
    #[error("{date}: hour offsets must be 0, 1, 2, ...")]
    NonContiguous { date: NaiveDate },
}

/// A complete local day: its date and the elapsed-hour offsets from local
/// midnight (`0..23`, `0..24` or `0..25`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DayIndex {
    date: NaiveDate,
    hours: Vec<u32>,
}

impl DayIndex {
    pub fn new(date: NaiveDate, hours: Vec<u32>) -> Result<Self, DayIndexError> {
        if !DAY_LENGTHS.contains(&hours.len()) {
            return Err(DayIndexError::InvalidLength {
                date,
                hours: hours.len(),
            });
        }
        if hours.iter().enumerate().any(|(i, &h)| h as usize != i) {
            return Err(DayIndexError::NonContiguous { date });
        }
        Ok(DayIndex { date, hours })
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn hours(&self) -> &[u32] {
        &self.hours
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }
}

/// Why a day was excluded from daily analyses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Incomplete {
    /// First point is after local midnight.
    pub starts_late: bool,
    /// Last point is before the 23:00 local hour.
    pub ends_early: bool,
    /// Hours missing between the first and last points.
    pub gap_hours: usize,
    /// Set when the day is otherwise contiguous but its length is not 23-25.
    pub bad_length: Option<usize>,
}

/// The points of one local civil day.
#[derive(Debug, Clone)]
pub struct DaySlice<'a> {
    pub date: NaiveDate,
    pub market: MarketKind,
    pub points: &'a [PricePoint],
    index: Option<DayIndex>,
    incomplete: Option<Incomplete>,
}

impl<'a> DaySlice<'a> {
    pub fn is_complete(&self) -> bool {
        self.index.is_some()
    }

    pub fn index(&self) -> Option<&DayIndex> {
        self.index.as_ref()
    }

    pub fn incomplete(&self) -> Option<&Incomplete> {
        self.incomplete.as_ref()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + 'a {
        self.points.iter().map(|p| p.value)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Elapsed hours from local midnight for each point.
    pub fn hour_offsets(&self) -> Vec<u32> {
        if let Some(index) = &self.index {
            return index.hours.clone();
        }
        let Some(first) = self.points.first() else {
            return Vec::new();
        };
        let midnight = first
            .hour_start
            .offset()
            .from_local_datetime(&self.date.and_time(NaiveTime::MIN))
            .single()
            .expect("fixed offsets are unambiguous");
        self.points
            .iter()
            .map(|p| (p.hour_start - midnight).num_hours().max(0) as u32)
            .collect()
    }
}

fn classify(date: NaiveDate, points: &[PricePoint]) -> Result<DayIndex, Incomplete> {
    let first = points.first().expect("day slices are nonempty");
    let last = points.last().expect("day slices are nonempty");
    let gap_hours: usize = points
        .windows(2)
        .map(|w| ((w[1].hour_start - w[0].hour_start).num_hours() - 1).max(0) as usize)
        .sum();
    let starts_late = first.hour_start.hour() != 0;
    let ends_early = last.hour_start.hour() != 23;
    if !starts_late && !ends_early && gap_hours == 0 {
        let hours = (0..points.len() as u32).collect();
        return DayIndex::new(date, hours).map_err(|_| Incomplete {
            starts_late,
            ends_early,
            gap_hours,
            bad_length: Some(points.len()),
        });
    }
    Err(Incomplete {
        starts_late,
        ends_early,
        gap_hours,
        bad_length: None,
    })
}

/// Splits a series into local civil days, in date order.
///
/// Every point lands in exactly one slice. Days with a late start, early end
/// or internal gap are returned flagged incomplete.
pub fn split_days(series: &HourlyPriceSeries) -> Vec<DaySlice<'_>> {
    let points = series.points();
    let mut out = Vec::new();
    let mut start = 0;
    while start < points.len() {
        let date = points[start].civil_date();
        let mut end = start + 1;
        while end < points.len() && points[end].civil_date() == date {
            end += 1;
        }
        let slice = &points[start..end];
        let (index, incomplete) = match classify(date, slice) {
            Ok(ix) => (Some(ix), None),
            Err(why) => (None, Some(why)),
        };
        out.push(DaySlice {
            date,
            market: series.market(),
            points: slice,
            index,
            incomplete,
        });
        start = end;
    }
    out
}

/// Coverage summary of a series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub points: usize,
    pub complete_days: usize,
    pub complete_day_hours: usize,
    pub incomplete_days: Vec<(NaiveDate, Incomplete)>,
    pub incomplete_day_hours: usize,
    /// Missing hours between consecutive points anywhere in the series.
    pub gap_hours: usize,
    pub day_lengths: Vec<(usize, usize)>,
}

impl CoverageReport {
    pub fn of(series: &HourlyPriceSeries) -> Self {
        let days = split_days(series);
        let mut report = CoverageReport {
            points: series.len(),
            complete_days: 0,
            complete_day_hours: 0,
            incomplete_days: Vec::new(),
            incomplete_day_hours: 0,
            gap_hours: series
                .points()
                .windows(2)
                .map(|w| ((w[1].hour_start - w[0].hour_start) - Duration::hours(1)).num_hours())
                .map(|h| h.max(0) as usize)
                .sum(),
            day_lengths: Vec::new(),
        };
        let mut lengths = std::collections::BTreeMap::new();
        for d in &days {
            match &d.incomplete {
                None => {
                    report.complete_days += 1;
                    report.complete_day_hours += d.len();
                    *lengths.entry(d.len()).or_insert(0) += 1;
                }
                Some(why) => {
                    report.incomplete_day_hours += d.len();
                    report.incomplete_days.push((d.date, why.clone()));
                }
            }
        }
        report.day_lengths = lengths.into_iter().collect();
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, FixedOffset};

    fn series_from(start: &str, offsets_hours: &[i32], values: impl Fn(usize) -> f64) -> HourlyPriceSeries {
        // consecutive UTC hours, each with its own offset
        let start: DateTime<FixedOffset> = DateTime::parse_from_rfc3339(start).unwrap();
        let utc = start.naive_utc();
        let points = offsets_hours
            .iter()
            .enumerate()
            .map(|(i, off)| {
                let tz = FixedOffset::east_opt(off * 3600).unwrap();
                let t = tz.from_utc_datetime(&(utc + Duration::hours(i as i64)));
                PricePoint::new(t, values(i))
            })
            .collect();
        HourlyPriceSeries::new(MarketKind::DayAhead, "ES", points).unwrap()
    }

    #[test]
    fn two_full_days() {
        let s = series_from("2019-11-27T00:00:00+01:00", &[1; 48], |i| i as f64);
        let days = split_days(&s);
        assert_eq!(days.len(), 2);
        assert!(days.iter().all(|d| d.is_complete() && d.len() == 24));
        assert_eq!(days[1].date, NaiveDate::from_ymd_opt(2019, 11, 28).unwrap());
    }

    #[test]
    fn october_fallback_has_25_hours() {
        // 2019-10-27 Europe/Madrid: 00:00..02:59 at +02:00, then +01:00
        let mut offsets = vec![2; 3];
        offsets.extend(vec![1; 22]);
        let s = series_from("2019-10-27T00:00:00+02:00", &offsets, |_| 1.0);
        let days = split_days(&s);
        assert_eq!(days.len(), 1);
        let ix = days[0].index().unwrap();
        assert_eq!(ix.len(), 25);
        assert_eq!(ix.hours()[24], 24);
    }

    #[test]
    fn march_forward_has_23_hours() {
        // 2019-03-31: 00:00, 01:00 at +01:00, then 03:00 at +02:00
        let mut offsets = vec![1; 2];
        offsets.extend(vec![2; 21]);
        let s = series_from("2019-03-31T00:00:00+01:00", &offsets, |_| 1.0);
        let days = split_days(&s);
        assert_eq!(days.len(), 1);
        assert_eq!(days[0].index().unwrap().len(), 23);
    }

    #[test]
    fn late_start_is_incomplete() {
        let s = series_from("2019-11-27T05:00:00+01:00", &[1; 43], |_| 1.0);
        let days = split_days(&s);
        assert!(!days[0].is_complete());
        assert!(days[0].incomplete().unwrap().starts_late);
        assert!(days[1].is_complete());
        assert_eq!(days[0].hour_offsets()[0], 5);
    }

    #[test]
    fn gap_makes_day_incomplete_and_is_counted() {
        let full = series_from("2019-11-27T00:00:00+01:00", &[1; 48], |i| i as f64);
        let mut pts = full.points().to_vec();
        pts.remove(30);
        let s = HourlyPriceSeries::new(MarketKind::DayAhead, "ES", pts).unwrap();
        let cov = CoverageReport::of(&s);
        assert_eq!(cov.complete_days, 1);
        assert_eq!(cov.gap_hours, 1);
        assert_eq!(cov.incomplete_days[0].1.gap_hours, 1);
        assert_eq!(cov.complete_day_hours + cov.incomplete_day_hours, s.len());
    }

    #[test]
    fn day_index_rejects_odd_lengths() {
        let d = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
        assert!(DayIndex::new(d, (0..22).collect()).is_err());
        assert!(DayIndex::new(d, (0..26).collect()).is_err());
        assert!(DayIndex::new(d, (0..24).collect()).is_ok());
        assert!(matches!(
            DayIndex::new(d, (1..25).collect()),
            Err(DayIndexError::NonContiguous { .. })
        ));
    }
}
