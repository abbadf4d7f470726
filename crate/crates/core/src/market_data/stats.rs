//! Mean / median / standard deviation of prices per calendar group.
//!
//! Standard deviation uses the sample (n - 1) denominator; a single value has
//! standard deviation 0.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, NaiveDate, Timelike};
use serde::{Deserialize, Serialize};

use super::{split_days, HourlyPriceSeries, PricePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    Annual,
    Monthly,
    Daily,
    HourOfDay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum GroupKey {
    Year(i32),
    Month(i32, u32),
    Date(NaiveDate),
    /// Local clock hour, 0-23.
    Hour(u32),
}

impl GroupKey {
    fn of(grouping: Grouping, p: &PricePoint) -> GroupKey {
        let t = p.hour_start;
        match grouping {
            Grouping::Annual => GroupKey::Year(t.year()),
            Grouping::Monthly => GroupKey::Month(t.year(), t.month()),
            Grouping::Daily => GroupKey::Date(t.date_naive()),
            Grouping::HourOfDay => GroupKey::Hour(t.hour()),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Year(y) => write!(f, "{y}"),
            GroupKey::Month(y, m) => write!(f, "{y}-{m:02}"),
            GroupKey::Date(d) => write!(f, "{d}"),
            GroupKey::Hour(h) => write!(f, "{h:02}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupStats {
    pub key: GroupKey,
    #[serde(flatten)]
    pub summary: Summary,
}

/// Count, mean, median and sample standard deviation; `None` when empty.
pub fn describe(values: &[f64]) -> Option<Summary> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let std = if n < 2 {
        0.0
    } else {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    Some(Summary {
        count: n,
        mean,
        median,
        std,
    })
}

fn grouped<'a>(
    points: impl Iterator<Item = &'a PricePoint>,
    grouping: Grouping,
) -> Vec<GroupStats> {
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for p in points {
        groups.entry(GroupKey::of(grouping, p)).or_default().push(p.value);
    }
    groups
        .into_iter()
        .filter_map(|(key, values)| describe(&values).map(|summary| GroupStats { key, summary }))
        .collect()
}

/// Statistics over every point of the series.
pub fn price_stats(series: &HourlyPriceSeries, grouping: Grouping) -> Vec<GroupStats> {
    grouped(series.points().iter(), grouping)
}

/// Statistics restricted to points that belong to complete days.
pub fn price_stats_complete_days(series: &HourlyPriceSeries, grouping: Grouping) -> Vec<GroupStats> {
    let days = split_days(series);
    grouped(
        days.iter()
            .filter(|d| d.is_complete())
            .flat_map(|d| d.points.iter()),
        grouping,
    )
}

/// Values of all complete days, in time order.
pub fn complete_day_values(series: &HourlyPriceSeries) -> Vec<f64> {
    split_days(series)
        .iter()
        .filter(|d| d.is_complete())
        .flat_map(|d| d.values())
        .collect()
}

/// Mean over complete days of each day's standard deviation.
pub fn mean_daily_std(series: &HourlyPriceSeries) -> Option<f64> {
    let stds: Vec<f64> = split_days(series)
        .iter()
        .filter(|d| d.is_complete())
        .filter_map(|d| describe(&d.values().collect::<Vec<_>>()).map(|s| s.std))
        .collect();
    if stds.is_empty() {
        None
    } else {
        Some(stds.iter().sum::<f64>() / stds.len() as f64)
    }
}
