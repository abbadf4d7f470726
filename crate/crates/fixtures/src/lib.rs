//! Synthetic hourly market data for tests.
//!
//! Hours follow a real timezone (Europe/Madrid by default), so generated
//! years contain the 23- and 25-hour daylight-saving days. CSV text is
//! written here directly rather than through the library writers.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveTime, TimeZone, Timelike, Utc};
use chrono_tz::Tz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use chrono_tz::Europe::{Madrid, Paris};

fn local_midnight_utc(tz: Tz, date: NaiveDate) -> DateTime<Utc> {
    tz.from_local_datetime(&date.and_time(NaiveTime::MIN))
        .earliest()
        .expect("midnight exists in European zones")
        .with_timezone(&Utc)
}

/// Every hour start of the civil days `start..=end` in `tz`.
pub fn civil_hours(tz: Tz, start: NaiveDate, end: NaiveDate) -> Vec<DateTime<FixedOffset>> {
    let from = local_midnight_utc(tz, start);
    let to = local_midnight_utc(tz, end.succ_opt().expect("date in range"));
    let n = (to - from).num_hours();
    (0..n)
        .map(|i| (from + Duration::hours(i)).with_timezone(&tz).fixed_offset())
        .collect()
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

pub fn fmt_hour(t: &DateTime<FixedOffset>) -> String {
    t.format("%Y-%m-%dT%H:%M:%S%:z").to_string()
}

/// `hour_start,value` CSV. `None` values produce an empty cell.
pub fn price_csv(rows: &[(DateTime<FixedOffset>, Option<f64>)]) -> String {
    let mut out = String::from("hour_start,value\n");
    for (t, v) in rows {
        match v {
            Some(v) => writeln!(out, "{},{}", fmt_hour(t), v).unwrap(),
            None => writeln!(out, "{},", fmt_hour(t)).unwrap(),
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct ReserveRow {
    pub band_price: f64,
    pub band_up: f64,
    pub band_down: f64,
    pub energy_up: f64,
    pub energy_down: f64,
}

pub fn reserve_csv(rows: &[(DateTime<FixedOffset>, ReserveRow)]) -> String {
    let mut out = String::from("hour_start,band_price,band_up,band_down,energy_up,energy_down\n");
    for (t, r) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_hour(t),
            r.band_price,
            r.band_up,
            r.band_down,
            r.energy_up,
            r.energy_down
        )
        .unwrap();
    }
    out
}

/// Rounds to cents, as settled prices are published.
pub fn cents(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Day-ahead-like price: morning trough, evening peak, day-to-day level drift
/// and noise, clipped to `[lo, hi]`.
pub fn day_ahead_price(rng: &mut impl Rng, t: &DateTime<FixedOffset>, level: f64, lo: f64, hi: f64) -> f64 {
    let h = t.hour() as f64;
    let shape = -8.0 * (-((h - 4.0) / 2.5).powi(2)).exp() + 10.0 * (-((h - 20.0) / 2.0).powi(2)).exp();
    cents((level + shape + rng.gen_range(-4.0..4.0)).clamp(lo, hi))
}

/// One synthetic year of Spanish-style market data written as CSV files.
#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub zone: String,
    pub tz: Tz,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub seed: u64,
    pub capped: bool,
}

/// Paths written by [`SyntheticMarket::write`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub dir: PathBuf,
    /// `(market name, path)` for every energy series.
    pub prices: Vec<(&'static str, PathBuf)>,
    pub reserve: PathBuf,
}

impl SyntheticFiles {
    pub fn price(&self, market: &str) -> &Path {
        &self
            .prices
            .iter()
            .find(|(m, _)| *m == market)
            .unwrap_or_else(|| panic!("no synthetic {market} series"))
            .1
    }
}

pub const ANCILLARY: [&str; 6] = [
    "DeviationMgmtUp",
    "DeviationMgmtDown",
    "TertiaryUp",
    "TertiaryDown",
    "ImbalanceUp",
    "ImbalanceDown",
];

impl SyntheticMarket {
    pub fn spain(year: i32, seed: u64) -> Self {
        SyntheticMarket {
            zone: "ES".into(),
            tz: Madrid,
            start: date(year, 1, 1),
            end: date(year, 12, 31),
            seed,
            capped: true,
        }
    }

    pub fn france(year: i32, seed: u64) -> Self {
        SyntheticMarket {
            zone: "FR".into(),
            tz: Paris,
            start: date(year, 1, 1),
            end: date(year, 12, 31),
            seed,
            capped: false,
        }
    }

    pub fn hours(&self) -> Vec<DateTime<FixedOffset>> {
        civil_hours(self.tz, self.start, self.end)
    }

    /// Writes day-ahead, ancillary, secondary energy and reserve CSVs into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<SyntheticFiles> {
        fs::create_dir_all(dir)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let hours = self.hours();
        let (lo, hi) = if self.capped { (0.0, 180.3) } else { (-50.0, 500.0) };

        let mut level: f64 = 48.0;
        let mut current_day = None;
        let mut da = Vec::with_capacity(hours.len());
        for t in &hours {
            if current_day != Some(t.date_naive()) {
                current_day = Some(t.date_naive());
                level = (level + rng.gen_range(-3.0..3.0)).clamp(25.0, 70.0);
            }
            da.push(day_ahead_price(&mut rng, t, level, lo, hi));
        }

        let mut prices = Vec::new();
        let tag = format!("{}_{}", self.zone.to_lowercase(), self.start.format("%Y"));
        let mut write_series = |name: &'static str, values: Vec<f64>| -> io::Result<()> {
            let rows: Vec<_> = hours.iter().copied().zip(values.into_iter().map(Some)).collect();
            let path = dir.join(format!("{tag}_{name}.csv"));
            fs::write(&path, price_csv(&rows))?;
            prices.push((name, path));
            Ok(())
        };
        write_series("DayAhead", da.clone())?;
        for (k, name) in ANCILLARY.iter().enumerate() {
            let spread = 6.0 + 3.0 * k as f64;
            let values = da
                .iter()
                .map(|&p| cents((p + rng.gen_range(-spread..spread)).clamp(lo, hi)))
                .collect();
            write_series(name, values)?;
        }
        let up = da.iter().map(|&p| cents((p + rng.gen_range(0.0..8.0)).clamp(lo, hi))).collect();
        write_series("SecondaryEnergyUp", up)?;
        let down = da.iter().map(|&p| cents((p - rng.gen_range(0.0..8.0)).clamp(lo, hi))).collect();
        write_series("SecondaryEnergyDown", down)?;

        let reserve_rows: Vec<_> = hours
            .iter()
            .map(|t| {
                let band_up = rng.gen_range(500.0..800.0_f64).round();
                let band_down = -rng.gen_range(400.0..600.0_f64).round();
                let row = ReserveRow {
                    band_price: cents(rng.gen_range(2.0..30.0)),
                    band_up,
                    band_down,
                    energy_up: (band_up * rng.gen_range(0.0..0.4)).round(),
                    energy_down: (band_down * rng.gen_range(0.0..0.45)).round(),
                };
                (*t, row)
            })
            .collect();
        let reserve = dir.join(format!("{tag}_reserve.csv"));
        fs::write(&reserve, reserve_csv(&reserve_rows))?;

        Ok(SyntheticFiles {
            dir: dir.to_path_buf(),
            prices,
            reserve,
        })
    }
}
