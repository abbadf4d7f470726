//! Potentially profitable utilization time (PPUT) over a wear-cost grid.
//!
//! For each wear cost on the grid, count the periods (days for arbitrage,
//! hours for secondary reserve) in which the operation would have covered
//! that wear cost. Normalizing by the number of complete periods makes
//! applications and zones comparable.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbitrage::{count_profitable_days, run_basket, ServiceBasket};
use crate::battery::BatteryParams;
use crate::market_data::{DateRange, Direction, HourlyPriceSeries, ReserveMarketSeries};
use crate::reserve::{
    avg_energy_profit, break_even_band_price, count_profitable_hours, hourly_energy_profit,
    HourlyPrices, PriceMeans, ReserveError, ReserveTotals,
};
use crate::units::EurPerMwh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("wear grid is empty")]
    EmptyGrid,
    #[error("wear grid must be finite, non-negative and strictly ascending (at index {0})")]
    UnsortedGrid(usize),
    #[error("invalid grid spec `{0}`, expected start:stop:step")]
    GridSpec(String),
    #[error("curve has no periods to normalize by")]
    NoPeriods,
    #[error("curve is not normalized")]
    NotNormalized,
    #[error("target fraction must be > 0, got {0}")]
    InvalidTarget(f64),
    #[error("utilization target {target} is not reached even at the lowest wear cost")]
    NotAttainable { target: f64 },
    #[error("no curves to compare")]
    NothingToCompare,
    #[error("curves have disjoint wear ranges")]
    DisjointWearRanges,
    #[error("{0:?} inputs do not match the application kind")]
    InputMismatch(ApplicationKind),
    #[error(transparent)]
    Reserve(#[from] ReserveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ApplicationKind {
    ArbDayAhead,
    ArbWithAncillary,
    SecondaryUp,
    SecondaryDown,
}

impl ApplicationKind {
    pub const ALL: [ApplicationKind; 4] = [
        ApplicationKind::ArbDayAhead,
        ApplicationKind::ArbWithAncillary,
        ApplicationKind::SecondaryUp,
        ApplicationKind::SecondaryDown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ApplicationKind::ArbDayAhead => "ArbDayAhead",
            ApplicationKind::ArbWithAncillary => "ArbWithAncillary",
            ApplicationKind::SecondaryUp => "SecondaryUp",
            ApplicationKind::SecondaryDown => "SecondaryDown",
        }
    }

    pub fn period_unit(self) -> PeriodUnit {
        match self {
            ApplicationKind::ArbDayAhead | ApplicationKind::ArbWithAncillary => PeriodUnit::Day,
            ApplicationKind::SecondaryUp | ApplicationKind::SecondaryDown => PeriodUnit::Hour,
        }
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            ApplicationKind::SecondaryUp => Some(Direction::Up),
            ApplicationKind::SecondaryDown => Some(Direction::Down),
            _ => None,
        }
    }
}

impl fmt::Display for ApplicationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ApplicationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ApplicationKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown application `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodUnit {
    Day,
    Hour,
}

/// Source of the secondary-reserve energy term.
#[derive(Debug, Clone, Copy)]
pub enum EnergyPrices<'a> {
    Means(PriceMeans),
    Hourly(HourlyPrices<'a>),
}

#[derive(Debug, Clone)]
pub enum ApplicationInputs<'a> {
    Arbitrage(ServiceBasket<'a>),
    Reserve {
        series: &'a ReserveMarketSeries,
        prices: EnergyPrices<'a>,
        /// Defaults to the span of `series`.
        period: Option<DateRange>,
    },
}

/// A grid application together with the data it is evaluated on.
#[derive(Debug, Clone)]
pub struct Application<'a> {
    kind: ApplicationKind,
    zone: String,
    inputs: ApplicationInputs<'a>,
}

impl<'a> Application<'a> {
    pub fn new(kind: ApplicationKind, inputs: ApplicationInputs<'a>) -> Result<Self, SweepError> {
        let zone = match (&inputs, kind.period_unit()) {
            (ApplicationInputs::Arbitrage(b), PeriodUnit::Day) => b.zone().to_string(),
            (ApplicationInputs::Reserve { series, .. }, PeriodUnit::Hour) => series.zone().to_string(),
            _ => return Err(SweepError::InputMismatch(kind)),
        };
        Ok(Application { kind, zone, inputs })
    }

    pub fn day_ahead(series: &'a HourlyPriceSeries) -> Result<Self, SweepError> {
        let basket = ServiceBasket::day_ahead_only(series).map_err(|_| SweepError::InputMismatch(ApplicationKind::ArbDayAhead))?;
        Application::new(ApplicationKind::ArbDayAhead, ApplicationInputs::Arbitrage(basket))
    }

    pub fn with_ancillary(basket: ServiceBasket<'a>) -> Result<Self, SweepError> {
        Application::new(ApplicationKind::ArbWithAncillary, ApplicationInputs::Arbitrage(basket))
    }

    pub fn secondary(
        direction: Direction,
        series: &'a ReserveMarketSeries,
        prices: EnergyPrices<'a>,
        period: Option<DateRange>,
    ) -> Result<Self, SweepError> {
        let kind = match direction {
            Direction::Up => ApplicationKind::SecondaryUp,
            Direction::Down => ApplicationKind::SecondaryDown,
        };
        Application::new(kind, ApplicationInputs::Reserve { series, prices, period })
    }

    pub fn kind(&self) -> ApplicationKind {
        self.kind
    }

    pub fn zone(&self) -> &str {
        &self.zone
    }
}

/// Ascending list of wear costs in €/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WearGrid(Vec<f64>);

impl WearGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, SweepError> {
        if points.is_empty() {
            return Err(SweepError::EmptyGrid);
        }
        for (i, &w) in points.iter().enumerate() {
            if !w.is_finite() || w < 0.0 || (i > 0 && w <= points[i - 1]) {
                return Err(SweepError::UnsortedGrid(i));
            }
        }
        Ok(WearGrid(points))
    }

    /// `start, start + step, ...` up to and including `stop`.
    /// Points are computed as `start + i * step` and the last one is snapped
    /// to `stop` when within rounding distance.
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self, SweepError> {
        let spec = format!("{start}:{stop}:{step}");
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(SweepError::GridSpec(spec));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        let mut points: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
        if let Some(last) = points.last_mut() {
            if (*last - stop).abs() < step * 1e-6 {
                *last = stop;
            }
        }
        WearGrid::new(points)
    }

    /// 0 to 100 €/MWh in steps of 1.
    pub fn default_grid() -> Self {
        WearGrid::range(0.0, 100.0, 1.0).expect("static grid")
    }

    /// Parses `start:stop:step`.
    pub fn parse(spec: &str) -> Result<Self, SweepError> {
        let parts: Vec<&str> = spec.split(':').collect();
        let nums: Option<Vec<f64>> = (parts.len() == 3)
            .then(|| parts.iter().map(|p| p.trim().parse::<f64>().ok()).collect())
            .flatten();
        match nums.as_deref() {
            Some(&[a, b, c]) => WearGrid::range(a, b, c).map_err(|_| SweepError::GridSpec(spec.into())),
            _ => Err(SweepError::GridSpec(spec.into())),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationCurve {
    pub application: ApplicationKind,
    pub zone: String,
    pub wear_grid: Vec<f64>,
    pub counts: Vec<usize>,
    pub normalized: Option<Vec<f64>>,
    /// Complete periods in the data set.
    pub total_periods: usize,
    pub period_unit: PeriodUnit,
    pub empty_input: bool,
}

impl UtilizationCurve {
    pub fn label(&self) -> String {
        format!("{}/{}", self.application, self.zone)
    }
}

/// Profitable-period counts at every wear cost of `grid`.
pub fn pput_curve(
    app: &Application<'_>,
    params: &BatteryParams,
    grid: &WearGrid,
) -> Result<UtilizationCurve, SweepError> {
    let eff = params.efficiency();
    let (counts, total) = match &app.inputs {
        ApplicationInputs::Arbitrage(basket) => {
            let results = run_basket(basket, eff).results;
            let counts = grid
                .points()
                .iter()
                .map(|&w| count_profitable_days(&results, EurPerMwh(w)).count)
                .collect();
            (counts, results.len())
        }
        ApplicationInputs::Reserve { series, prices, period } => {
            let direction = app.kind.direction().expect("reserve application");
            let period = period.or_else(|| series.span());
            let total = period.map_or(0, |p| series.in_period(&p).count());
            if let (Some(period), true) = (period, total > 0) {
                let utilization = ReserveTotals::from_series(series, &period).utilization(direction)?;
                let profit = match prices {
                    EnergyPrices::Means(m) => avg_energy_profit(m, direction, eff),
                    EnergyPrices::Hourly(h) => hourly_energy_profit(series, h, direction, eff, &period)?,
                };
                let counts = grid
                    .points()
                    .iter()
                    .map(|&w| {
                        let be = break_even_band_price(EurPerMwh(w), profit, utilization);
                        count_profitable_hours(series, be, direction, &period)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (counts, total)
            } else {
                (vec![0; grid.len()], 0)
            }
        }
    };
    Ok(UtilizationCurve {
        application: app.kind,
        zone: app.zone.clone(),
        wear_grid: grid.points().to_vec(),
        counts,
        normalized: None,
        total_periods: total,
        period_unit: app.kind.period_unit(),
        empty_input: total == 0,
    })
}

/// Fills `normalized[i] = counts[i] / total_periods`.
pub fn normalize(mut curve: UtilizationCurve) -> Result<UtilizationCurve, SweepError> {
    if curve.total_periods == 0 {
        return Err(SweepError::NoPeriods);
    }
    let total = curve.total_periods as f64;
    curve.normalized = Some(curve.counts.iter().map(|&c| c as f64 / total).collect());
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub target: f64,
    /// Largest grid wear cost whose utilization reaches the target.
    pub grid_wear: f64,
    /// Linear interpolation of the crossing between that grid point and the next.
    pub interpolated_wear: f64,
}

/// Highest wear cost at which the normalized utilization is still `>= target`.
pub fn min_wear_for_target(curve: &UtilizationCurve, target: f64) -> Result<Threshold, SweepError> {
    let normalized = curve.normalized.as_ref().ok_or(SweepError::NotNormalized)?;
    if !(target > 0.0) {
        return Err(SweepError::InvalidTarget(target));
    }
    let last = normalized
        .iter()
        .rposition(|&n| n >= target)
        .ok_or(SweepError::NotAttainable { target })?;
    let w = &curve.wear_grid;
    let grid_wear = w[last];
    let interpolated_wear = match normalized.get(last + 1) {
        Some(&next) if next < normalized[last] => {
            let frac = (normalized[last] - target) / (normalized[last] - next);
            grid_wear + frac * (w[last + 1] - grid_wear)
        }
        _ => grid_wear,
    };
    Ok(Threshold {
        target,
        grid_wear,
        interpolated_wear,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnLabel {
    pub application: ApplicationKind,
    pub zone: String,
}

/// Normalized curves on a shared wear grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub wear_grid: Vec<f64>,
    pub columns: Vec<ColumnLabel>,
    /// `values[column][row]`.
    pub values: Vec<Vec<f64>>,
    /// Columns attaining the row maximum; more than one means a tie.
    pub leaders: Vec<Vec<usize>>,
}

impl Comparison {
    /// Whether `column` is a strict, untied leader at every grid point.
    pub fn dominates_everywhere(&self, column: usize) -> bool {
        self.leaders.iter().all(|l| l.len() == 1 && l[0] == column)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i >= xs.len() => ys[xs.len() - 1],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// Aligns normalized curves on a common grid and marks the leader per row.
/// Curves on different grids are resampled by linear interpolation onto the
/// union of their grid points inside the overlapping range.
pub fn compare(curves: &[UtilizationCurve]) -> Result<Comparison, SweepError> {
    let first = curves.first().ok_or(SweepError::NothingToCompare)?;
    let normalized: Vec<&Vec<f64>> = curves
        .iter()
        .map(|c| c.normalized.as_ref().ok_or(SweepError::NotNormalized))
        .collect::<Result<_, _>>()?;
    let grid: Vec<f64> = if curves.iter().all(|c| c.wear_grid == first.wear_grid) {
        first.wear_grid.clone()
    } else {
        let lo = curves.iter().map(|c| c.wear_grid[0]).fold(f64::MIN, f64::max);
        let hi = curves
            .iter()
            .map(|c| *c.wear_grid.last().expect("nonempty grid"))
            .fold(f64::MAX, f64::min);
        if lo > hi {
            return Err(SweepError::DisjointWearRanges);
        }
        let mut g: Vec<f64> = curves
            .iter()
            .flat_map(|c| c.wear_grid.iter().copied())
            .filter(|&w| lo <= w && w <= hi)
            .collect();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    };
    let values: Vec<Vec<f64>> = curves
        .iter()
        .zip(&normalized)
        .map(|(c, n)| grid.iter().map(|&w| interpolate(&c.wear_grid, n, w)).collect())
        .collect();
    let leaders = (0..grid.len())
        .map(|row| {
            let best = values.iter().map(|col| col[row]).fold(f64::MIN, f64::max);
            (0..values.len()).filter(|&c| values[c][row] == best).collect()
        })
        .collect();
    Ok(Comparison {
        wear_grid: grid,
        columns: curves
            .iter()
            .map(|c| ColumnLabel {
                application: c.application,
                zone: c.zone.clone(),
            })
            .collect(),
        values,
        leaders,
    })
}
