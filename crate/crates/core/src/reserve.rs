//! Secondary-reserve economics.
//!
//! A battery holding a reserve band earns the band price per MW and hour, and
//! per MWh activated it pays (or earns) the energy term:
//!
//! * up:   `discharge_eff * P_up - P_da / charge_eff`
//! * down: `discharge_eff * P_da - P_down / charge_eff`
//!
//! The effective energy usage cost is `wear - energy_profit` per MWh, and the
//! break-even band price is that cost times the average band utilization
//! (MWh activated per MW assigned). Multiplying is what makes the units come
//! out in €/MW; a published description of this step says "divided by", but
//! the published break-even figures match the product.

use std::collections::HashMap;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{BatteryParams, EfficiencyPair};
use crate::market_data::{DateRange, Direction, HourlyPriceSeries, ReserveMarketSeries};
use crate::units::{EurPerMw, EurPerMwh, MwhPerMw};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReserveError {
    #[error("{direction}: activated energy {energy} MWh with zero assigned band")]
    InconsistentReserveData { direction: Direction, energy: f64 },
    #[error("period {period} is not within the data span {span}")]
    PeriodOutsideSpan { period: DateRange, span: String },
    #[error("no reserve hours in period {0}")]
    EmptyPeriod(DateRange),
    #[error("{direction}: no hour in {period} has both day-ahead and secondary energy prices")]
    NoPriceOverlap { direction: Direction, period: DateRange },
    #[error("break-even band price must be finite")]
    NonFiniteBreakEven,
}

/// Band and energy totals for a period. Magnitudes are used regardless of sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReserveTotals {
    /// MW·h of upward band assigned.
    pub band_up: f64,
    /// MWh of upward energy activated.
    pub energy_up: f64,
    pub band_down: f64,
    pub energy_down: f64,
}

impl ReserveTotals {
    pub fn from_series(series: &ReserveMarketSeries, period: &DateRange) -> Self {
        let mut t = ReserveTotals {
            band_up: 0.0,
            energy_up: 0.0,
            band_down: 0.0,
            energy_down: 0.0,
        };
        for h in series.in_period(period) {
            t.band_up += h.band(Direction::Up);
            t.energy_up += h.energy(Direction::Up);
            t.band_down += h.band(Direction::Down);
            t.energy_down += h.energy(Direction::Down);
        }
        t
    }

    pub fn band(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Up => self.band_up.abs(),
            Direction::Down => self.band_down.abs(),
        }
    }

    pub fn energy(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Up => self.energy_up.abs(),
            Direction::Down => self.energy_down.abs(),
        }
    }

    /// Total energy over total band; 0 when nothing was assigned or used.
    pub fn utilization(&self, direction: Direction) -> Result<MwhPerMw, ReserveError> {
        let band = self.band(direction);
        let energy = self.energy(direction);
        if band == 0.0 {
            if energy != 0.0 {
                return Err(ReserveError::InconsistentReserveData { direction, energy });
            }
            return Ok(MwhPerMw(0.0));
        }
        Ok(MwhPerMw(energy / band))
    }
}

/// Period mean prices feeding the energy term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceMeans {
    pub day_ahead: EurPerMwh,
    pub secondary_up: EurPerMwh,
    pub secondary_down: EurPerMwh,
}

/// How the energy term was averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMode {
    /// Formula applied to period mean prices.
    Table,
    /// Per-hour formula averaged with activated-energy weights.
    Hourly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveEconomics {
    pub direction: Direction,
    pub period: DateRange,
    pub mode: EnergyMode,
    pub avg_band_utilization: MwhPerMw,
    pub avg_energy_profit: EurPerMwh,
    pub effective_energy_cost: EurPerMwh,
    pub break_even_band_price: EurPerMw,
    /// Hours whose band price exceeds the break-even; absent without hourly prices.
    pub profitable_hours: Option<usize>,
    pub total_hours: Option<usize>,
}

fn check_period(series: &ReserveMarketSeries, period: &DateRange) -> Result<(), ReserveError> {
    match series.span() {
        Some(span) if span.covers(period) => Ok(()),
        Some(span) => Err(ReserveError::PeriodOutsideSpan {
            period: *period,
            span: span.to_string(),
        }),
        None => Err(ReserveError::EmptyPeriod(*period)),
    }
}

/// Average band utilization `|sum energy| / |sum band|` over `period`.
pub fn band_utilization(
    series: &ReserveMarketSeries,
    direction: Direction,
    period: &DateRange,
) -> Result<MwhPerMw, ReserveError> {
    check_period(series, period)?;
    ReserveTotals::from_series(series, period).utilization(direction)
}

/// Energy profit (negative: cost) per MWh of storage cycled.
pub fn avg_energy_profit(means: &PriceMeans, direction: Direction, eff: EfficiencyPair) -> EurPerMwh {
    let (sell, buy) = match direction {
        Direction::Up => (means.secondary_up, means.day_ahead),
        Direction::Down => (means.day_ahead, means.secondary_down),
    };
    EurPerMwh(eff.discharge * sell.0 - buy.0 / eff.charge)
}

pub fn effective_energy_cost(wear: EurPerMwh, energy_profit: EurPerMwh) -> EurPerMwh {
    wear - energy_profit
}

/// `(wear - energy_profit) * utilization`.
pub fn break_even_band_price(wear: EurPerMwh, energy_profit: EurPerMwh, utilization: MwhPerMw) -> EurPerMw {
    effective_energy_cost(wear, energy_profit) * utilization
}

/// Hours in `period` whose band price strictly exceeds `break_even`.
pub fn count_profitable_hours(
    series: &ReserveMarketSeries,
    break_even: EurPerMw,
    direction: Direction,
    period: &DateRange,
) -> Result<usize, ReserveError> {
    if !break_even.0.is_finite() {
        return Err(ReserveError::NonFiniteBreakEven);
    }
    Ok(series
        .in_period(period)
        .filter(|h| h.band_price_for(direction) > break_even.0)
        .count())
}

/// Economics for both directions from aggregate totals and mean prices.
/// Profitable hours are left empty.
pub fn reserve_report_table(
    totals: &ReserveTotals,
    means: &PriceMeans,
    params: &BatteryParams,
    period: DateRange,
) -> Result<[ReserveEconomics; 2], ReserveError> {
    let wear = params.wear_cost();
    let eff = params.efficiency();
    let one = |direction| -> Result<ReserveEconomics, ReserveError> {
        let utilization = totals.utilization(direction)?;
        let profit = avg_energy_profit(means, direction, eff);
        Ok(ReserveEconomics {
            direction,
            period,
            mode: EnergyMode::Table,
            avg_band_utilization: utilization,
            avg_energy_profit: profit,
            effective_energy_cost: effective_energy_cost(wear, profit),
            break_even_band_price: break_even_band_price(wear, profit, utilization),
            profitable_hours: None,
            total_hours: None,
        })
    };
    Ok([one(Direction::Up)?, one(Direction::Down)?])
}

/// Economics for both directions from hourly reserve data and mean prices.
pub fn reserve_report(
    series: &ReserveMarketSeries,
    means: &PriceMeans,
    params: &BatteryParams,
    period: DateRange,
) -> Result<[ReserveEconomics; 2], ReserveError> {
    check_period(series, &period)?;
    let totals = ReserveTotals::from_series(series, &period);
    let mut out = reserve_report_table(&totals, means, params, period)?;
    let total = series.in_period(&period).count();
    for econ in out.iter_mut() {
        econ.profitable_hours = Some(count_profitable_hours(
            series,
            econ.break_even_band_price,
            econ.direction,
            &period,
        )?);
        econ.total_hours = Some(total);
    }
    Ok(out)
}

/// Hourly prices for the energy term.
#[derive(Debug, Clone, Copy)]
pub struct HourlyPrices<'a> {
    pub day_ahead: &'a HourlyPriceSeries,
    pub secondary_up: &'a HourlyPriceSeries,
    pub secondary_down: &'a HourlyPriceSeries,
}

impl HourlyPrices<'_> {
    /// Plain period means of the three series.
    pub fn means(&self, period: &DateRange) -> Option<PriceMeans> {
        let mean = |s: &HourlyPriceSeries| {
            let v: Vec<f64> = s
                .points()
                .iter()
                .filter(|p| period.contains(p.civil_date()))
                .map(|p| p.value)
                .collect();
            (!v.is_empty()).then(|| EurPerMwh(v.iter().sum::<f64>() / v.len() as f64))
        };
        Some(PriceMeans {
            day_ahead: mean(self.day_ahead)?,
            secondary_up: mean(self.secondary_up)?,
            secondary_down: mean(self.secondary_down)?,
        })
    }
}

fn by_hour(s: &HourlyPriceSeries) -> HashMap<DateTime<FixedOffset>, f64> {
    s.points().iter().map(|p| (p.hour_start, p.value)).collect()
}

/// Energy profit averaged hour by hour, weighted by the energy activated in
/// that hour. Hours lacking either price are left out. When no energy was
/// activated the hours are weighted equally.
pub fn hourly_energy_profit(
    series: &ReserveMarketSeries,
    prices: &HourlyPrices<'_>,
    direction: Direction,
    eff: EfficiencyPair,
    period: &DateRange,
) -> Result<EurPerMwh, ReserveError> {
    let da = by_hour(prices.day_ahead);
    let sec = by_hour(match direction {
        Direction::Up => prices.secondary_up,
        Direction::Down => prices.secondary_down,
    });
    let mut weighted = 0.0;
    let mut weight = 0.0;
    let mut plain = 0.0;
    let mut n = 0usize;
    for h in series.in_period(period) {
        let (Some(&p_da), Some(&p_sec)) = (da.get(&h.hour_start), sec.get(&h.hour_start)) else {
            continue;
        };
        let means = PriceMeans {
            day_ahead: EurPerMwh(p_da),
            secondary_up: EurPerMwh(p_sec),
            secondary_down: EurPerMwh(p_sec),
        };
        let profit = avg_energy_profit(&means, direction, eff).0;
        let w = h.energy(direction);
        weighted += w * profit;
        weight += w;
        plain += profit;
        n += 1;
    }
    if n == 0 {
        return Err(ReserveError::NoPriceOverlap {
            direction,
            period: *period,
        });
    }
    Ok(EurPerMwh(if weight > 0.0 { weighted / weight } else { plain / n as f64 }))
}

/// Like [`reserve_report`] with the energy term from hourly prices.
pub fn reserve_report_hourly(
    series: &ReserveMarketSeries,
    prices: &HourlyPrices<'_>,
    params: &BatteryParams,
    period: DateRange,
) -> Result<[ReserveEconomics; 2], ReserveError> {
    check_period(series, &period)?;
    let wear = params.wear_cost();
    let eff = params.efficiency();
    let totals = ReserveTotals::from_series(series, &period);
    let total = series.in_period(&period).count();
    let one = |direction| -> Result<ReserveEconomics, ReserveError> {
        let utilization = totals.utilization(direction)?;
        let profit = hourly_energy_profit(series, prices, direction, eff, &period)?;
        let break_even = break_even_band_price(wear, profit, utilization);
        Ok(ReserveEconomics {
            direction,
            period,
            mode: EnergyMode::Hourly,
            avg_band_utilization: utilization,
            avg_energy_profit: profit,
            effective_energy_cost: effective_energy_cost(wear, profit),
            break_even_band_price: break_even,
            profitable_hours: Some(count_profitable_hours(series, break_even, direction, &period)?),
            total_hours: Some(total),
        })
    };
    Ok([one(Direction::Up)?, one(Direction::Down)?])
}
