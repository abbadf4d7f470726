//! Perfect-foresight daily energy arbitrage.
//!
//! One cycle per day: buy (charge) at the lowest price of the day and sell
//! (discharge) at the highest. The order of the two hours within the day is
//! not enforced, so results are an upper bound on what real dispatch earns.
//! Profit is per MWh of storage cycled:
//! `discharge_eff * sell - buy / charge_eff`, floored at zero.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::EfficiencyPair;
use crate::market_data::{split_days, DaySlice, HourlyPriceSeries, MarketKind};
use crate::units::EurPerMwh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArbitrageError {
    #[error("{market} on {date}: day is incomplete")]
    IncompleteDay { market: MarketKind, date: NaiveDate },
    #[error("{market} has no data for {date}")]
    MissingDay { market: MarketKind, date: NaiveDate },
    #[error("basket has no {0} candidates")]
    EmptyBasket(&'static str),
    #[error("basket mixes zones {0} and {1}")]
    ZoneMismatch(String, String),
    #[error("day-ahead series must be both a buy and a sell candidate")]
    MissingDayAhead,
    #[error("{date}: candidate days have different lengths")]
    DayLengthMismatch { date: NaiveDate },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyArbitrageResult {
    pub date: NaiveDate,
    /// Elapsed hours from local midnight.
    pub buy_hour: u32,
    pub sell_hour: u32,
    pub buy_price: f64,
    pub sell_price: f64,
    pub buy_source: MarketKind,
    pub sell_source: MarketKind,
    pub cycle_profit: EurPerMwh,
    /// Raw profit was negative and has been reported as zero.
    pub clamped: bool,
}

/// Unclamped profit of one cycle per MWh of storage.
pub fn raw_cycle_profit(buy_price: f64, sell_price: f64, eff: EfficiencyPair) -> f64 {
    eff.discharge * sell_price - buy_price / eff.charge
}

#[derive(Debug, Clone, Copy)]
struct Pick {
    price: f64,
    hour: u32,
    source: MarketKind,
}

fn result_from(date: NaiveDate, buy: Pick, sell: Pick, eff: EfficiencyPair) -> DailyArbitrageResult {
    let raw = raw_cycle_profit(buy.price, sell.price, eff);
    let clamped = raw < 0.0;
    DailyArbitrageResult {
        date,
        buy_hour: buy.hour,
        sell_hour: sell.hour,
        buy_price: buy.price,
        sell_price: sell.price,
        buy_source: buy.source,
        sell_source: sell.source,
        cycle_profit: EurPerMwh(if clamped { 0.0 } else { raw }),
        clamped,
    }
}

/// Extreme over `(price, hour, candidate order)`: lowest price wins for buys,
/// highest for sells, ties go to the earliest hour and then to the earlier
/// candidate.
fn extreme<'a>(days: impl Iterator<Item = &'a DaySlice<'a>>, lowest: bool) -> Option<Pick> {
    let mut best: Option<Pick> = None;
    for day in days {
        for (value, hour) in day.values().zip(day.hour_offsets()) {
            let better = match best {
                None => true,
                Some(b) => {
                    let strictly = if lowest { value < b.price } else { value > b.price };
                    strictly || (value == b.price && hour < b.hour)
                }
            };
            if better {
                best = Some(Pick {
                    price: value,
                    hour,
                    source: day.market,
                });
            }
        }
    }
    best
}

/// Arbitrage on a single complete day of one market.
pub fn daily_arbitrage(
    day: &DaySlice<'_>,
    eff: EfficiencyPair,
) -> Result<DailyArbitrageResult, ArbitrageError> {
    if !day.is_complete() {
        return Err(ArbitrageError::IncompleteDay {
            market: day.market,
            date: day.date,
        });
    }
    let buy = extreme(std::iter::once(day), true).expect("complete days are nonempty");
    let sell = extreme(std::iter::once(day), false).expect("complete days are nonempty");
    Ok(result_from(day.date, buy, sell, eff))
}

/// Arbitrage over every complete day of a series; incomplete days are skipped.
pub fn run_daily(series: &HourlyPriceSeries, eff: EfficiencyPair) -> Vec<DailyArbitrageResult> {
    split_days(series)
        .iter()
        .filter_map(|d| daily_arbitrage(d, eff).ok())
        .collect()
}

/// How ancillary candidates must cover a date to take part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coverage {
    /// Every candidate needs a complete day.
    #[default]
    Complete,
    /// Only the day-ahead day must be complete; other candidates contribute
    /// whatever hours they have on that date.
    Available,
}

/// Buy and sell candidates for multi-service arbitrage in one zone.
#[derive(Debug, Clone)]
pub struct ServiceBasket<'a> {
    buy: Vec<&'a HourlyPriceSeries>,
    sell: Vec<&'a HourlyPriceSeries>,
    coverage: Coverage,
}

impl<'a> ServiceBasket<'a> {
    pub fn new(
        buy: Vec<&'a HourlyPriceSeries>,
        sell: Vec<&'a HourlyPriceSeries>,
    ) -> Result<Self, ArbitrageError> {
        if buy.is_empty() {
            return Err(ArbitrageError::EmptyBasket("buy"));
        }
        if sell.is_empty() {
            return Err(ArbitrageError::EmptyBasket("sell"));
        }
        let zone = buy[0].zone();
        if let Some(other) = buy.iter().chain(&sell).find(|s| s.zone() != zone) {
            return Err(ArbitrageError::ZoneMismatch(zone.into(), other.zone().into()));
        }
        let has_da = |set: &[&HourlyPriceSeries]| set.iter().any(|s| s.market() == MarketKind::DayAhead);
        if !has_da(&buy) || !has_da(&sell) {
            return Err(ArbitrageError::MissingDayAhead);
        }
        Ok(ServiceBasket {
            buy,
            sell,
            coverage: Coverage::Complete,
        })
    }

    /// Basket whose only candidate is `day_ahead` on both sides.
    pub fn day_ahead_only(day_ahead: &'a HourlyPriceSeries) -> Result<Self, ArbitrageError> {
        ServiceBasket::new(vec![day_ahead], vec![day_ahead])
    }

    /// Day-ahead plus ancillary series. Each ancillary series is a buy and a
    /// sell candidate, except imbalance series which follow `imbalance`.
    pub fn with_ancillary(
        day_ahead: &'a HourlyPriceSeries,
        ancillary: &[&'a HourlyPriceSeries],
        imbalance: ImbalanceRole,
    ) -> Result<Self, ArbitrageError> {
        let mut buy = vec![day_ahead];
        let mut sell = vec![day_ahead];
        for s in ancillary {
            let (as_buy, as_sell) = if s.market().is_imbalance() {
                (imbalance != ImbalanceRole::SellOnly, imbalance != ImbalanceRole::BuyOnly)
            } else {
                (true, true)
            };
            if as_buy {
                buy.push(s);
            }
            if as_sell {
                sell.push(s);
            }
        }
        ServiceBasket::new(buy, sell)
    }

    pub fn with_coverage(mut self, coverage: Coverage) -> Self {
        self.coverage = coverage;
        self
    }

    pub fn zone(&self) -> &str {
        self.buy[0].zone()
    }

    pub fn buy_candidates(&self) -> &[&'a HourlyPriceSeries] {
        &self.buy
    }

    pub fn sell_candidates(&self) -> &[&'a HourlyPriceSeries] {
        &self.sell
    }

    fn members(&self) -> Vec<&'a HourlyPriceSeries> {
        let mut out: Vec<&'a HourlyPriceSeries> = Vec::new();
        for s in self.buy.iter().chain(&self.sell) {
            if !out.iter().any(|m| std::ptr::eq(*m, *s)) {
                out.push(s);
            }
        }
        out
    }
}

/// Direction(s) in which imbalance prices may be traded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImbalanceRole {
    #[default]
    Both,
    BuyOnly,
    SellOnly,
}

struct IndexedBasket<'a, 'b> {
    basket: &'b ServiceBasket<'a>,
    days: Vec<(&'a HourlyPriceSeries, BTreeMap<NaiveDate, DaySlice<'a>>)>,
}

impl<'a, 'b> IndexedBasket<'a, 'b> {
    fn new(basket: &'b ServiceBasket<'a>) -> Self {
        let days = basket
            .members()
            .into_iter()
            .map(|s| {
                let map = split_days(s).into_iter().map(|d| (d.date, d)).collect();
                (s, map)
            })
            .collect();
        IndexedBasket { basket, days }
    }

    fn day_of(&self, series: &HourlyPriceSeries, date: NaiveDate) -> Option<&DaySlice<'a>> {
        self.days
            .iter()
            .find(|(k, _)| std::ptr::eq(*k, series))
            .and_then(|(_, m)| m.get(&date))
    }

    fn candidate_days(
        &self,
        set: &[&'a HourlyPriceSeries],
        date: NaiveDate,
    ) -> Result<Vec<&DaySlice<'a>>, ArbitrageError> {
        let mut out = Vec::with_capacity(set.len());
        let mut length = None;
        for s in set {
            let anchor = s.market() == MarketKind::DayAhead;
            let strict = anchor || self.basket.coverage == Coverage::Complete;
            match self.day_of(s, date) {
                Some(d) if d.is_complete() => {
                    if *length.get_or_insert(d.len()) != d.len() {
                        return Err(ArbitrageError::DayLengthMismatch { date });
                    }
                    out.push(d);
                }
                Some(d) if !strict => out.push(d),
                None if !strict => {}
                Some(_) => {
                    return Err(ArbitrageError::IncompleteDay {
                        market: s.market(),
                        date,
                    })
                }
                None => {
                    return Err(ArbitrageError::MissingDay {
                        market: s.market(),
                        date,
                    })
                }
            }
        }
        Ok(out)
    }

    fn run(&self, date: NaiveDate, eff: EfficiencyPair) -> Result<DailyArbitrageResult, ArbitrageError> {
        let buy_days = self.candidate_days(&self.basket.buy, date)?;
        let sell_days = self.candidate_days(&self.basket.sell, date)?;
        let buy = extreme(buy_days.into_iter(), true).ok_or(ArbitrageError::EmptyBasket("buy"))?;
        let sell = extreme(sell_days.into_iter(), false).ok_or(ArbitrageError::EmptyBasket("sell"))?;
        Ok(result_from(date, buy, sell, eff))
    }

    fn dates(&self) -> BTreeSet<NaiveDate> {
        self.days
            .iter()
            .flat_map(|(_, m)| m.keys().copied())
            .collect()
    }
}

/// Arbitrage on `date` choosing the cheapest buy and the dearest sell over
/// every candidate series and hour.
pub fn multi_service_daily_arbitrage(
    basket: &ServiceBasket<'_>,
    date: NaiveDate,
    eff: EfficiencyPair,
) -> Result<DailyArbitrageResult, ArbitrageError> {
    IndexedBasket::new(basket).run(date, eff)
}

/// Result of running a basket over all of its dates.
#[derive(Debug, Clone, Default)]
pub struct BasketRun {
    pub results: Vec<DailyArbitrageResult>,
    /// Dates skipped because some candidate lacked a usable day.
    pub skipped: Vec<(NaiveDate, String)>,
}

/// Multi-service arbitrage for every date present in any candidate.
pub fn run_basket(basket: &ServiceBasket<'_>, eff: EfficiencyPair) -> BasketRun {
    let indexed = IndexedBasket::new(basket);
    let mut run = BasketRun::default();
    for date in indexed.dates() {
        match indexed.run(date, eff) {
            Ok(r) => run.results.push(r),
            Err(e) => run.skipped.push((date, e.to_string())),
        }
    }
    run
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitableDays {
    pub wear_cost: EurPerMwh,
    pub count: usize,
    pub dates: Vec<NaiveDate>,
}

/// Days whose cycle profit strictly exceeds `wear`.
pub fn count_profitable_days(results: &[DailyArbitrageResult], wear: EurPerMwh) -> ProfitableDays {
    let dates: Vec<NaiveDate> = results
        .iter()
        .filter(|r| r.cycle_profit.0 > wear.0)
        .map(|r| r.date)
        .collect();
    ProfitableDays {
        wear_cost: wear,
        count: dates.len(),
        dates,
    }
}

/// Mean cycle profit over the given days.
pub fn mean_daily_profit(results: &[DailyArbitrageResult]) -> Option<EurPerMwh> {
    if results.is_empty() {
        return None;
    }
    let total: f64 = results.iter().map(|r| r.cycle_profit.0).sum();
    Some(EurPerMwh(total / results.len() as f64))
}
