use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, Context};
use chrono::Datelike;
use pput_acquire::verify_cache;
use pput_core::arbitrage::{count_profitable_days, mean_daily_profit, run_basket, BasketRun, ServiceBasket};
use pput_core::market_data::{describe, mean_daily_std, price_stats_complete_days, CoverageReport, Grouping, Summary};
use pput_core::reserve::{reserve_report, reserve_report_hourly, reserve_report_table, EnergyMode, HourlyPrices};
use pput_core::sweep::{compare, min_wear_for_target, normalize, pput_curve, EnergyPrices, SweepError};
use pput_core::{
    Application, ApplicationKind, DailyArbitrageResult, DateRange, HourlyPriceSeries, MarketKind, PriceMeans,
    ReserveEconomics, ReserveTotals, UtilizationCurve,
};
use pput_core::units::EurPerMwh;
use serde::Serialize;

use crate::config::{period_label, DatasetKind, RunConfig, Source};
use crate::data::{load_one, resolve_path, DataSet, Loaded};
use crate::output::{cell, round_to, sha256_hex, Writer};

/// Exit-code classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Usage = 1,
    Data = 2,
    Analysis = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        kind: FailureKind::Usage,
        error: e.into(),
    }
}

pub fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        kind: FailureKind::Data,
        error: e.into(),
    }
}

pub fn analysis(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        kind: FailureKind::Analysis,
        error: e.into(),
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

// ---------------------------------------------------------------- validate

#[derive(Debug, Serialize)]
struct IncompleteDay {
    date: chrono::NaiveDate,
    starts_late: bool,
    ends_early: bool,
    gap_hours: usize,
    bad_length: Option<usize>,
}

#[derive(Debug, Serialize)]
struct DatasetValidation {
    dataset: String,
    file: String,
    ok: bool,
    error: Option<String>,
    sha256: Option<String>,
    rows_parsed: Option<usize>,
    points: Option<usize>,
    skipped_rows: Vec<(u64, String)>,
    warnings: usize,
    span: Option<String>,
    complete_days: Option<usize>,
    complete_day_hours: Option<usize>,
    gap_hours: Option<usize>,
    day_lengths: Vec<(usize, usize)>,
    incomplete_days: Vec<IncompleteDay>,
}

#[derive(Debug, Serialize)]
struct ValidationSummary {
    passed: bool,
    datasets: Vec<DatasetValidation>,
}

/// Checks every dataset; failures are collected, gaps are warnings.
pub fn validate(config: &RunConfig, out: &mut Writer) -> CmdResult<bool> {
    let mut fetcher = None;
    let mut rows = Vec::new();
    for spec in &config.datasets {
        let label = spec.label();
        let resolved = resolve_path(config, spec, &mut fetcher);
        let file = match (&resolved, &spec.source) {
            (Ok(p), _) | (Err(_), Source::Path(p)) => p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            (Err(_), Source::Fetch(span)) => format!("fetch {span}"),
        };
        let mut v = DatasetValidation {
            dataset: label.clone(),
            file,
            ok: false,
            error: None,
            sha256: None,
            rows_parsed: None,
            points: None,
            skipped_rows: Vec::new(),
            warnings: 0,
            span: None,
            complete_days: None,
            complete_day_hours: None,
            gap_hours: None,
            day_lengths: Vec::new(),
            incomplete_days: Vec::new(),
        };
        match resolved.and_then(|p| load_one(config, spec, p)) {
            Err(e) => {
                println!("{label}: FAILED: {e:#}");
                v.error = Some(format!("{e:#}"));
            }
            Ok(d) => {
                let prices = match &d.data {
                    Loaded::Prices(s) => s.clone(),
                    Loaded::Reserve(r) => r.band_price_series(pput_core::Direction::Up),
                };
                let cov = CoverageReport::of(&prices);
                let gaps = cov.gap_hours;
                println!("{label}: {} complete days, {gaps} gaps", cov.complete_days);
                for s in &d.report.skipped {
                    println!("  warning: row {} skipped: {}", s.row, s.reason);
                }
                for (date, why) in &cov.incomplete_days {
                    println!(
                        "  warning: {date} incomplete (starts late: {}, ends early: {}, missing hours: {})",
                        why.starts_late, why.ends_early, why.gap_hours
                    );
                }
                v.ok = true;
                v.sha256 = Some(d.sha256);
                v.rows_parsed = Some(d.report.rows_parsed);
                v.points = Some(cov.points);
                v.skipped_rows = d.report.skipped.iter().map(|s| (s.row, s.reason.clone())).collect();
                v.warnings = d.report.warnings.len();
                v.span = prices.span().map(|s| s.to_string());
                v.complete_days = Some(cov.complete_days);
                v.complete_day_hours = Some(cov.complete_day_hours);
                v.gap_hours = Some(gaps);
                v.day_lengths = cov.day_lengths;
                v.incomplete_days = cov
                    .incomplete_days
                    .into_iter()
                    .map(|(date, w)| IncompleteDay {
                        date,
                        starts_late: w.starts_late,
                        ends_early: w.ends_early,
                        gap_hours: w.gap_hours,
                        bad_length: w.bad_length,
                    })
                    .collect();
            }
        }
        rows.push(v);
    }
    let passed = rows.iter().all(|r| r.ok);
    out.json("validation.json", &ValidationSummary { passed, datasets: rows }).map_err(analysis)?;
    Ok(passed)
}

// ---------------------------------------------------------------- fetch

pub fn fetch(config: &RunConfig) -> CmdResult {
    let mut fetcher = None;
    let mut any = false;
    for spec in config.datasets.iter().filter(|d| matches!(d.source, Source::Fetch(_))) {
        any = true;
        let path = resolve_path(config, spec, &mut fetcher).map_err(data)?;
        println!("{}: {}", spec.label(), path.display());
    }
    if !any {
        println!("no datasets use `fetch`");
        return Ok(());
    }
    if let Some(f) = &fetcher {
        println!("network requests: {}", f.requests_made());
    }
    let source = config.source.as_ref().expect("checked at config load");
    let report = verify_cache(source).map_err(data)?;
    println!(
        "cache: {} verified, {} mismatched, {} unverifiable, {} corrupt",
        report.verified.len(),
        report.mismatches.len(),
        report.unverifiable.len(),
        report.corrupt.len()
    );
    for issue in report.mismatches.iter().chain(&report.unverifiable).chain(&report.corrupt) {
        println!("  {}: {}", issue.entry.display(), issue.reason);
    }
    if report.is_clean() {
        Ok(())
    } else {
        Err(data(anyhow!("cache verification found problems")))
    }
}

// ---------------------------------------------------------------- arbitrage

#[derive(Debug, Serialize)]
struct YearSummary {
    year: i32,
    days: usize,
    mean_daily_profit: Option<f64>,
    profitable_days: usize,
}

#[derive(Debug, Serialize)]
struct BasketSummary {
    markets: Vec<MarketKind>,
    days: usize,
    mean_daily_profit: Option<f64>,
    profitable_days: usize,
    years: Vec<YearSummary>,
    skipped_days: Vec<(chrono::NaiveDate, String)>,
}

#[derive(Debug, Serialize)]
struct ZoneArbitrage {
    zone: String,
    day_ahead: BasketSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    with_ancillary: Option<BasketSummary>,
}

#[derive(Debug, Serialize)]
struct ArbitrageSummary {
    wear_cost: f64,
    round_trip_efficiency: f64,
    zones: Vec<ZoneArbitrage>,
}

fn summarize(run: &BasketRun, markets: Vec<MarketKind>, wear: EurPerMwh) -> BasketSummary {
    let mut by_year: BTreeMap<i32, Vec<DailyArbitrageResult>> = BTreeMap::new();
    for r in &run.results {
        by_year.entry(r.date.year()).or_default().push(r.clone());
    }
    BasketSummary {
        markets,
        days: run.results.len(),
        mean_daily_profit: mean_daily_profit(&run.results).map(|p| p.0),
        profitable_days: count_profitable_days(&run.results, wear).count,
        years: by_year
            .into_iter()
            .map(|(year, rs)| YearSummary {
                year,
                days: rs.len(),
                mean_daily_profit: mean_daily_profit(&rs).map(|p| p.0),
                profitable_days: count_profitable_days(&rs, wear).count,
            })
            .collect(),
        skipped_days: run.skipped.clone(),
    }
}

const DAILY_HEADER: &str = "date,buy_hour,sell_hour,buy_price,sell_price,buy_source,sell_source,cycle_profit,clamped";

fn daily_rows(results: &[DailyArbitrageResult]) -> Vec<String> {
    results
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                r.date,
                r.buy_hour,
                r.sell_hour,
                r.buy_price,
                r.sell_price,
                r.buy_source.name(),
                r.sell_source.name(),
                r.cycle_profit.0,
                r.clamped
            )
        })
        .collect()
}

fn restricted(series: &HourlyPriceSeries, period: Option<DateRange>) -> HourlyPriceSeries {
    match period {
        Some(p) => series.restrict(&p),
        None => series.clone(),
    }
}

pub fn arbitrage(config: &RunConfig, ds: &DataSet, out: &mut Writer) -> CmdResult {
    let section = config.arbitrage.as_ref().ok_or_else(|| usage(anyhow!("config has no [arbitrage] section")))?;
    let params = config.battery;
    let eff = params.efficiency();
    let wear = params.wear_cost();
    let mut zones = Vec::new();
    for zone in config.zones() {
        let Some(da) = ds.price(&zone, MarketKind::DayAhead) else { continue };
        let da = restricted(da, section.period);
        let run = run_basket(&ServiceBasket::day_ahead_only(&da).map_err(analysis)?, eff);
        out.csv(&format!("arbitrage/{zone}_day_ahead_daily.csv"), DAILY_HEADER, &daily_rows(&run.results))
            .map_err(analysis)?;
        let day_ahead = summarize(&run, vec![MarketKind::DayAhead], wear);

        let ancillary: Vec<HourlyPriceSeries> = config
            .ancillary_in(&zone)
            .filter_map(|m| ds.price(&zone, m))
            .map(|s| restricted(s, section.period))
            .collect();
        let with_ancillary = if ancillary.is_empty() {
            None
        } else {
            let refs: Vec<&HourlyPriceSeries> = ancillary.iter().collect();
            let basket = ServiceBasket::with_ancillary(&da, &refs, section.imbalance_role)
                .map_err(analysis)?
                .with_coverage(section.coverage);
            let run = run_basket(&basket, eff);
            out.csv(&format!("arbitrage/{zone}_with_ancillary_daily.csv"), DAILY_HEADER, &daily_rows(&run.results))
                .map_err(analysis)?;
            let mut markets = vec![MarketKind::DayAhead];
            markets.extend(ancillary.iter().map(|s| s.market()));
            Some(summarize(&run, markets, wear))
        };
        print_arbitrage(&zone, &day_ahead, with_ancillary.as_ref());
        zones.push(ZoneArbitrage {
            zone,
            day_ahead,
            with_ancillary,
        });
    }
    out.json(
        "arbitrage/summary.json",
        &ArbitrageSummary {
            wear_cost: wear.0,
            round_trip_efficiency: params.round_trip_efficiency(),
            zones,
        },
    )
    .map_err(analysis)?;
    Ok(())
}

fn print_arbitrage(zone: &str, da: &BasketSummary, anc: Option<&BasketSummary>) {
    let show = |name: &str, s: &BasketSummary| {
        for y in &s.years {
            println!(
                "{zone} {name} {}: {} days, mean daily profit {:.2} EUR/MWh, {} profitable days",
                y.year,
                y.days,
                y.mean_daily_profit.unwrap_or(0.0),
                y.profitable_days
            );
        }
    };
    show("day-ahead", da);
    if let Some(a) = anc {
        show("with-ancillary", a);
    }
}

// ---------------------------------------------------------------- reserve

#[derive(Debug, Serialize)]
struct ReserveRow {
    input: String,
    period_label: String,
    #[serde(flatten)]
    economics: ReserveEconomics,
}

#[derive(Debug, Serialize)]
struct ReserveSummary {
    wear_cost: f64,
    rows: Vec<ReserveRow>,
}

/// Whole calendar years inside `span`, or the span itself when there are none.
fn default_periods(span: DateRange) -> Vec<DateRange> {
    let years: Vec<DateRange> = (span.start.year()..=span.end.year())
        .map(DateRange::year)
        .filter(|y| span.covers(y))
        .collect();
    if years.is_empty() {
        vec![span]
    } else {
        years
    }
}

pub fn reserve(config: &RunConfig, ds: &DataSet, out: &mut Writer) -> CmdResult {
    let section = config.reserve.as_ref().ok_or_else(|| usage(anyhow!("config has no [reserve] section")))?;
    let params = config.battery;
    let mut rows = Vec::new();

    for a in &section.aggregates {
        let period = a.period.range().map_err(usage)?;
        let totals = ReserveTotals {
            band_up: a.band_up,
            energy_up: a.energy_up,
            band_down: a.band_down,
            energy_down: a.energy_down,
        };
        let means = PriceMeans {
            day_ahead: EurPerMwh(a.day_ahead),
            secondary_up: EurPerMwh(a.secondary_up),
            secondary_down: EurPerMwh(a.secondary_down),
        };
        for economics in reserve_report_table(&totals, &means, &params, period).map_err(analysis)? {
            rows.push(ReserveRow {
                input: "aggregates".into(),
                period_label: period_label(&period),
                economics,
            });
        }
    }

    for (zone, series) in &ds.reserve {
        let price = |m| ds.price(zone, m).ok_or_else(|| usage(anyhow!("reserve: missing {zone}/{}", m.name())));
        let prices = HourlyPrices {
            day_ahead: price(MarketKind::DayAhead)?,
            secondary_up: price(MarketKind::SecondaryEnergyUp)?,
            secondary_down: price(MarketKind::SecondaryEnergyDown)?,
        };
        let Some(span) = series.span() else { continue };
        let periods = section.periods.clone().unwrap_or_else(|| default_periods(span));
        for period in periods {
            for mode in &section.modes {
                let result = match mode {
                    EnergyMode::Table => {
                        let means = prices
                            .means(&period)
                            .ok_or_else(|| analysis(anyhow!("{zone}: no prices in {period}")))?;
                        reserve_report(series, &means, &params, period)
                    }
                    EnergyMode::Hourly => reserve_report_hourly(series, &prices, &params, period),
                };
                let result = result.with_context(|| format!("reserve {zone} {period}")).map_err(analysis)?;
                for economics in result {
                    rows.push(ReserveRow {
                        input: zone.clone(),
                        period_label: period_label(&period),
                        economics,
                    });
                }
            }
        }
    }

    let mode_name = |m: EnergyMode| match m {
        EnergyMode::Table => "table",
        EnergyMode::Hourly => "hourly",
    };
    let long: Vec<String> = rows
        .iter()
        .map(|r| {
            let e = &r.economics;
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.input,
                r.period_label,
                mode_name(e.mode),
                e.direction.name(),
                e.avg_band_utilization.0,
                e.avg_energy_profit.0,
                e.effective_energy_cost.0,
                e.break_even_band_price.0,
                cell(e.profitable_hours),
                cell(e.total_hours),
                e.period
            )
        })
        .collect();
    out.csv(
        "reserve/economics.csv",
        "input,period,mode,direction,avg_band_utilization,avg_energy_profit,effective_energy_cost,break_even_band_price,profitable_hours,total_hours,date_range",
        &long,
    )
    .map_err(analysis)?;

    // one row per input/period/mode with both directions side by side
    let mut wide = Vec::new();
    for pair in rows.chunks(2) {
        let (up, down) = (&pair[0], &pair[1]);
        let line = format!(
            "{},{},{},{},{},{},{}",
            up.input,
            up.period_label,
            mode_name(up.economics.mode),
            up.economics.break_even_band_price.0,
            down.economics.break_even_band_price.0,
            cell(up.economics.profitable_hours),
            cell(down.economics.profitable_hours)
        );
        let hours = match (up.economics.profitable_hours, down.economics.profitable_hours) {
            (Some(u), Some(d)) => format!(", profitable hours {u} / {d}"),
            _ => String::new(),
        };
        println!(
            "{} {} {}: break-even up {:.2} / down {:.2} EUR/MW{hours}",
            up.input,
            up.period_label,
            mode_name(up.economics.mode),
            up.economics.break_even_band_price.0,
            down.economics.break_even_band_price.0,
        );
        wide.push(line);
    }
    out.csv(
        "reserve/break_even.csv",
        "input,period,mode,break_even_up,break_even_down,profitable_hours_up,profitable_hours_down",
        &wide,
    )
    .map_err(analysis)?;
    out.json(
        "reserve/break_even.json",
        &ReserveSummary {
            wear_cost: params.wear_cost().0,
            rows,
        },
    )
    .map_err(analysis)?;
    Ok(())
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Serialize)]
#[serde(tag = "status")]
enum ThresholdResult {
    #[serde(rename = "ok")]
    Found {
        /// Interpolated crossing, rounded to 0.1 EUR/MWh.
        min_wear_cost: f64,
        interpolated_wear_cost: f64,
        grid_wear_cost: f64,
    },
    NotAttainable,
    NoData,
}

#[derive(Debug, Serialize)]
struct ThresholdRow {
    application: ApplicationKind,
    zone: String,
    total_periods: usize,
    period_unit: pput_core::sweep::PeriodUnit,
    #[serde(flatten)]
    result: ThresholdResult,
}

#[derive(Debug, Serialize)]
struct ThresholdSummary {
    target: f64,
    battery_wear_cost: f64,
    wear_grid: Vec<f64>,
    thresholds: Vec<ThresholdRow>,
}

fn curve_for(
    kind: ApplicationKind,
    zone: &str,
    config: &RunConfig,
    ds: &DataSet,
) -> Result<UtilizationCurve, Failure> {
    let section = config.sweep.as_ref().expect("sweep section");
    let params = config.battery;
    let grid = &section.wear_grid;
    let period = section.period;
    let need = |m: MarketKind| {
        ds.price(zone, m)
            .map(|s| restricted(s, period))
            .ok_or_else(|| usage(anyhow!("sweep {kind}: missing {zone}/{}", m.name())))
    };
    let curve = match kind {
        ApplicationKind::ArbDayAhead => {
            let da = need(MarketKind::DayAhead)?;
            pput_curve(&Application::day_ahead(&da).map_err(analysis)?, &params, grid)
        }
        ApplicationKind::ArbWithAncillary => {
            let da = need(MarketKind::DayAhead)?;
            let arb = config.arbitrage.as_ref();
            let ancillary: Vec<HourlyPriceSeries> = config.ancillary_in(zone).map(need).collect::<Result<_, _>>()?;
            let refs: Vec<&HourlyPriceSeries> = ancillary.iter().collect();
            let role = arb.map(|a| a.imbalance_role).unwrap_or_default();
            let coverage = arb.map(|a| a.coverage).unwrap_or_default();
            let basket = ServiceBasket::with_ancillary(&da, &refs, role).map_err(analysis)?.with_coverage(coverage);
            pput_curve(&Application::with_ancillary(basket).map_err(analysis)?, &params, grid)
        }
        ApplicationKind::SecondaryUp | ApplicationKind::SecondaryDown => {
            let series = ds
                .reserve
                .get(zone)
                .ok_or_else(|| usage(anyhow!("sweep {kind}: missing {zone}/Reserve")))?;
            let (da, up, down) = (
                need(MarketKind::DayAhead)?,
                need(MarketKind::SecondaryEnergyUp)?,
                need(MarketKind::SecondaryEnergyDown)?,
            );
            let hourly = HourlyPrices {
                day_ahead: &da,
                secondary_up: &up,
                secondary_down: &down,
            };
            let eval_period = period.or_else(|| series.span());
            let prices = match section.energy {
                EnergyMode::Hourly => EnergyPrices::Hourly(hourly),
                EnergyMode::Table => match eval_period.and_then(|p| hourly.means(&p)) {
                    Some(m) => EnergyPrices::Means(m),
                    None => EnergyPrices::Hourly(hourly),
                },
            };
            let direction = kind.direction().expect("reserve kind");
            let app = Application::secondary(direction, series, prices, period).map_err(analysis)?;
            pput_curve(&app, &params, grid)
        }
    };
    curve.with_context(|| format!("sweep {kind} {zone}")).map_err(analysis)
}

pub fn sweep(config: &RunConfig, ds: &DataSet, out: &mut Writer) -> CmdResult {
    let section = config.sweep.as_ref().ok_or_else(|| usage(anyhow!("config has no [sweep] section")))?;
    let mut normalized = Vec::new();
    let mut thresholds = Vec::new();
    for kind in &section.applications {
        for zone in config.sweep_zones(*kind) {
            let curve = curve_for(*kind, &zone, config, ds)?;
            let (curve, result) = match normalize(curve.clone()) {
                Err(SweepError::NoPeriods) => (curve, ThresholdResult::NoData),
                Err(e) => return Err(analysis(e)),
                Ok(n) => {
                    let result = match min_wear_for_target(&n, section.target) {
                        Ok(t) => ThresholdResult::Found {
                            min_wear_cost: round_to(t.interpolated_wear, 1),
                            interpolated_wear_cost: t.interpolated_wear,
                            grid_wear_cost: t.grid_wear,
                        },
                        Err(SweepError::NotAttainable { .. }) => ThresholdResult::NotAttainable,
                        Err(e) => return Err(analysis(e)),
                    };
                    normalized.push(n.clone());
                    (n, result)
                }
            };
            let rows: Vec<String> = curve
                .wear_grid
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let n = curve.normalized.as_ref().map(|n| n[i]);
                    format!("{w},{},{}", curve.counts[i], cell(n))
                })
                .collect();
            out.csv(&format!("sweep/curve_{kind}_{zone}.csv"), "wear_cost,count,normalized", &rows)
                .map_err(analysis)?;
            match &result {
                ThresholdResult::Found { min_wear_cost, .. } => println!(
                    "{kind} {zone}: {} {}s, {}% utilization down to wear cost {min_wear_cost} EUR/MWh",
                    curve.total_periods,
                    period_unit_name(curve.period_unit),
                    section.target * 100.0
                ),
                ThresholdResult::NotAttainable => println!("{kind} {zone}: target {} not attainable", section.target),
                ThresholdResult::NoData => println!("{kind} {zone}: no complete periods"),
            }
            thresholds.push(ThresholdRow {
                application: *kind,
                zone,
                total_periods: curve.total_periods,
                period_unit: curve.period_unit,
                result,
            });
        }
    }
    if !normalized.is_empty() {
        let cmp = compare(&normalized).map_err(analysis)?;
        let mut rows = Vec::new();
        for (r, w) in cmp.wear_grid.iter().enumerate() {
            for (c, col) in cmp.columns.iter().enumerate() {
                rows.push(format!("{w},{},{},{}", col.application, col.zone, cmp.values[c][r]));
            }
        }
        out.csv("sweep/comparison.csv", "wear_cost,application,zone,normalized", &rows)
            .map_err(analysis)?;
        let leaders: Vec<String> = cmp
            .wear_grid
            .iter()
            .zip(&cmp.leaders)
            .map(|(w, l)| {
                let names: Vec<String> = l
                    .iter()
                    .map(|&c| format!("{}/{}", cmp.columns[c].application, cmp.columns[c].zone))
                    .collect();
                format!("{w},{}", names.join(";"))
            })
            .collect();
        out.csv("sweep/leaders.csv", "wear_cost,leaders", &leaders).map_err(analysis)?;
    }
    out.json(
        "sweep/thresholds.json",
        &ThresholdSummary {
            target: section.target,
            battery_wear_cost: config.battery.wear_cost().0,
            wear_grid: section.wear_grid.points().to_vec(),
            thresholds,
        },
    )
    .map_err(analysis)?;
    Ok(())
}

fn period_unit_name(u: pput_core::sweep::PeriodUnit) -> &'static str {
    match u {
        pput_core::sweep::PeriodUnit::Day => "day",
        pput_core::sweep::PeriodUnit::Hour => "hour",
    }
}

// ---------------------------------------------------------------- stats

/// Up and down series summarized together.
const POOLED: [(&str, MarketKind, MarketKind); 3] = [
    ("DeviationMgmt", MarketKind::DeviationMgmtUp, MarketKind::DeviationMgmtDown),
    ("Tertiary", MarketKind::TertiaryUp, MarketKind::TertiaryDown),
    ("Imbalance", MarketKind::ImbalanceUp, MarketKind::ImbalanceDown),
];

fn years_of(s: &HourlyPriceSeries) -> Vec<i32> {
    s.span().map(|sp| (sp.start.year()..=sp.end.year()).collect()).unwrap_or_default()
}

fn stat_row(zone: &str, market: &str, year: i32, s: &Summary, daily_std: Option<f64>) -> String {
    format!("{zone},{market},{year},{},{},{},{},{}", s.count, s.mean, s.median, s.std, cell(daily_std))
}

pub fn stats(config: &RunConfig, ds: &DataSet, out: &mut Writer) -> CmdResult {
    let section = config.stats.clone().unwrap_or_default();
    let wanted: Option<Vec<MarketKind>> = section
        .markets
        .map(|names| {
            names
                .iter()
                .map(|n| n.parse::<MarketKind>().map_err(|_| usage(anyhow!("stats: unknown market `{n}`"))))
                .collect::<Result<_, _>>()
        })
        .transpose()?;
    let mut rows = Vec::new();
    for zone in config.zones() {
        for spec in config.datasets.iter().filter(|d| d.zone == zone) {
            let DatasetKind::Market(m) = spec.kind else { continue };
            if wanted.as_ref().is_some_and(|w| !w.contains(&m)) {
                continue;
            }
            let Some(series) = ds.price(&zone, m) else { continue };
            for g in price_stats_complete_days(series, Grouping::Annual) {
                let pput_core::market_data::GroupKey::Year(y) = g.key else { continue };
                let daily = mean_daily_std(&series.restrict(&DateRange::year(y)));
                rows.push(stat_row(&zone, m.name(), y, &g.summary, daily));
            }
        }
        for (name, up, down) in POOLED {
            let (Some(u), Some(d)) = (ds.price(&zone, up), ds.price(&zone, down)) else { continue };
            if wanted.as_ref().is_some_and(|w| !w.contains(&up) || !w.contains(&down)) {
                continue;
            }
            let mut years = years_of(u);
            years.extend(years_of(d));
            years.sort();
            years.dedup();
            for y in years {
                let period = DateRange::year(y);
                let mut values = pput_core::market_data::complete_day_values(&u.restrict(&period));
                values.extend(pput_core::market_data::complete_day_values(&d.restrict(&period)));
                if let Some(s) = describe(&values) {
                    rows.push(stat_row(&zone, &format!("{name}(pooled)"), y, &s, None));
                }
            }
        }
    }
    out.csv("stats/price_stats.csv", "zone,market,year,count,mean,median,std,mean_daily_std", &rows)
        .map_err(analysis)?;
    Ok(())
}

// ---------------------------------------------------------------- report

#[derive(Debug, Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

/// Lists every file written under the output directory with its hash.
pub fn manifest(out: &mut Writer) -> CmdResult {
    let mut entries: Vec<ManifestEntry> = out
        .written
        .iter()
        .map(|p| -> anyhow::Result<ManifestEntry> {
            let rel = p.strip_prefix(&out.dir).unwrap_or(p).to_string_lossy().replace('\\', "/");
            Ok(ManifestEntry {
                path: rel,
                sha256: sha256_hex(&std::fs::read(p)?),
            })
        })
        .collect::<anyhow::Result<_>>()
        .map_err(analysis)?;
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    entries.dedup_by(|a, b| a.path == b.path);
    out.json("manifest.json", &serde_json::json!({ "files": entries })).map_err(analysis)?;
    Ok(())
}
