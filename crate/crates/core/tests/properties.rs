use chrono::NaiveDate;
use proptest::prelude::*;

use pput_core::arbitrage::{
    count_profitable_days, daily_arbitrage, multi_service_daily_arbitrage, raw_cycle_profit,
    run_basket, ImbalanceRole, ServiceBasket,
};
use pput_core::market_data::{
    read_price_csv, split_days, write_price_csv, CoverageReport, Grouping, HourlyPriceSeries,
    MarketKind, PricePoint,
};
use pput_core::reserve::{avg_energy_profit, break_even_band_price, count_profitable_hours};
use pput_core::sweep::{min_wear_for_target, normalize, pput_curve, Application, WearGrid};
use pput_core::{
    BatteryParams, DateRange, Direction, EfficiencyPair, EurPerMw, EurPerMwh, MwhPerMw, PriceMeans,
    ValidationProfile,
};
use pput_fixtures::{civil_hours, date, Madrid};

/// A day of `len` hours (23, 24 or 25) on a matching Madrid date.
fn day_series(market: MarketKind, values: &[f64]) -> HourlyPriceSeries {
    let day = match values.len() {
        23 => date(2019, 3, 31),
        25 => date(2019, 10, 27),
        _ => date(2019, 6, 12),
    };
    let hours = civil_hours(Madrid, day, day);
    assert_eq!(hours.len(), values.len());
    let points = hours
        .into_iter()
        .zip(values)
        .map(|(t, &v)| PricePoint::new(t, v))
        .collect();
    HourlyPriceSeries::new(market, "ES", points).unwrap()
}

fn days_series(market: MarketKind, start: NaiveDate, values: &[Vec<f64>]) -> HourlyPriceSeries {
    let end = start + chrono::Duration::days(values.len() as i64 - 1);
    let hours = civil_hours(Madrid, start, end);
    let flat: Vec<f64> = values.iter().flatten().copied().collect();
    let points = hours
        .into_iter()
        .zip(flat)
        .map(|(t, v)| PricePoint::new(t, v))
        .collect();
    HourlyPriceSeries::new(market, "ES", points).unwrap()
}

fn day_values() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![Just(23usize), Just(24usize), Just(25usize)]
        .prop_flat_map(|n| prop::collection::vec(0.0..=180.3f64, n))
}

/// 24-hour days; the generated June dates have no DST change.
fn june_days(max_days: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..=180.3f64, 24), 1..max_days)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn min_max_equals_brute_force(values in day_values(), rte in 0.5..=1.0f64) {
        let eff = EfficiencyPair::symmetric(rte);
        let s = day_series(MarketKind::DayAhead, &values);
        let r = daily_arbitrage(&split_days(&s)[0], eff).unwrap();
        let mut best = f64::NEG_INFINITY;
        for &b in &values {
            for &sell in &values {
                best = best.max(raw_cycle_profit(b, sell, eff));
            }
        }
        prop_assert_eq!(r.cycle_profit.0, best.max(0.0));
        prop_assert!(r.cycle_profit.0 >= 0.0);
        prop_assert_eq!(r.clamped, best < 0.0);
    }

    #[test]
    fn efficiency_never_hurts(values in day_values(), lo in 0.3..=1.0f64, bump in 0.0..=0.5f64) {
        let hi = (lo + bump).min(1.0);
        let s = day_series(MarketKind::DayAhead, &values);
        let day = &split_days(&s)[0];
        let a = daily_arbitrage(day, EfficiencyPair::symmetric(lo)).unwrap();
        let b = daily_arbitrage(day, EfficiencyPair::symmetric(hi)).unwrap();
        prop_assert!(b.cycle_profit.0 >= a.cycle_profit.0);
    }

    #[test]
    fn basket_dominates_day_ahead(
        da in prop::collection::vec(0.0..=180.3f64, 24),
        dev in prop::collection::vec(0.0..=180.3f64, 24),
        imb in prop::collection::vec(0.0..=180.3f64, 24),
    ) {
        let eff = EfficiencyPair::symmetric(0.85);
        let da = day_series(MarketKind::DayAhead, &da);
        let dev = day_series(MarketKind::DeviationMgmtUp, &dev);
        let imb = day_series(MarketKind::ImbalanceDown, &imb);
        let basket = ServiceBasket::with_ancillary(&da, &[&dev, &imb], ImbalanceRole::Both).unwrap();
        let d = date(2019, 6, 12);
        let multi = multi_service_daily_arbitrage(&basket, d, eff).unwrap();
        let single = daily_arbitrage(&split_days(&da)[0], eff).unwrap();
        prop_assert!(multi.cycle_profit.0 >= single.cycle_profit.0);
        // brute force over (series, hour) pairs
        let all: Vec<f64> = [&da, &dev, &imb].iter().flat_map(|s| s.values()).collect();
        let mut best = f64::NEG_INFINITY;
        for &b in &all {
            for &s in &all {
                best = best.max(raw_cycle_profit(b, s, eff));
            }
        }
        prop_assert_eq!(multi.cycle_profit.0, best.max(0.0));
    }

    #[test]
    fn profitable_days_non_increasing_in_wear(days in june_days(20), w1 in 0.0..150.0f64, dw in 0.0..50.0f64) {
        let s = days_series(MarketKind::DayAhead, date(2019, 6, 1), &days);
        let results = run_basket(&ServiceBasket::day_ahead_only(&s).unwrap(), EfficiencyPair::symmetric(0.85)).results;
        let a = count_profitable_days(&results, EurPerMwh(w1)).count;
        let b = count_profitable_days(&results, EurPerMwh(w1 + dw)).count;
        prop_assert!(b <= a);
    }

    #[test]
    fn pput_curves_monotone_and_superset_dominant(
        da in june_days(15),
        noise in prop::collection::vec(prop::collection::vec(-30.0..30.0f64, 24), 15),
    ) {
        let params = BatteryParams::reference();
        let anc: Vec<Vec<f64>> = da
            .iter()
            .zip(&noise)
            .map(|(d, n)| d.iter().zip(n).map(|(a, b)| (a + b).clamp(0.0, 180.3)).collect())
            .collect();
        let start = date(2019, 6, 1);
        let da = days_series(MarketKind::DayAhead, start, &da);
        let tert = days_series(MarketKind::TertiaryUp, start, &anc[..da.len() / 24]);
        let grid = WearGrid::default_grid();
        let plain = normalize(pput_curve(&Application::day_ahead(&da).unwrap(), &params, &grid).unwrap()).unwrap();
        let basket = ServiceBasket::with_ancillary(&da, &[&tert], ImbalanceRole::Both).unwrap();
        let wide = normalize(pput_curve(&Application::with_ancillary(basket).unwrap(), &params, &grid).unwrap()).unwrap();
        for c in [&plain, &wide] {
            let n = c.normalized.as_ref().unwrap();
            prop_assert!(n.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(n.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(n[n.len() - 1] <= n[0]);
        }
        prop_assert_eq!(plain.total_periods, wide.total_periods);
        for (a, b) in plain.counts.iter().zip(&wide.counts) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn threshold_monotone_and_grid_stable(
        mut profits in prop::collection::vec(0.0..100.0f64, 5..60),
        t1 in 0.01..1.0f64,
        t2 in 0.01..1.0f64,
    ) {
        profits.sort_by(f64::total_cmp);
        let days: Vec<Vec<f64>> = profits
            .iter()
            .map(|&p| {
                // lossless day whose max - min is exactly p
                let mut v = vec![50.0; 24];
                v[3] = 50.0 - p / 2.0;
                v[19] = 50.0 + p / 2.0;
                v
            })
            .collect();
        let s = days_series(MarketKind::DayAhead, date(2019, 6, 1), &days[..days.len().min(29)]);
        let params = BatteryParams::new(100.0, 1000.0, 1.0).unwrap();
        let app = Application::day_ahead(&s).unwrap();
        let coarse_grid = WearGrid::range(0.0, 100.0, 4.0).unwrap();
        let fine_grid = WearGrid::range(0.0, 100.0, 2.0).unwrap();
        let coarse = normalize(pput_curve(&app, &params, &coarse_grid).unwrap()).unwrap();
        let fine = normalize(pput_curve(&app, &params, &fine_grid).unwrap()).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        match (min_wear_for_target(&coarse, lo), min_wear_for_target(&coarse, hi)) {
            (Ok(a), Ok(b)) => prop_assert!(b.grid_wear <= a.grid_wear && b.interpolated_wear <= a.interpolated_wear),
            (Err(_), Ok(_)) => prop_assert!(false, "lower target unattainable but higher attainable"),
            _ => {}
        }
        if let (Ok(c), Ok(f)) = (min_wear_for_target(&coarse, lo), min_wear_for_target(&fine, lo)) {
            prop_assert!((c.interpolated_wear - f.interpolated_wear).abs() < 4.0);
        }
    }

    #[test]
    fn break_even_strictly_increasing_in_wear(
        w in 0.0..200.0f64, dw in 0.01..50.0f64, profit in -20.0..20.0f64, u in 0.001..1.0f64,
    ) {
        let a = break_even_band_price(EurPerMwh(w), EurPerMwh(profit), MwhPerMw(u));
        let b = break_even_band_price(EurPerMwh(w + dw), EurPerMwh(profit), MwhPerMw(u));
        prop_assert!(b.0 > a.0);
        prop_assert_eq!(break_even_band_price(EurPerMwh(w), EurPerMwh(profit), MwhPerMw(0.0)), EurPerMw(0.0));
    }

    #[test]
    fn energy_profit_partial_signs(
        da in 0.0..180.0f64, up in 0.0..180.0f64, down in 0.0..180.0f64, step in 0.1..10.0f64, rte in 0.5..=1.0f64,
    ) {
        let eff = EfficiencyPair::symmetric(rte);
        let m = PriceMeans { day_ahead: EurPerMwh(da), secondary_up: EurPerMwh(up), secondary_down: EurPerMwh(down) };
        let m2 = PriceMeans { day_ahead: EurPerMwh(da + step), ..m };
        prop_assert!(avg_energy_profit(&m2, Direction::Up, eff).0 < avg_energy_profit(&m, Direction::Up, eff).0);
        prop_assert!(avg_energy_profit(&m2, Direction::Down, eff).0 > avg_energy_profit(&m, Direction::Down, eff).0);
    }

    #[test]
    fn profitable_hours_non_increasing(prices in prop::collection::vec(0.0..60.0f64, 24), b1 in 0.0..60.0f64, db in 0.0..30.0f64) {
        use pput_core::market_data::{ReserveHour, ReserveMarketSeries};
        let hours = civil_hours(Madrid, date(2019, 6, 1), date(2019, 6, 1))
            .into_iter()
            .zip(&prices)
            .map(|(t, &p)| ReserveHour { hour_start: t, band_price: p, band_price_down: None, band_up: 1.0, band_down: -1.0, energy_up: 0.0, energy_down: 0.0 })
            .collect();
        let s = ReserveMarketSeries::new("ES", hours).unwrap();
        let p = DateRange::new(date(2019, 6, 1), date(2019, 6, 1));
        let a = count_profitable_hours(&s, EurPerMw(b1), Direction::Up, &p).unwrap();
        let b = count_profitable_hours(&s, EurPerMw(b1 + db), Direction::Up, &p).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn csv_roundtrip_bit_exact(days in june_days(4), drop in prop::collection::vec(any::<bool>(), 96)) {
        let s = days_series(MarketKind::DayAhead, date(2019, 6, 1), &days);
        let kept: Vec<PricePoint> = s.points().iter().zip(&drop).filter(|(_, d)| !**d).map(|(p, _)| *p).collect();
        let s = HourlyPriceSeries::new(MarketKind::DayAhead, "ES", kept).unwrap();
        let mut buf = Vec::new();
        write_price_csv(&s, &mut buf).unwrap();
        let back = read_price_csv(buf.as_slice(), MarketKind::DayAhead, "ES", ValidationProfile::EsCapped).unwrap().series;
        prop_assert_eq!(&back, &s);
        prop_assert!(back.values().zip(s.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        // day partition covers every point once
        let cov = CoverageReport::of(&s);
        prop_assert_eq!(cov.complete_day_hours + cov.incomplete_day_hours, s.len());
        let sum: usize = split_days(&s).iter().map(|d| d.len()).sum();
        prop_assert_eq!(sum, s.len());
    }

    #[test]
    fn mean_of_equal_halves(a in prop::collection::vec(-100.0..100.0f64, 24), b in prop::collection::vec(-100.0..100.0f64, 24)) {
        let s = days_series(MarketKind::DayAhead, date(2019, 6, 1), &[a.clone(), b.clone()]);
        let annual = pput_core::market_data::price_stats(&s, Grouping::Annual)[0].summary.mean;
        let daily = pput_core::market_data::price_stats(&s, Grouping::Daily);
        let halves = (daily[0].summary.mean + daily[1].summary.mean) / 2.0;
        prop_assert!((annual - halves).abs() < 1e-9);
    }
}
