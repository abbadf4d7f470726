mod common;

use std::fs;

use common::*;
use pput_fixtures::{civil_hours, date, price_csv, reserve_csv, Madrid, ReserveRow, SyntheticMarket};

#[test]
fn validate_complete_year() {
    let dir = tempfile::tempdir().unwrap();
    let files = SyntheticMarket::spain(2019, 3).write(&dir.path().join("data")).unwrap();
    let config = format!("{BATTERY}{}", dataset("DayAhead", "ES", files.price("DayAhead")));
    let run = run_config(dir.path(), "validate", &config);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.contains("ES/DayAhead: 365 complete days, 0 gaps"), "{}", run.stdout);
    let report = json(&dir.path().join("out/validation.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["datasets"][0]["day_lengths"], serde_json::json!([[23, 1], [24, 363], [25, 1]]));
}

#[test]
fn validate_gap_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<_> = civil_hours(Madrid, date(2019, 11, 27), date(2019, 11, 29))
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i != 30)
        .map(|(i, t)| (t, Some(40.0 + i as f64 % 7.0)))
        .collect();
    let path = dir.path().join("da.csv");
    fs::write(&path, price_csv(&rows)).unwrap();
    let run = run_config(dir.path(), "validate", &format!("{BATTERY}{}", dataset("DayAhead", "ES", &path)));
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.contains("2 complete days, 1 gaps"), "{}", run.stdout);
    assert!(run.stdout.contains("warning: 2019-11-28 incomplete"), "{}", run.stdout);
}

#[test]
fn validate_cap_violation_fails_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("da.csv");
    fs::write(&path, "hour_start,value\n2019-11-28T00:00:00+01:00,50\n2019-11-28T01:00:00+01:00,200\n").unwrap();
    let run = run_config(dir.path(), "validate", &format!("{BATTERY}{}", dataset("DayAhead", "ES", &path)));
    assert_eq!(run.code, 2);
    assert!(run.stdout.contains("row 3"), "{}", run.stdout);

    // the same value passes an uncapped zone
    let run = run_config(
        dir.path(),
        "validate",
        &format!("{BATTERY}{}", dataset("DayAhead", "FR", &path)),
    );
    assert_eq!(run.code, 0, "{}", run.stdout);
}

#[test]
fn unreadable_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere/da.csv");
    let run = run_config(dir.path(), "validate", &format!("{BATTERY}{}", dataset("DayAhead", "ES", &missing)));
    assert_ne!(run.code, 0);
    assert!(run.stdout.contains("nowhere/da.csv"), "{}", run.stdout);
    let run = run_config(
        dir.path(),
        "arbitrage",
        &format!("{BATTERY}{}[arbitrage]\n", dataset("DayAhead", "ES", &missing)),
    );
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("nowhere/da.csv"), "{}", run.stderr);
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(pput(&[]).code, 1);
    assert_eq!(pput(&["sweep"]).code, 1);
    assert_eq!(pput(&["frobnicate", "--config", "x"]).code, 1);
    assert_eq!(pput(&["validate", "--config", "/does/not/exist.toml"]).code, 1);
    assert_eq!(pput(&["--version"]).code, 0);

    let dir = tempfile::tempdir().unwrap();
    // requested analysis without its datasets: every missing one is listed
    let run = run_config(dir.path(), "report", &format!("{BATTERY}[reserve]\n[arbitrage]\n"));
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("arbitrage: a DayAhead dataset"), "{}", run.stderr);
    assert!(run.stderr.contains("reserve: a Reserve dataset"), "{}", run.stderr);

    let path = dir.path().join("da.csv");
    fs::write(&path, "hour_start,value\n").unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, format!("{BATTERY}{}[sweep]\napplications=[\"ArbDayAhead\"]\n", dataset("DayAhead", "ES", &path))).unwrap();
    let run = pput(&["sweep", "--config", cfg.to_str().unwrap(), "--wear-grid", "10:0:1"]);
    assert_eq!(run.code, 1, "{}", run.stderr);
}

#[test]
fn arbitrage_two_days_by_hand() {
    let dir = tempfile::tempdir().unwrap();
    let hours = civil_hours(Madrid, date(2019, 11, 27), date(2019, 11, 28));
    let rows: Vec<_> = hours
        .iter()
        .enumerate()
        .map(|(i, t)| (*t, Some(if i < 24 { 40.0 + i as f64 } else { 50.0 })))
        .collect();
    let path = dir.path().join("da.csv");
    fs::write(&path, price_csv(&rows)).unwrap();
    let run = run_config(dir.path(), "arbitrage", &format!("{BATTERY}{}[arbitrage]\n", dataset("DayAhead", "ES", &path)));
    assert_eq!(run.code, 0, "{}", run.stderr);

    let daily = csv_rows(&dir.path().join("out/arbitrage/ES_day_ahead_daily.csv"));
    assert_eq!(daily.len(), 2);
    let e = 0.85f64.sqrt();
    let expected = e * 63.0 - 40.0 / e;
    assert_eq!(&daily[0][..7], ["2019-11-27", "0", "23", "40", "63", "DayAhead", "DayAhead"]);
    assert!((daily[0][7].parse::<f64>().unwrap() - expected).abs() < 1e-12);
    assert_eq!(daily[0][8], "false");
    assert_eq!(daily[1], ["2019-11-28", "0", "0", "50", "50", "DayAhead", "DayAhead", "0", "true"]);

    let summary = json(&dir.path().join("out/arbitrage/summary.json"));
    let zone = &summary["zones"][0];
    assert!(zone.get("with_ancillary").is_none(), "no basket, no multi-service section");
    assert_eq!(zone["day_ahead"]["profitable_days"], 0);
    let mean = zone["day_ahead"]["mean_daily_profit"].as_f64().unwrap();
    assert!((mean - expected / 2.0).abs() < 1e-12);
    assert_eq!(summary["wear_cost"], 100.0);
    assert!(summary["metadata"]["config_sha256"].is_string());
    let text = fs::read_to_string(dir.path().join("out/arbitrage/ES_day_ahead_daily.csv")).unwrap();
    assert!(text.starts_with("# tool: pput "));
    assert!(text.contains("# dataset ES/DayAhead: sha256 "));
    assert!(text.contains("# convention break_even: (wear cost - energy profit) * average band utilization"));
}

#[test]
fn arbitrage_with_basket_dominates() {
    let dir = tempfile::tempdir().unwrap();
    let files = SyntheticMarket::spain(2019, 5).write(&dir.path().join("data")).unwrap();
    let mut config = BATTERY.to_string();
    for m in ["DayAhead", "DeviationMgmtUp", "TertiaryDown", "ImbalanceUp", "ImbalanceDown"] {
        config.push_str(&dataset(m, "ES", files.price(m)));
    }
    config.push_str("[arbitrage]\nimbalance_role = \"both\"\n");
    let run = run_config(dir.path(), "arbitrage", &config);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let da = csv_rows(&dir.path().join("out/arbitrage/ES_day_ahead_daily.csv"));
    let multi = csv_rows(&dir.path().join("out/arbitrage/ES_with_ancillary_daily.csv"));
    assert_eq!(da.len(), 365);
    assert_eq!(multi.len(), 365);
    for (a, b) in da.iter().zip(&multi) {
        assert_eq!(a[0], b[0]);
        assert!(b[7].parse::<f64>().unwrap() >= a[7].parse::<f64>().unwrap());
    }
    let summary = json(&dir.path().join("out/arbitrage/summary.json"));
    let markets = &summary["zones"][0]["with_ancillary"]["markets"];
    assert_eq!(markets.as_array().unwrap().len(), 5);
}

#[test]
fn reserve_hourly_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let files = SyntheticMarket::spain(2019, 9).write(&dir.path().join("data")).unwrap();
    let config = format!("{BATTERY}{}[reserve]\nmodes = [\"table\", \"hourly\"]\n", all_datasets(&files, "ES"));
    let run = run_config(dir.path(), "reserve", &config);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = csv_rows(&dir.path().join("out/reserve/economics.csv"));
    assert_eq!(rows.len(), 4);

    // brute force straight from the fixture files
    let read = |p: &std::path::Path| -> Vec<Vec<f64>> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
            .collect()
    };
    let reserve = read(&files.reserve);
    let da = read(files.price("DayAhead"));
    let up = read(files.price("SecondaryEnergyUp"));
    let e = 0.85f64.sqrt();
    let (mut band, mut energy, mut num) = (0.0, 0.0, 0.0);
    for ((r, d), u) in reserve.iter().zip(&da).zip(&up) {
        band += r[1];
        energy += r[3];
        num += r[3] * (e * u[0] - d[0] / e);
    }
    let profit = num / energy;
    let be = (100.0 - profit) * energy / band;
    let hours = reserve.iter().filter(|r| r[0] > be).count();

    let hourly_up = rows.iter().find(|r| r[2] == "hourly" && r[3] == "up").unwrap();
    assert!((hourly_up[5].parse::<f64>().unwrap() - profit).abs() < 1e-9);
    assert!((hourly_up[7].parse::<f64>().unwrap() - be).abs() < 1e-9);
    assert_eq!(hourly_up[8], hours.to_string());
    assert_eq!(hourly_up[9], "8760");
    let wide = csv_rows(&dir.path().join("out/reserve/break_even.csv"));
    assert_eq!(wide.len(), 2);
    assert_eq!(wide[0][..3], ["ES", "2019", "table"]);
}

#[test]
fn reserve_single_hour_counts_are_binary() {
    let dir = tempfile::tempdir().unwrap();
    let t = civil_hours(Madrid, date(2019, 6, 1), date(2019, 6, 1))[10];
    let write = |name: &str, v: f64| {
        let p = dir.path().join(name);
        fs::write(&p, price_csv(&[(t, Some(v))])).unwrap();
        p
    };
    let reserve = dir.path().join("reserve.csv");
    let row = ReserveRow {
        band_price: 30.0,
        band_up: 100.0,
        band_down: -80.0,
        energy_up: 10.0,
        energy_down: -40.0,
    };
    fs::write(&reserve, reserve_csv(&[(t, row)])).unwrap();
    let config = format!(
        "{BATTERY}{}{}{}{}[reserve]\n",
        dataset("Reserve", "ES", &reserve),
        dataset("DayAhead", "ES", &write("da.csv", 45.0)),
        dataset("SecondaryEnergyUp", "ES", &write("up.csv", 50.0)),
        dataset("SecondaryEnergyDown", "ES", &write("down.csv", 38.0)),
    );
    let run = run_config(dir.path(), "reserve", &config);
    assert_eq!(run.code, 0, "{}", run.stderr);
    for r in csv_rows(&dir.path().join("out/reserve/economics.csv")) {
        assert!(r[8] == "0" || r[8] == "1", "{r:?}");
        assert_eq!(r[9], "1");
    }
}

#[test]
fn reserve_period_outside_data_is_analysis_error() {
    let dir = tempfile::tempdir().unwrap();
    let files = SyntheticMarket::spain(2019, 9).write(&dir.path().join("data")).unwrap();
    let config = format!("{BATTERY}{}[reserve]\nperiods = [2018]\n", all_datasets(&files, "ES"));
    let run = run_config(dir.path(), "reserve", &config);
    assert_eq!(run.code, 3, "{}", run.stderr);
}

#[test]
fn sweep_single_curve_and_unattainable_target() {
    let dir = tempfile::tempdir().unwrap();
    let files = SyntheticMarket::spain(2019, 2).write(&dir.path().join("data")).unwrap();
    let base = format!("{BATTERY}{}", dataset("DayAhead", "ES", files.price("DayAhead")));
    let run = run_config(dir.path(), "sweep", &format!("{base}[sweep]\napplications = [\"ArbDayAhead\"]\n"));
    assert_eq!(run.code, 0, "{}", run.stderr);
    let curve = csv_rows(&dir.path().join("out/sweep/curve_ArbDayAhead_ES.csv"));
    assert_eq!(curve.len(), 101);
    let norm: Vec<f64> = curve.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(norm.windows(2).all(|w| w[0] >= w[1]));
    let counts: Vec<usize> = curve.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(counts[0] <= 365);
    let t = json(&dir.path().join("out/sweep/thresholds.json"));
    assert_eq!(t["thresholds"].as_array().unwrap().len(), 1);
    let comparison = csv_rows(&dir.path().join("out/sweep/comparison.csv"));
    assert_eq!(comparison.len(), 101);

    let run = run_config(dir.path(), "sweep", &format!("{base}[sweep]\napplications = [\"ArbDayAhead\"]\ntarget = 1.01\n"));
    assert_eq!(run.code, 0, "{}", run.stderr);
    let t = json(&dir.path().join("out/sweep/thresholds.json"));
    assert_eq!(t["thresholds"][0]["status"], "NotAttainable");
}

#[test]
fn sweep_wear_grid_override() {
    let dir = tempfile::tempdir().unwrap();
    let files = SyntheticMarket::spain(2019, 2).write(&dir.path().join("data")).unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        format!("{BATTERY}{}[sweep]\napplications = [\"ArbDayAhead\"]\n", dataset("DayAhead", "ES", files.price("DayAhead"))),
    )
    .unwrap();
    let out = dir.path().join("o");
    let run = pput(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--wear-grid", "0:50:5"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(csv_rows(&out.join("sweep/curve_ArbDayAhead_ES.csv")).len(), 11);
}

#[test]
fn report_bundles_everything() {
    let dir = tempfile::tempdir().unwrap();
    let files = SyntheticMarket::spain(2019, 4).write(&dir.path().join("data")).unwrap();
    let config = format!("{BATTERY}{}[arbitrage]\n[reserve]\n[sweep]\n[stats]\n", all_datasets(&files, "ES"));
    let run = run_config(dir.path(), "report", &config);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let out = dir.path().join("out");
    for f in [
        "validation.json",
        "stats/price_stats.csv",
        "arbitrage/summary.json",
        "reserve/break_even.csv",
        "sweep/comparison.csv",
        "sweep/thresholds.json",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let t = json(&out.join("sweep/thresholds.json"));
    assert_eq!(t["thresholds"].as_array().unwrap().len(), 4);
    let stats = csv_rows(&out.join("stats/price_stats.csv"));
    assert!(stats.iter().any(|r| r[1] == "Tertiary(pooled)" && r[3] == "17520"));
    let da = stats.iter().find(|r| r[1] == "DayAhead").unwrap();
    assert_eq!(da[3], "8760");
    assert!(!da[7].is_empty());
}

#[test]
fn shipped_configs_run() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config");
    let dir = tempfile::tempdir().unwrap();

    let out = dir.path().join("agg");
    let cfg = root.join("reserve_aggregates.toml");
    let run = pput(&["reserve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = csv_rows(&out.join("reserve/break_even.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4][..3], ["aggregates", "2019", "table"]);

    // same layout as the shipped config: config/ next to data/
    SyntheticMarket::spain(2019, 8).write(&dir.path().join("data")).unwrap();
    fs::create_dir_all(dir.path().join("config")).unwrap();
    fs::copy(root.join("spain_2019.toml"), dir.path().join("config/spain_2019.toml")).unwrap();
    let cfg = dir.path().join("config/spain_2019.toml");
    let run = pput(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let t = json(&dir.path().join("out/spain_2019/sweep/thresholds.json"));
    assert_eq!(t["thresholds"].as_array().unwrap().len(), 4);
}
