//! Synthetic data shared by the integration tests.

#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use dtr_core::seed::rng_for;
use dtr_core::{MonthRange, MonthlyEpisode, YearMonth};
use rand::Rng;

pub const TRAIN: &str = "2019-01..2020-02";
pub const TEST: &str = "2020-03";

/// Day of the drop in the test month and its size.
pub const SHIFT_DAY: usize = 10;

fn seasonal(t: usize) -> f64 {
    10_000.0 + 200.0 * (2.0 * std::f64::consts::PI * t as f64 / 7.0).sin()
}

/// Fourteen training months whose actuals track the forecasts within
/// `noise` (relative, uniform), and a test month whose actuals move by
/// `shift` (e.g. −0.2) from day 10 onward.
pub fn regime_shift(noise: f64, shift: f64, seed: u64) -> (Vec<MonthlyEpisode>, MonthlyEpisode) {
    let mut rng = rng_for(seed, "synthetic");
    let mut t = 0usize;
    let mut month = |m: YearMonth, test: bool, rng: &mut dyn rand::RngCore| {
        let mut f = Vec::new();
        let mut y = Vec::new();
        for day in 1..=m.days() {
            t += 1;
            let base = seasonal(t);
            let jitter = 1.0 + noise * (2.0 * rng.random::<f64>() - 1.0);
            let moved = if test && day >= SHIFT_DAY {
                1.0 + shift
            } else {
                1.0
            };
            f.push(base);
            y.push(base * jitter * moved);
        }
        MonthlyEpisode::new(f, y).unwrap().with_month(m)
    };
    let train: MonthRange = TRAIN.parse().unwrap();
    let history = train.months().map(|m| month(m, false, &mut rng)).collect();
    let test = month(TEST.parse().unwrap(), true, &mut rng);
    (history, test)
}

/// Weekday-only OHLCV file spanning the training and test months, with the
/// test month's prices dropping 20% from day 10.
pub fn write_ohlcv(path: &Path, seed: u64) {
    let mut rng = rng_for(seed, "ohlcv");
    let mut out = std::fs::File::create(path).unwrap();
    writeln!(out, "Date,Open,High,Low,Close,Volume").unwrap();
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2020, 3, 31).unwrap();
    for (t, d) in start.iter_days().take_while(|d| *d <= end).enumerate() {
        if matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && d != start && d != end {
            continue;
        }
        let drop = if d.year() == 2020 && d.month() == 3 && d.day() as usize >= SHIFT_DAY {
            0.8
        } else {
            1.0
        };
        let open = seasonal(t) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)) * drop;
        writeln!(
            out,
            "{},{open:.2},{:.2},{:.2},{:.2},1000",
            d.format("%Y-%m-%d"),
            open + 50.0,
            open - 50.0,
            open + 10.0
        )
        .unwrap();
    }
}
