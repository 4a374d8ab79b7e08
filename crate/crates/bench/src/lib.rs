//! Fixed inputs for the benchmarks.

use dtr_core::{AggregationMatrix, DMatrix, HierarchyVector, MonthlyEpisode, YearMonth};

fn level(t: usize) -> f64 {
    10_000.0 + 200.0 * (t as f64 * 0.9).sin() + 50.0 * (t as f64 * 0.37).cos()
}

/// `count` consecutive months starting January 2019 whose actuals wobble
/// around the forecasts, plus one test month that drops 20% from day 10.
pub fn months(count: usize) -> (Vec<MonthlyEpisode>, MonthlyEpisode) {
    let mut t = 0;
    let mut build = |m: YearMonth, drop: bool| {
        let mut f = Vec::new();
        let mut y = Vec::new();
        for day in 1..=m.days() {
            t += 1;
            let base = level(t);
            let shift = if drop && day >= 10 { 0.8 } else { 1.0 };
            f.push(base);
            y.push(base * (1.0 + 0.01 * (t as f64 * 1.7).sin()) * shift);
        }
        MonthlyEpisode::new(f, y).unwrap().with_month(m)
    };
    let mut m = YearMonth::new(2019, 1).unwrap();
    let mut history = Vec::with_capacity(count);
    for _ in 0..count {
        history.push(build(m, false));
        m = m.succ();
    }
    let test = build(m, true);
    (history, test)
}

/// Total, `groups` group aggregates and `bottom` series, with series
/// assigned to groups round robin.
pub fn grouped_hierarchy(groups: usize, bottom: usize) -> (AggregationMatrix, HierarchyVector) {
    let r = 1 + groups;
    let mut s = DMatrix::zeros(r + bottom, bottom);
    for j in 0..bottom {
        s[(0, j)] = 1.0;
        s[(1 + j % groups, j)] = 1.0;
        s[(r + j, j)] = 1.0;
    }
    let y: Vec<f64> = (0..r + bottom).map(level).collect();
    (AggregationMatrix::new(s, r).unwrap(), y.into())
}
