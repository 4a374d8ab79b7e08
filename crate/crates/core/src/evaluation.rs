//! Accuracy metrics, per-day reports and the tolerance × exploration grid.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{train_and_reconcile, AgentConfig, MonthlyEpisode, ReconciliationTrace};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Mean absolute percentage error, in percent.
pub fn mape(actuals: &[f64], forecasts: &[f64]) -> Result<f64> {
    if actuals.len() != forecasts.len() {
        return Err(Error::Shape(format!(
            "{} actuals vs {} forecasts",
            actuals.len(),
            forecasts.len()
        )));
    }
    if actuals.is_empty() {
        return Err(Error::Shape("mape of an empty series".into()));
    }
    let mut total = 0.0;
    for (y, f) in actuals.iter().zip(forecasts) {
        if *y == 0.0 {
            return Err(Error::DivisionByZero("zero actual in mape"));
        }
        total += ((y - f) / y).abs();
    }
    Ok(100.0 * total / actuals.len() as f64)
}

/// Error of a revised monthly forecast against the monthly actual, in percent.
pub fn mape_rec(actual_total: f64, rmf: f64) -> Result<f64> {
    if actual_total == 0.0 {
        return Err(Error::DivisionByZero("zero monthly actual"));
    }
    Ok(100.0 * ((actual_total - rmf) / actual_total).abs())
}

/// Size of the revision relative to the unrevised monthly forecast, in
/// percent. Moves in either direction count as positive.
pub fn pct_improvement(base_total: f64, rmf: f64) -> Result<f64> {
    if base_total == 0.0 {
        return Err(Error::DivisionByZero("zero base monthly forecast"));
    }
    Ok(100.0 * ((base_total - rmf) / base_total).abs())
}

/// Tolerance as an absolute amount or as a fraction of the cycle's total
/// base forecast. Written `"20%"` or `"73473"`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Tolerance {
    Absolute(f64),
    /// Fraction, so `Percent(0.2)` is 20%.
    Percent(f64),
}

impl Tolerance {
    /// Absolute ε for a cycle with the given daily base forecasts.
    pub fn resolve(&self, daily_forecasts: &[f64]) -> Result<f64> {
        let eps = match *self {
            Tolerance::Absolute(a) => a,
            Tolerance::Percent(p) => p * daily_forecasts.iter().sum::<f64>(),
        };
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance {self} resolves to {eps}, which is not positive"
            )));
        }
        Ok(eps)
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Tolerance::Absolute(a) => write!(f, "{a}"),
            Tolerance::Percent(p) => write!(f, "{}%", round_to(100.0 * p, 10)),
        }
    }
}

impl FromStr for Tolerance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("bad tolerance {s:?}"));
        let t = match s.strip_suffix('%') {
            Some(p) => Tolerance::Percent(p.trim().parse::<f64>().map_err(|_| bad())? / 100.0),
            None => Tolerance::Absolute(s.parse().map_err(|_| bad())?),
        };
        match t {
            Tolerance::Absolute(x) | Tolerance::Percent(x) if x.is_finite() && x > 0.0 => Ok(t),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Tolerance {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Tolerance> for String {
    fn from(t: Tolerance) -> Self {
        t.to_string()
    }
}

fn round_to(x: f64, digits: i32) -> f64 {
    let k = 10f64.powi(digits);
    (x * k).round() / k
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub date: NaiveDate,
    pub actual: f64,
    pub forecast: f64,
    pub rmf: f64,
    pub mape_rec: f64,
    pub pct_f: f64,
}

/// Day-by-day revised forecasts with their accuracy against the monthly
/// actual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub base_total: f64,
    pub actual_total: f64,
    /// Single-point MAPE of the unrevised monthly forecast.
    pub base_mape: f64,
}

impl MetricReport {
    /// Needs a trace covering the whole cycle so the monthly actual is known.
    pub fn new(
        dates: &[NaiveDate],
        forecasts: &[f64],
        base_total: f64,
        trace: &ReconciliationTrace,
    ) -> Result<Self> {
        if dates.len() != forecasts.len() || trace.len() != forecasts.len() {
            return Err(Error::Shape(format!(
                "{} dates, {} forecasts and {} traced days",
                dates.len(),
                forecasts.len(),
                trace.len()
            )));
        }
        let actual_total: f64 = trace.rows().iter().map(|r| r.actual).sum();
        let base_mape = mape(&[actual_total], &[base_total])?;
        let rows = trace
            .rows()
            .iter()
            .zip(dates)
            .zip(forecasts)
            .map(|((r, &date), &forecast)| {
                Ok(MetricRow {
                    date,
                    actual: r.actual,
                    forecast,
                    rmf: r.rmf,
                    mape_rec: mape_rec(actual_total, r.rmf)?,
                    pct_f: pct_improvement(base_total, r.rmf)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows,
            base_total,
            actual_total,
            base_mape,
        })
    }

    pub fn final_row(&self) -> Option<&MetricRow> {
        self.rows.last()
    }

    /// CSV `date,actual,forecast,rmf,mape_rec_pct,pct_f`, four decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "actual", "forecast", "rmf", "mape_rec_pct", "pct_f"])?;
        for r in &self.rows {
            w.write_record([
                r.date.format("%Y-%m-%d").to_string(),
                format!("{:.4}", r.actual),
                format!("{:.4}", r.forecast),
                format!("{:.4}", r.rmf),
                format!("{:.4}", r.mape_rec),
                format!("{:.4}", r.pct_f),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub tolerance: Tolerance,
    pub exploration: f64,
    /// Absolute tolerance the cell ran with, when it resolved.
    pub resolved_tolerance: Option<f64>,
    pub final_rmf: Option<f64>,
    pub mape_rec: Option<f64>,
    pub pct_f: Option<f64>,
    pub error: Option<String>,
}

impl GridRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
}

impl GridReport {
    /// CSV `tolerance,epsilon,mape_rec_pct,pct_f`; failed cells read
    /// `failed` in both metric columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tolerance", "epsilon", "mape_rec_pct", "pct_f"])?;
        for r in &self.rows {
            let metric =
                |v: Option<f64>| v.map_or_else(|| "failed".to_string(), |x| format!("{x:.4}"));
            w.write_record([
                r.tolerance.to_string(),
                r.exploration.to_string(),
                metric(r.mape_rec),
                metric(r.pct_f),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seed for grid cell `(i, j)`: tolerance row `i`, exploration column `j`.
pub fn grid_cell_seed(seed: u64, i: usize, j: usize) -> u64 {
    derive_seed(seed, &format!("grid/{i}/{j}"))
}

/// Trains and reconciles one independent agent per (tolerance, exploration)
/// pair. Cells run in parallel; rows come back in grid order, exploration
/// major with tolerances varying fastest. A failing cell is recorded, not
/// propagated.
pub fn run_grid(
    training: &[MonthlyEpisode],
    test: &MonthlyEpisode,
    tolerances: &[Tolerance],
    explorations: &[f64],
    base_cfg: &AgentConfig,
) -> Result<GridReport> {
    if tolerances.is_empty() || explorations.is_empty() {
        return Err(Error::InvalidConfig(
            "grid needs at least one tolerance and one exploration rate".into(),
        ));
    }
    let cells: Vec<(usize, usize)> = (0..explorations.len())
        .flat_map(|j| (0..tolerances.len()).map(move |i| (i, j)))
        .collect();
    let actual_total: f64 = test.actuals().iter().sum();
    let rows = cells
        .par_iter()
        .map(|&(i, j)| {
            let tolerance = tolerances[i];
            let exploration = explorations[j];
            let mut row = GridRow {
                tolerance,
                exploration,
                resolved_tolerance: None,
                final_rmf: None,
                mape_rec: None,
                pct_f: None,
                error: None,
            };
            let outcome = (|| -> Result<()> {
                let eps = tolerance.resolve(test.forecasts())?;
                row.resolved_tolerance = Some(eps);
                let cfg = AgentConfig {
                    tolerance: eps,
                    exploration,
                    seed: grid_cell_seed(base_cfg.seed, i, j),
                    ..base_cfg.clone()
                };
                let (_, trace) = train_and_reconcile(training, test, &cfg)?;
                let rmf = trace.final_rmf().ok_or(Error::EmptyCycle)?;
                let (m, p) = (
                    mape_rec(actual_total, rmf)?,
                    pct_improvement(test.monthly_total(), rmf)?,
                );
                row.final_rmf = Some(rmf);
                row.mape_rec = Some(m);
                row.pct_f = Some(p);
                Ok(())
            })();
            if let Err(e) = outcome {
                row.error = Some(e.to_string());
            }
            row
        })
        .collect();
    Ok(GridReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[100.0, 200.0], &[100.0, 200.0]).unwrap(), 0.0);
        assert!((mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!((mape(&[294452.0], &[367706.0]).unwrap() - 24.878_078_6).abs() < 1e-6);
        assert!(matches!(
            mape(&[0.0], &[1.0]),
            Err(Error::DivisionByZero(_))
        ));
        assert!(matches!(mape(&[1.0, 2.0], &[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn monthly_metric_examples() {
        assert!((mape_rec(294452.0, 298910.0).unwrap() - 1.514).abs() < 1e-3);
        assert!((mape_rec(294452.0, 294165.0).unwrap() - 0.0975).abs() < 1e-3);
        assert_eq!(mape_rec(5.0, 5.0).unwrap(), 0.0);
        assert!((pct_improvement(367706.0, 333308.0).unwrap() - 9.355).abs() < 1e-3);
        assert!((pct_improvement(367706.0, 298910.0).unwrap() - 18.710).abs() < 1e-3);
        assert_eq!(pct_improvement(7.0, 7.0).unwrap(), 0.0);
        assert!(mape_rec(0.0, 1.0).is_err());
        assert!(pct_improvement(0.0, 1.0).is_err());
    }

    #[test]
    fn tolerance_parsing() {
        assert_eq!("20%".parse::<Tolerance>().unwrap(), Tolerance::Percent(0.2));
        assert_eq!(
            "73473".parse::<Tolerance>().unwrap(),
            Tolerance::Absolute(73473.0)
        );
        assert_eq!(Tolerance::Percent(0.1).to_string(), "10%");
        assert_eq!(Tolerance::Percent(0.3).to_string(), "30%");
        assert!("-5".parse::<Tolerance>().is_err());
        assert!("abc%".parse::<Tolerance>().is_err());
        assert_eq!(
            Tolerance::Percent(0.5).resolve(&[10.0, 30.0]).unwrap(),
            20.0
        );
        assert_eq!(Tolerance::Absolute(3.0).resolve(&[]).unwrap(), 3.0);
        assert!(Tolerance::Percent(0.5).resolve(&[]).is_err());
    }

    #[test]
    fn grid_csv_marks_failures() {
        let ok = GridRow {
            tolerance: Tolerance::Percent(0.1),
            exploration: 0.05,
            resolved_tolerance: Some(1.0),
            final_rmf: Some(10.0),
            mape_rec: Some(1.23456),
            pct_f: Some(2.0),
            error: None,
        };
        let bad = GridRow {
            mape_rec: None,
            pct_f: None,
            error: Some("x".into()),
            ..ok.clone()
        };
        let mut buf = Vec::new();
        GridReport {
            rows: vec![ok, bad],
        }
        .write_csv(&mut buf)
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tolerance,epsilon,mape_rec_pct,pct_f\n10%,0.05,1.2346,2.0000\n10%,0.05,failed,failed\n"
        );
    }

    proptest! {
        #[test]
        fn mape_is_scale_invariant(
            pairs in prop::collection::vec((1.0f64..1e5, 0.0f64..1e5), 1..40),
            c in 1e-3f64..1e3,
        ) {
            let (a, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let sa: Vec<f64> = a.iter().map(|x| c * x).collect();
            let sf: Vec<f64> = f.iter().map(|x| c * x).collect();
            let base = mape(&a, &f).unwrap();
            prop_assert!((mape(&sa, &sf).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        }

        #[test]
        fn mape_rec_zero_iff_exact(a in 1.0f64..1e6, rmf in 0.0f64..2e6) {
            prop_assert_eq!(mape_rec(a, rmf).unwrap() == 0.0, rmf == a);
            prop_assert_eq!(mape_rec(a, a).unwrap(), 0.0);
        }
    }
}
