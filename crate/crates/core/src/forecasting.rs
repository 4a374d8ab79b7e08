//! Base (unreconciled) forecasts.
//!
//! The agent is forecaster-agnostic: anything producing one forecast per day
//! of the cycle works. These three are the defaults when no external forecast
//! file is supplied.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::error::{Error, Result};

/// Relative gap between an external monthly total and the daily sum above
/// which a coherence warning is logged.
pub const MONTHLY_OVERRIDE_WARN_GAP: f64 = 1e-3;

/// Repeats the last observation.
pub fn naive(history: &[f64], h: usize) -> Result<Vec<f64>> {
    let last = *history.last().ok_or_else(|| {
        Error::InsufficientData("naive forecast needs at least one observation".into())
    })?;
    Ok(vec![last; h])
}

/// Repeats the last full season.
pub fn seasonal_naive(history: &[f64], period: usize, h: usize) -> Result<Vec<f64>> {
    if period == 0 {
        return Err(Error::InsufficientData(
            "seasonal period must be positive".into(),
        ));
    }
    if history.len() < period {
        return Err(Error::InsufficientData(format!(
            "seasonal naive needs {period} observations, have {}",
            history.len()
        )));
    }
    let season = &history[history.len() - period..];
    Ok((0..h).map(|k| season[k % period]).collect())
}

/// Extends the straight line through the first and last observations.
pub fn drift(history: &[f64], h: usize) -> Result<Vec<f64>> {
    if history.len() < 2 {
        return Err(Error::InsufficientData(
            "drift needs at least two observations".into(),
        ));
    }
    let first = history[0];
    let last = history[history.len() - 1];
    let slope = (last - first) / (history.len() - 1) as f64;
    Ok((1..=h).map(|k| last + k as f64 * slope).collect())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Forecaster {
    Naive,
    SeasonalNaive { period: usize },
    Drift,
}

impl Forecaster {
    pub fn forecast(&self, history: &[f64], h: usize) -> Result<Vec<f64>> {
        match *self {
            Forecaster::Naive => naive(history, h),
            Forecaster::SeasonalNaive { period } => seasonal_naive(history, period, h),
            Forecaster::Drift => drift(history, h),
        }
    }

    /// Observations needed before a forecast can be produced.
    pub fn min_history(&self) -> usize {
        match *self {
            Forecaster::Naive => 1,
            Forecaster::SeasonalNaive { period } => period.max(1),
            Forecaster::Drift => 2,
        }
    }
}

/// Base forecasts for one cycle: one value per calendar day plus the
/// low-frequency total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    cycle: YearMonth,
    daily: Vec<f64>,
    monthly_total: f64,
}

impl ForecastSet {
    /// Monthly total defaults to the sum of the daily forecasts.
    pub fn from_daily(cycle: YearMonth, daily: Vec<f64>) -> Result<Self> {
        if daily.len() != cycle.days() {
            return Err(Error::Shape(format!(
                "{cycle} has {} days but {} daily forecasts were given",
                cycle.days(),
                daily.len()
            )));
        }
        if daily.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite forecast in {cycle}"
            )));
        }
        let monthly_total = daily.iter().sum();
        Ok(Self {
            cycle,
            daily,
            monthly_total,
        })
    }

    /// Replaces the monthly total with an externally produced one, warning
    /// when it disagrees with the daily sum by more than 0.1%.
    pub fn with_monthly_total(mut self, total: f64) -> Result<Self> {
        if !total.is_finite() {
            return Err(Error::InvalidSeries("non-finite monthly total".into()));
        }
        let gap = self.coherence_gap_for(total);
        if gap > MONTHLY_OVERRIDE_WARN_GAP {
            warn!(
                "{}: monthly forecast {total} differs from the daily sum {} by {:.3}%",
                self.cycle,
                self.daily_sum(),
                100.0 * gap
            );
        }
        self.monthly_total = total;
        Ok(self)
    }

    fn coherence_gap_for(&self, total: f64) -> f64 {
        let sum = self.daily_sum();
        if sum == 0.0 {
            if total == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            ((total - sum) / sum).abs()
        }
    }

    /// Relative disagreement between the monthly total and the daily sum.
    pub fn coherence_gap(&self) -> f64 {
        self.coherence_gap_for(self.monthly_total)
    }

    pub fn cycle(&self) -> YearMonth {
        self.cycle
    }

    pub fn daily(&self) -> &[f64] {
        &self.daily
    }

    pub fn monthly_total(&self) -> f64 {
        self.monthly_total
    }

    pub fn daily_sum(&self) -> f64 {
        self.daily.iter().sum()
    }

    pub fn mean_daily(&self) -> f64 {
        self.daily_sum() / self.daily.len() as f64
    }

    pub fn len(&self) -> usize {
        self.daily.len()
    }

    pub fn is_empty(&self) -> bool {
        self.daily.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn naive_examples() {
        assert_eq!(naive(&[7.0, 3.0, 10.0], 3).unwrap(), vec![10.0; 3]);
        assert_eq!(naive(&[5.0], 1).unwrap(), vec![5.0]);
        assert_eq!(naive(&[1.0, 2.0, 3.0], 2).unwrap(), vec![3.0, 3.0]);
        assert!(matches!(naive(&[], 2), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn seasonal_examples() {
        let week = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        assert_eq!(seasonal_naive(&week, 7, 7).unwrap(), week.to_vec());
        assert_eq!(
            seasonal_naive(&week, 7, 9).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 1.0, 2.0]
        );
        assert_eq!(
            seasonal_naive(&week, 1, 4).unwrap(),
            naive(&week, 4).unwrap()
        );
        assert!(seasonal_naive(&week[..3], 7, 2).is_err());
    }

    #[test]
    fn drift_examples() {
        assert_eq!(drift(&[10.0, 16.0], 2).unwrap(), vec![22.0, 28.0]);
        assert_eq!(drift(&[4.0, 4.0, 4.0], 3).unwrap(), vec![4.0; 3]);
        assert_eq!(drift(&[0.0, 1.0, 2.0, 3.0], 1).unwrap(), vec![4.0]);
        assert!(drift(&[1.0], 1).is_err());
    }

    #[test]
    fn forecast_set_totals() {
        let march: YearMonth = "2020-03".parse().unwrap();
        let fs = ForecastSet::from_daily(march, vec![10.0; 31]).unwrap();
        assert_eq!(fs.monthly_total(), 310.0);
        assert_eq!(fs.coherence_gap(), 0.0);
        let fs = fs.with_monthly_total(320.0).unwrap();
        assert_eq!(fs.monthly_total(), 320.0);
        assert!(fs.coherence_gap() > MONTHLY_OVERRIDE_WARN_GAP);
        assert!(ForecastSet::from_daily(march, vec![10.0; 30]).is_err());
    }

    proptest! {
        #[test]
        fn forecasters_return_h_observed_values(
            history in prop::collection::vec(-1e4f64..1e4, 7..60),
            h in 1usize..40,
            period in 1usize..8,
        ) {
            let n = naive(&history, h).unwrap();
            let s = seasonal_naive(&history, period, h).unwrap();
            let d = drift(&history, h).unwrap();
            prop_assert_eq!(n.len(), h);
            prop_assert_eq!(s.len(), h);
            prop_assert_eq!(d.len(), h);
            prop_assert!(d.iter().all(|v| v.is_finite()));
            prop_assert!(n.iter().chain(&s).all(|v| history.contains(v)));
        }

        #[test]
        fn drift_extends_arithmetic_progressions(
            start in -1e3f64..1e3,
            step in -50.0f64..50.0,
            len in 2usize..40,
            h in 1usize..20,
        ) {
            let history: Vec<f64> = (0..len).map(|i| start + step * i as f64).collect();
            let out = drift(&history, h).unwrap();
            for (k, v) in out.iter().enumerate() {
                let want = start + step * (len - 1 + k + 1) as f64;
                let scale = want.abs().max(start.abs()).max(step.abs() * (len + h) as f64).max(1.0);
                prop_assert!((v - want).abs() <= 1e-12 * scale);
            }
        }
    }
}
