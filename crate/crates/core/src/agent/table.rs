use serde::{Deserialize, Serialize};

use super::{Action, MAX_DAYS};
use crate::error::{Error, Result};

/// Tabular action values `Q(day, action)` plus the state-value mirror `V(day)`.
///
/// Days are 1-based. Every day up to [`MAX_DAYS`] has a row so that one table
/// serves months of any length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    q: Vec<[f64; 3]>,
    v: Vec<f64>,
}

impl ValueTable {
    pub fn zeros() -> Self {
        Self {
            q: vec![[0.0; 3]; MAX_DAYS],
            v: vec![0.0; MAX_DAYS],
        }
    }

    /// Builds a table from explicit action values; `V` is taken from the keep
    /// column.
    pub fn from_q(q: Vec<[f64; 3]>) -> Result<Self> {
        if q.len() != MAX_DAYS {
            return Err(Error::Shape(format!(
                "value table needs {MAX_DAYS} rows, got {}",
                q.len()
            )));
        }
        if q.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("value table entries must be finite".into()));
        }
        let v = q.iter().map(|row| row[Action::Keep.index()]).collect();
        Ok(Self { q, v })
    }

    fn slot(day: usize) -> usize {
        assert!(
            (1..=MAX_DAYS).contains(&day),
            "day index {day} outside 1..={MAX_DAYS}"
        );
        day - 1
    }

    pub fn q(&self, day: usize, action: Action) -> f64 {
        self.q[Self::slot(day)][action.index()]
    }

    pub fn q_row(&self, day: usize) -> [f64; 3] {
        self.q[Self::slot(day)]
    }

    pub fn set_q(&mut self, day: usize, action: Action, value: f64) {
        self.q[Self::slot(day)][action.index()] = value;
    }

    pub fn v(&self, day: usize) -> f64 {
        self.v[Self::slot(day)]
    }

    pub fn set_v(&mut self, day: usize, value: f64) {
        self.v[Self::slot(day)] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, [f64; 3])> + '_ {
        self.q.iter().enumerate().map(|(i, row)| (i + 1, *row))
    }

    pub fn is_finite(&self) -> bool {
        self.q
            .iter()
            .flatten()
            .chain(&self.v)
            .all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.q
            .iter()
            .flatten()
            .chain(&self.v)
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `V(t) = M − Σ_{i≤t} ŷ_i`, with every action value of day `t` starting at
/// `V(t)`. Days past the end of the cycle carry the final remainder.
pub fn init_state_values(monthly_total: f64, daily_forecasts: &[f64]) -> Result<ValueTable> {
    if daily_forecasts.is_empty() {
        return Err(Error::EmptyCycle);
    }
    if daily_forecasts.len() > MAX_DAYS {
        return Err(Error::Shape(format!(
            "cycle of {} days exceeds {MAX_DAYS}",
            daily_forecasts.len()
        )));
    }
    let mut table = ValueTable::zeros();
    let mut remaining = monthly_total;
    for day in 1..=MAX_DAYS {
        if let Some(f) = daily_forecasts.get(day - 1) {
            remaining -= f;
        }
        table.q[day - 1] = [remaining; 3];
        table.v[day - 1] = remaining;
    }
    if !table.is_finite() {
        return Err(Error::Numeric("non-finite initial state value".into()));
    }
    Ok(table)
}
