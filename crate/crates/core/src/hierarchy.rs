//! Temporal hierarchies: daily series, aggregation matrices and coherence.
//!
//! Full hierarchy vectors are ordered aggregates first, then bottom-level
//! entries: `Y = [u v]ᵀ` with `Y = S·v`. The same ordering is used for the
//! rows of `S` and in every file format.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Daily observations with strictly increasing dates and finite values.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries(format!(
                "dates not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value on {}",
                dates[i]
            )));
        }
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.dates.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.dates.binary_search(&date).ok().map(|i| self.values[i])
    }

    /// Observations strictly before `date`.
    pub fn before(&self, date: NaiveDate) -> &[f64] {
        let end = self.dates.partition_point(|d| *d < date);
        &self.values[..end]
    }
}

/// The 0/1 matrix `S` (n × m) mapping the m bottom-level series onto all n
/// series. The first r rows are aggregates, the last m rows the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationMatrix {
    entries: DMatrix<f64>,
    r: usize,
}

impl AggregationMatrix {
    /// Validates a hand-built matrix whose first `r` rows are aggregates.
    pub fn new(entries: DMatrix<f64>, r: usize) -> Result<Self> {
        let (n, m) = entries.shape();
        if m == 0 {
            return Err(Error::InvalidHierarchy("no bottom-level series".into()));
        }
        if r == 0 {
            return Err(Error::InvalidHierarchy("no aggregate rows".into()));
        }
        if n != r + m {
            return Err(Error::InvalidHierarchy(format!(
                "{n} rows but r + m = {}",
                r + m
            )));
        }
        if entries.iter().any(|&x| x != 0.0 && x != 1.0) {
            return Err(Error::InvalidHierarchy("entries must be 0 or 1".into()));
        }
        for i in 0..m {
            for j in 0..m {
                let want = if i == j { 1.0 } else { 0.0 };
                if entries[(r + i, j)] != want {
                    return Err(Error::InvalidHierarchy(
                        "bottom block is not the identity".into(),
                    ));
                }
            }
        }
        for j in 0..m {
            if (0..r).all(|i| entries[(i, j)] == 0.0) {
                return Err(Error::InvalidHierarchy(format!(
                    "bottom series {j} feeds no aggregate"
                )));
            }
        }
        Ok(Self { entries, r })
    }

    /// Total series count.
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Bottom-level series count.
    pub fn m(&self) -> usize {
        self.entries.ncols()
    }

    /// Aggregate series count.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// A full vector `Y = [u v]ᵀ`, aggregates first.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyVector(Vec<f64>);

impl HierarchyVector {
    pub fn new(full: Vec<f64>) -> Self {
        Self(full)
    }

    pub fn full(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, s: &AggregationMatrix) -> Result<()> {
        if self.len() != s.n() {
            return Err(Error::Shape(format!(
                "vector has {} entries, hierarchy has {}",
                self.len(),
                s.n()
            )));
        }
        Ok(())
    }

    /// Aggregate entries `u`.
    pub fn aggregates(&self, s: &AggregationMatrix) -> Result<&[f64]> {
        self.check(s)?;
        Ok(&self.0[..s.r()])
    }

    /// Bottom entries `v`.
    pub fn bottom(&self, s: &AggregationMatrix) -> Result<&[f64]> {
        self.check(s)?;
        Ok(&self.0[s.r()..])
    }
}

impl From<Vec<f64>> for HierarchyVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Two-level month/day hierarchy: row 0 is the monthly total, rows
/// `1..=n_bottom` the days.
pub fn build_two_level(n_bottom: usize) -> Result<AggregationMatrix> {
    if n_bottom == 0 {
        return Err(Error::InvalidHierarchy(
            "a cycle needs at least one bottom series".into(),
        ));
    }
    let entries = DMatrix::from_fn(n_bottom + 1, n_bottom, |i, j| {
        if i == 0 || i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    AggregationMatrix::new(entries, 1)
}

pub fn aggregate_bottom(v: &[f64], s: &AggregationMatrix) -> Result<HierarchyVector> {
    if v.len() != s.m() {
        return Err(Error::Shape(format!(
            "bottom vector has {} entries, hierarchy has {}",
            v.len(),
            s.m()
        )));
    }
    let y = s.matrix() * DVector::from_column_slice(v);
    Ok(HierarchyVector(y.iter().copied().collect()))
}

/// Max-norm of `y − S·v` where `v` are the bottom entries of `y`; zero iff
/// `y` is coherent.
pub fn coherence_residual(y: &HierarchyVector, s: &AggregationMatrix) -> Result<f64> {
    let implied = aggregate_bottom(y.bottom(s)?, s)?;
    Ok(y.0
        .iter()
        .zip(implied.full())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
