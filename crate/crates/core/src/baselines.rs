//! Static linear reconciliation `Ỹ = S·P·Ŷ`.
//!
//! `P` (m × n) maps a full vector of base forecasts to bottom-level values;
//! pre-multiplying by `S` yields a coherent full vector whatever `P` is.
//! The least-squares mappings solve `(Sᵀ W⁻¹ S) P = Sᵀ W⁻¹` with a Cholesky
//! factorization; hierarchies here are small and dense.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{AggregationMatrix, HierarchyVector};

const SHARE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingMethod {
    BottomUp,
    TopDown,
    Ols,
    Wls,
    Gls,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappingMatrix {
    entries: DMatrix<f64>,
    method: MappingMethod,
}

impl MappingMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn method(&self) -> MappingMethod {
        self.method
    }

    fn new(entries: DMatrix<f64>, method: MappingMethod) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "{method:?} mapping has non-finite entries"
            )));
        }
        Ok(Self { entries, method })
    }
}

/// `P = [0 | I_m]`: keep bottom forecasts, re-sum the aggregates.
pub fn p_bottom_up(s: &AggregationMatrix) -> MappingMatrix {
    let (m, r) = (s.m(), s.r());
    let entries = DMatrix::from_fn(m, s.n(), |i, j| if j == r + i { 1.0 } else { 0.0 });
    MappingMatrix {
        entries,
        method: MappingMethod::BottomUp,
    }
}

/// Disaggregates the top-level forecast (column 0) by fixed shares.
pub fn p_top_down(shares: &[f64], s: &AggregationMatrix) -> Result<MappingMatrix> {
    if shares.len() != s.m() {
        return Err(Error::Shape(format!(
            "{} shares for {} bottom series",
            shares.len(),
            s.m()
        )));
    }
    if shares.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidShares(
            "shares must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > SHARE_SUM_TOLERANCE {
        return Err(Error::InvalidShares(format!(
            "shares sum to {total}, not 1"
        )));
    }
    let mut entries = DMatrix::zeros(s.m(), s.n());
    entries.set_column(0, &DVector::from_column_slice(shares));
    MappingMatrix::new(entries, MappingMethod::TopDown)
}

/// `P = (SᵀS)⁻¹Sᵀ`.
pub fn p_ols(s: &AggregationMatrix) -> Result<MappingMatrix> {
    let st = s.matrix().transpose();
    least_squares(s, st, MappingMethod::Ols)
}

/// `P = (Sᵀ W⁻¹ S)⁻¹ Sᵀ W⁻¹` with `W = diag(weights)`.
pub fn p_wls(s: &AggregationMatrix, weights: &[f64]) -> Result<MappingMatrix> {
    if weights.len() != s.n() {
        return Err(Error::Shape(format!(
            "{} weights for {} series",
            weights.len(),
            s.n()
        )));
    }
    if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::InvalidWeights(
            "weights must be finite and positive".into(),
        ));
    }
    let mut st_winv = s.matrix().transpose();
    for (j, w) in weights.iter().enumerate() {
        st_winv.column_mut(j).scale_mut(1.0 / w);
    }
    least_squares(s, st_winv, MappingMethod::Wls)
}

/// Full GLS with a user-supplied symmetric positive-definite `W` (n × n).
/// No covariance estimation happens here.
pub fn p_gls(s: &AggregationMatrix, w: &DMatrix<f64>) -> Result<MappingMatrix> {
    if w.shape() != (s.n(), s.n()) {
        return Err(Error::Shape(format!(
            "W is {:?}, expected {}x{}",
            w.shape(),
            s.n(),
            s.n()
        )));
    }
    if !w.relative_eq(&w.transpose(), 1e-12, 1e-12) {
        return Err(Error::InvalidWeights("W must be symmetric".into()));
    }
    let chol = w
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidWeights("W is not positive definite".into()))?;
    // Sᵀ W⁻¹ = (W⁻¹ S)ᵀ since W is symmetric.
    let winv_s = chol.solve(s.matrix());
    least_squares(s, winv_s.transpose(), MappingMethod::Gls)
}

/// Solves `(Sᵀ W⁻¹ S) P = Sᵀ W⁻¹` given `st_winv = Sᵀ W⁻¹`.
fn least_squares(
    s: &AggregationMatrix,
    st_winv: DMatrix<f64>,
    method: MappingMethod,
) -> Result<MappingMatrix> {
    let normal = &st_winv * s.matrix();
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::Numeric(format!("{method:?} normal matrix is singular")))?;
    MappingMatrix::new(chol.solve(&st_winv), method)
}

/// `Ỹ = S·P·Ŷ`.
pub fn reconcile(
    s: &AggregationMatrix,
    p: &MappingMatrix,
    y_hat: &HierarchyVector,
) -> Result<HierarchyVector> {
    if p.entries.shape() != (s.m(), s.n()) {
        return Err(Error::Shape(format!(
            "P is {:?}, hierarchy needs {}x{}",
            p.entries.shape(),
            s.m(),
            s.n()
        )));
    }
    if y_hat.len() != s.n() {
        return Err(Error::Shape(format!(
            "base vector has {} entries, hierarchy has {}",
            y_hat.len(),
            s.n()
        )));
    }
    let bottom = &p.entries * DVector::from_column_slice(y_hat.full());
    crate::hierarchy::aggregate_bottom(bottom.as_slice(), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{build_two_level, coherence_residual};

    fn three_node() -> AggregationMatrix {
        build_two_level(2).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// Weighted least squares over coherent points `(b1 + b2, b1, b2)` solved
    /// from the 2×2 normal equations written out by hand.
    fn brute_wls_three_node(y: [f64; 3], w: [f64; 3]) -> [f64; 3] {
        let (a0, a1, a2) = (1.0 / w[0], 1.0 / w[1], 1.0 / w[2]);
        // d/db1: a0(b1+b2-y0) + a1(b1-y1) = 0 ; d/db2: a0(b1+b2-y0) + a2(b2-y2) = 0
        let (m11, m12, m22) = (a0 + a1, a0, a0 + a2);
        let (r1, r2) = (a0 * y[0] + a1 * y[1], a0 * y[0] + a2 * y[2]);
        let det = m11 * m22 - m12 * m12;
        let b1 = (r1 * m22 - m12 * r2) / det;
        let b2 = (m11 * r2 - m12 * r1) / det;
        [b1 + b2, b1, b2]
    }

    #[test]
    fn bottom_up_examples() {
        let s = three_node();
        let p = p_bottom_up(&s);
        assert_eq!(
            p.matrix(),
            &DMatrix::from_row_slice(2, 3, &[0., 1., 0., 0., 0., 1.])
        );
        let out = reconcile(&s, &p, &vec![12., 4., 5.].into()).unwrap();
        assert_eq!(out.full(), &[9., 4., 5.]);
        let fixed = reconcile(&s, &p, &vec![9., 4., 5.].into()).unwrap();
        assert_eq!(fixed.full(), &[9., 4., 5.]);
    }

    #[test]
    fn top_down_examples() {
        let s = three_node();
        let p = p_top_down(&[0.6, 0.4], &s).unwrap();
        let out = reconcile(&s, &p, &vec![12., 4., 5.].into()).unwrap();
        assert!(close(out.full(), &[12., 7.2, 4.8], 1e-12));
        let p = p_top_down(&[1.0, 0.0], &s).unwrap();
        let out = reconcile(&s, &p, &vec![12., 4., 5.].into()).unwrap();
        assert_eq!(out.full(), &[12., 12., 0.]);
        let p = p_top_down(&[0.5, 0.5], &s).unwrap();
        let out = reconcile(&s, &p, &vec![9., 4., 5.].into()).unwrap();
        assert_eq!(out.full(), &[9., 4.5, 4.5]);
        assert!(matches!(
            p_top_down(&[0.5, 0.6], &s),
            Err(Error::InvalidShares(_))
        ));
        assert!(matches!(
            p_top_down(&[1.5, -0.5], &s),
            Err(Error::InvalidShares(_))
        ));
    }

    #[test]
    fn ols_examples() {
        let s = three_node();
        let p = p_ols(&s).unwrap();
        let want = DMatrix::from_row_slice(2, 3, &[1., 2., -1., 1., -1., 2.]) / 3.0;
        assert!(p.matrix().relative_eq(&want, 1e-12, 1e-12));
        let out = reconcile(&s, &p, &vec![12., 4., 5.].into()).unwrap();
        assert!(close(out.full(), &[11., 5., 6.], 1e-9));
        assert!(close(
            out.full(),
            &brute_wls_three_node([12., 4., 5.], [1., 1., 1.]),
            1e-9
        ));
        let fixed = reconcile(&s, &p, &vec![9., 4., 5.].into()).unwrap();
        assert!(close(fixed.full(), &[9., 4., 5.], 1e-9));
    }

    #[test]
    fn wls_examples() {
        let s = three_node();
        let ols = p_ols(&s).unwrap();
        let equal = p_wls(&s, &[3.0, 3.0, 3.0]).unwrap();
        assert!(equal.matrix().relative_eq(ols.matrix(), 1e-10, 1e-10));

        let y: HierarchyVector = vec![12., 4., 5.].into();
        let near_bu = reconcile(&s, &p_wls(&s, &[1e9, 1.0, 1.0]).unwrap(), &y).unwrap();
        let bu = reconcile(&s, &p_bottom_up(&s), &y).unwrap();
        let gap = near_bu
            .full()
            .iter()
            .zip(bu.full())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-3, "gap {gap}");

        let out = reconcile(&s, &p_wls(&s, &[1.0, 2.0, 2.0]).unwrap(), &y).unwrap();
        assert!(close(
            out.full(),
            &brute_wls_three_node([12., 4., 5.], [1., 2., 2.]),
            1e-9
        ));

        assert!(matches!(
            p_wls(&s, &[1.0, 0.0, 1.0]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            p_wls(&s, &[1.0, -2.0, 1.0]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(p_wls(&s, &[1.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn gls_with_diagonal_w_matches_wls() {
        let s = three_node();
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 2.0]));
        let gls = p_gls(&s, &w).unwrap();
        let wls = p_wls(&s, &[1.0, 2.0, 2.0]).unwrap();
        assert!(gls.matrix().relative_eq(wls.matrix(), 1e-12, 1e-12));
        let not_pd = DMatrix::from_row_slice(3, 3, &[1., 2., 0., 2., 1., 0., 0., 0., 1.]);
        assert!(p_gls(&s, &not_pd).is_err());
    }

    #[test]
    fn every_mapping_is_coherent() {
        let s = three_node();
        let y: HierarchyVector = vec![12., 4., 5.].into();
        let maps = [
            p_bottom_up(&s),
            p_top_down(&[0.3, 0.7], &s).unwrap(),
            p_ols(&s).unwrap(),
            p_wls(&s, &[1.0, 2.0, 5.0]).unwrap(),
        ];
        for p in &maps {
            let out = reconcile(&s, p, &y).unwrap();
            assert!(
                coherence_residual(&out, &s).unwrap() <= 1e-9,
                "{:?}",
                p.method()
            );
        }
    }

    #[test]
    fn reconcile_checks_shapes() {
        let s = three_node();
        let other = build_two_level(3).unwrap();
        let p = p_ols(&other).unwrap();
        assert!(matches!(
            reconcile(&s, &p, &vec![1., 2., 3.].into()),
            Err(Error::Shape(_))
        ));
        let p = p_ols(&s).unwrap();
        assert!(matches!(
            reconcile(&s, &p, &vec![1., 2.].into()),
            Err(Error::Shape(_))
        ));
    }
}
