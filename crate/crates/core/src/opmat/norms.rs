use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IndexedMatrix;
use crate::dense::{self, DENSE_CAP};
use crate::error::{Error, Result};
use crate::exponent::{lp_norm, Exponent};
use crate::space::SpaceKind;

/// How much a reported norm value can be trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Exact,
    UpperBound,
    LowerBound,
    /// Iterative estimate above the dense capacity.
    Approximate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub p: Exponent,
    pub value: f64,
    pub kind: NormKind,
    /// Best witness-based lower bound `‖Af‖_p/‖f‖_p` found.
    pub lower: f64,
}

pub(crate) fn column_abs_sums(a: &IndexedMatrix) -> Vec<f64> {
    let mut sums = vec![0.0; a.ncols()];
    for (_, c, v) in a.entries() {
        sums[c] += v.abs();
    }
    sums
}

pub(crate) fn row_abs_sums(a: &IndexedMatrix) -> Vec<f64> {
    (0..a.nrows()).map(|r| a.row(r).1.iter().map(|v| v.abs()).sum()).collect()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// `‖A‖_{p→p}`: exact at `p ∈ {1, 2, ∞}` (2 via a dense SVD up to the capacity,
/// power iteration above it); otherwise the interpolation upper bound
/// `‖A‖₁^{1/p}‖A‖_∞^{1−1/p}` for `1 < p < ∞`, and a witness lower bound only
/// for `p < 1`.
pub fn op_norm(a: &IndexedMatrix, p: Exponent) -> Result<NormEstimate> {
    let pv = p.value();
    if pv == 1.0 {
        let v = max_of(&column_abs_sums(a));
        return Ok(NormEstimate { p, value: v, kind: NormKind::Exact, lower: v });
    }
    if p.is_infinite() {
        let v = max_of(&row_abs_sums(a));
        return Ok(NormEstimate { p, value: v, kind: NormKind::Exact, lower: v });
    }
    if pv == 2.0 {
        return Ok(if a.nrows().max(a.ncols()) <= DENSE_CAP {
            let v = dense::sigma_max(&a.to_dense());
            NormEstimate { p, value: v, kind: NormKind::Exact, lower: v }
        } else {
            let v = power_iteration_norm(a, 1e-10, 100_000);
            NormEstimate { p, value: v, kind: NormKind::Approximate, lower: v }
        });
    }
    let lower = witness_lower_bound(a, p);
    if pv > 1.0 {
        let n1 = max_of(&column_abs_sums(a));
        let ninf = max_of(&row_abs_sums(a));
        let upper = n1.powf(1.0 / pv) * ninf.powf(1.0 - 1.0 / pv);
        Ok(NormEstimate { p, value: upper, kind: NormKind::UpperBound, lower: lower.min(upper) })
    } else {
        Ok(NormEstimate { p, value: lower, kind: NormKind::LowerBound, lower })
    }
}

/// `σ_max` by power iteration on `A^T A`.
pub(crate) fn power_iteration_norm(a: &IndexedMatrix, tol: f64, max_iter: usize) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nnz() == 0 {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i as f64) * 0.618_033_988_75).fract()).collect();
    let mut prev = 0.0;
    for _ in 0..max_iter {
        let nx = lp_norm(&x, Exponent::TWO);
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.apply_unchecked(&x);
        let sigma = lp_norm(&y, Exponent::TWO);
        if sigma == 0.0 {
            return 0.0;
        }
        x = a.apply_adjoint_unchecked(&y);
        if (sigma - prev).abs() <= tol * sigma {
            return sigma;
        }
        prev = sigma;
    }
    prev
}

/// `σ_max` by Lanczos on `A^T A` with full reorthogonalization; the Ritz value
/// approaches it from below.
pub(crate) fn lanczos_norm(a: &IndexedMatrix, tol: f64, max_steps: usize) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nnz() == 0 {
        return 0.0;
    }
    // deterministic start with no special symmetry
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + ((i as f64) * 0.618_033_988_75).fract()).collect();
    let nq = lp_norm(&q, Exponent::TWO);
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut theta = 0.0;
    for _ in 0..max_steps.min(n) {
        let mut w = a.apply_adjoint_unchecked(&a.apply_unchecked(&q));
        let alpha: f64 = w.iter().zip(&q).map(|(x, y)| x * y).sum();
        basis.push(q);
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        alphas.push(alpha);
        let k = alphas.len();
        let t = nalgebra::DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let next = t.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
        let converged = (next - theta).abs() <= tol * next;
        theta = next;
        let beta = lp_norm(&w, Exponent::TWO);
        if converged || beta <= 1e-14 * theta.max(f64::MIN_POSITIVE) {
            break;
        }
        betas.push(beta);
        q = w.into_iter().map(|v| v / beta).collect();
    }
    theta.sqrt()
}

fn dual_vector(y: &[f64], p: f64) -> Vec<f64> {
    // z with ‖z‖_{p'} = 1 and <z, y> = ‖y‖_p
    let norm = lp_norm(y, Exponent(p));
    if norm == 0.0 {
        return vec![0.0; y.len()];
    }
    y.iter().map(|&v| v.signum() * (v.abs() / norm).powf(p - 1.0)).collect()
}

/// Largest `‖Af‖_p/‖f‖_p` over unit vectors, the all-ones vector, and the
/// iterates of the dual power method started from all-ones.
fn witness_lower_bound(a: &IndexedMatrix, p: Exponent) -> f64 {
    let mut best = 0.0f64;
    for col in a.columns() {
        let vals: Vec<f64> = col.iter().map(|&(_, v)| v).collect();
        best = best.max(lp_norm(&vals, p));
    }
    let n = a.ncols();
    if n == 0 {
        return best;
    }
    let mut x = vec![1.0; n];
    let pv = p.value();
    for iter in 0..50 {
        let y = a.apply_unchecked(&x);
        let ratio = lp_norm(&y, p) / lp_norm(&x, p);
        best = best.max(ratio);
        if pv < 1.0 || iter == 49 {
            break;
        }
        let z = a.apply_adjoint_unchecked(&dual_vector(&y, pv));
        let q = pv / (pv - 1.0);
        let next = dual_vector(&z, q);
        if next.iter().all(|&v| v == 0.0) {
            break;
        }
        x = next;
    }
    best
}

/// `‖A‖_𝒜 = ‖A‖_{1→1} + ‖A‖_{∞→∞}`.
pub fn schur_norm(a: &IndexedMatrix) -> f64 {
    let mut col = vec![0.0; a.ncols()];
    let mut best_row = 0.0f64;
    for r in 0..a.nrows() {
        let (cols, vals) = a.row(r);
        let mut s = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            col[c] += v.abs();
            s += v.abs();
        }
        best_row = best_row.max(s);
    }
    max_of(&col) + best_row
}

/// Admissible weights `ω(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    /// `1 + d^α`
    Poly(f64),
    /// `exp(C·d^δ)` with `C > 0`, `0 < δ < 1`
    Subexp(f64, f64),
}

impl Weight {
    pub fn polynomial(alpha: f64) -> Result<Self> {
        Weight::Poly(alpha).validated()
    }

    pub fn subexponential(c: f64, delta: f64) -> Result<Self> {
        Weight::Subexp(c, delta).validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Weight::Poly(a) if a >= 0.0 && a.is_finite() => Ok(self),
            Weight::Subexp(c, d) if c > 0.0 && c.is_finite() && d > 0.0 && d < 1.0 => Ok(self),
            _ => Err(Error::Parameter(format!("invalid weight {self:?}"))),
        }
    }

    /// `ω` as a function of the distance.
    pub fn eval(&self, d: f64) -> f64 {
        match *self {
            Weight::Poly(alpha) => {
                if d == 0.0 {
                    1.0
                } else {
                    1.0 + d.powf(alpha)
                }
            }
            Weight::Subexp(c, delta) => (c * d.powf(delta)).exp(),
        }
    }
}

/// `sup_x Σ_y ω|a_{x,y}| + sup_y Σ_x ω|a_{x,y}|`; needs `Y = X`.
pub fn weighted_schur_norm(a: &IndexedMatrix, w: &Weight) -> Result<f64> {
    if !a.is_square_metric() {
        return Err(Error::Structure("weighted Schur norm needs Y = X".into()));
    }
    let space = a.col_space().expect("metric");
    let mut col = vec![0.0; a.ncols()];
    let mut best_row = 0.0f64;
    for r in 0..a.nrows() {
        let (cols, vals) = a.row(r);
        let mut s = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            let t = w.eval(space.dist(r, c)) * v.abs();
            col[c] += t;
            s += t;
        }
        best_row = best_row.max(s);
    }
    Ok(max_of(&col) + best_row)
}

/// `Σ_k sup_{y−x=k} |a_{y,x}|` over lattice translates `k`; needs `Y = X` a
/// lattice box.
pub fn cd_norm(a: &IndexedMatrix) -> Result<f64> {
    if !a.is_square_metric() {
        return Err(Error::Structure("convolution-dominated norm needs Y = X".into()));
    }
    let space = a.col_space().expect("metric");
    if !matches!(space.kind(), SpaceKind::ZInterval { .. } | SpaceKind::ZdBox { .. }) {
        return Err(Error::Structure("convolution-dominated norm needs a lattice space".into()));
    }
    let mut envelope: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (r, c, v) in a.entries() {
        let cr = space.coords(r).expect("lattice");
        let cc = space.coords(c).expect("lattice");
        let k: Vec<i64> = cr.iter().zip(&cc).map(|(y, x)| y - x).collect();
        let e = envelope.entry(k).or_insert(0.0);
        *e = e.max(v.abs());
    }
    Ok(envelope.values().sum())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::opmat::IndexSet;
    use crate::space::MetricSpace;

    fn z(n: usize) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::z_interval(n).unwrap())
    }

    fn m22(a: [f64; 4]) -> IndexedMatrix {
        IndexedMatrix::square(z(2), vec![(0, 0, a[0]), (0, 1, a[1]), (1, 0, a[2]), (1, 1, a[3])]).unwrap()
    }

    fn tridiag(n: usize, d: f64, off: f64) -> IndexedMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d));
            if i + 1 < n {
                t.push((i, i + 1, off));
                t.push((i + 1, i, off));
            }
        }
        IndexedMatrix::square(z(n), t).unwrap()
    }

    #[test]
    fn classical_formulas() {
        let a = m22([1.0, -2.0, 3.0, 4.0]);
        assert_eq!(op_norm(&a, Exponent::ONE).unwrap().value, 6.0);
        assert_eq!(op_norm(&a, Exponent::INFINITY).unwrap().value, 7.0);
        let b = m22([1.0, 2.0, 3.0, 4.0]);
        let two = op_norm(&b, Exponent::TWO).unwrap();
        assert_eq!(two.kind, NormKind::Exact);
        assert!((two.value - 5.464985704219043).abs() < 1e-9);
    }

    #[test]
    fn identity_norms() {
        let i = IndexedMatrix::identity(z(7));
        for p in ["0.5", "1", "1.5", "2", "3", "inf"] {
            let p: Exponent = p.parse().unwrap();
            let n = op_norm(&i, p).unwrap();
            assert!((n.value - 1.0).abs() < 1e-12, "p={p}: {n:?}");
            assert!((n.lower - 1.0).abs() < 1e-12);
        }
        assert_eq!(schur_norm(&i), 2.0);
    }

    #[test]
    fn interpolated_bounds_bracket() {
        let a = tridiag(30, 2.0, -0.7);
        let p = Exponent::new(3.0).unwrap();
        let n = op_norm(&a, p).unwrap();
        assert_eq!(n.kind, NormKind::UpperBound);
        assert!(n.lower <= n.value + 1e-12);
        // symmetric: ‖A‖_1 = ‖A‖_∞ = 3.4 so the interpolation bound is 3.4
        assert!((n.value - 3.4).abs() < 1e-12);
        assert!(op_norm(&a, Exponent::new(0.5).unwrap()).unwrap().kind == NormKind::LowerBound);
    }

    #[test]
    fn iterative_norms_agree_with_svd() {
        let a = tridiag(50, 1.0, -0.5);
        let exact = op_norm(&a, Exponent::TWO).unwrap().value;
        let approx = power_iteration_norm(&a, 1e-13, 100_000);
        assert!((exact - approx).abs() < 1e-6, "{exact} vs {approx}");
        assert!((exact - lanczos_norm(&a, 1e-14, 300)).abs() < 1e-10);
    }

    #[test]
    fn weighted_and_cd_norms() {
        let diag = IndexedMatrix::square(z(5), (0..5).map(|i| (i, i, i as f64 - 2.5)).collect()).unwrap();
        let w = Weight::polynomial(1.0).unwrap();
        assert_eq!(weighted_schur_norm(&diag, &w).unwrap(), schur_norm(&diag));
        assert_eq!(weighted_schur_norm(&diag, &Weight::subexponential(2.0, 0.5).unwrap()).unwrap(), schur_norm(&diag));
        let t = tridiag(20, 1.0, -0.5);
        assert_eq!(cd_norm(&t).unwrap(), 2.0);
        let tree = Arc::new(MetricSpace::tree(3, 2).unwrap());
        let ti = IndexedMatrix::identity(tree);
        assert!(cd_norm(&ti).is_err());
        let rect = IndexedMatrix::from_triplets(IndexSet::Plain(2), IndexSet::Metric(z(2)), vec![(0, 0, 1.0)]).unwrap();
        assert!(weighted_schur_norm(&rect, &w).is_err());
        assert!(Weight::subexponential(1.0, 1.0).is_err());
        assert!(Weight::polynomial(-1.0).is_err());
    }

    #[test]
    fn cd_norm_on_box() {
        let s = Arc::new(MetricSpace::zd_box(&[4, 4]).unwrap());
        // shifts by (0,1) with weight 0.25 and identity: two translates
        let mut t = Vec::new();
        for i in 0..16 {
            t.push((i, i, 1.0));
            if i % 4 != 3 {
                t.push((i + 1, i, 0.25));
            }
        }
        let a = IndexedMatrix::square(s, t).unwrap();
        assert_eq!(cd_norm(&a).unwrap(), 1.25);
    }

    #[test]
    fn weight_serde_shape() {
        let w: Weight = serde_json::from_str(r#"{"poly": 1.0}"#).unwrap();
        assert_eq!(w, Weight::Poly(1.0));
        let w: Weight = serde_json::from_str(r#"{"subexp": [0.5, 0.5]}"#).unwrap();
        assert_eq!(w, Weight::Subexp(0.5, 0.5));
    }
}
