use serde::{Deserialize, Serialize};

use super::norms::{column_abs_sums, row_abs_sums};
use super::IndexedMatrix;
use super::norms::lanczos_norm;
use crate::dense::{self, DENSE_CAP};
use crate::error::{Error, Result};

/// Above this dimension `‖A‖₂` is found by Lanczos iteration instead of an SVD.
const SVD_LIMIT: usize = 250;

/// Result of the disjoint-support check: 2r-disjoint inputs must have
/// disjoint images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisjointSupportCheck {
    pub thickness: f64,
    /// `d(supp u, supp v)`; `+∞` when either support is empty.
    pub support_distance: f64,
    /// Whether `d(supp u, supp v) > 2r`.
    pub precondition_met: bool,
    pub disjoint: bool,
}

impl DisjointSupportCheck {
    /// The implication "precondition ⇒ disjoint".
    pub fn holds(&self) -> bool {
        !self.precondition_met || self.disjoint
    }
}

fn support(f: &[f64]) -> Vec<usize> {
    f.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
}

pub fn check_disjoint_supports(a: &IndexedMatrix, u: &[f64], v: &[f64]) -> Result<DisjointSupportCheck> {
    let space = a.col_space().ok_or_else(|| Error::Structure("columns carry no metric".into()))?;
    let thickness = a.stats().thickness.unwrap_or(0.0);
    let au = a.apply(u)?;
    let av = a.apply(v)?;
    let (su, sv) = (support(u), support(v));
    let mut support_distance = f64::INFINITY;
    for &x in &su {
        for &y in &sv {
            support_distance = support_distance.min(space.dist(x, y));
        }
    }
    let disjoint = au.iter().zip(&av).all(|(x, y)| *x == 0.0 || *y == 0.0);
    Ok(DisjointSupportCheck {
        thickness,
        support_distance,
        precondition_met: support_distance > 2.0 * thickness,
        disjoint,
    })
}

/// Band width ("propagation") of `A*A` measured on `X`, against `2·thickness`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramBandCheck {
    pub thickness: f64,
    pub propagation: f64,
    pub banded: bool,
}

pub fn check_gram_banded(a: &IndexedMatrix) -> Result<GramBandCheck> {
    let space = a.col_space().ok_or_else(|| Error::Structure("columns carry no metric".into()))?;
    let thickness = a.stats().thickness.unwrap_or(0.0);
    let gram = a.adjoint().compose(a)?;
    let propagation = gram.entries().map(|(x, y, _)| space.dist(x, y)).fold(0.0, f64::max);
    Ok(GramBandCheck { thickness, propagation, banded: propagation <= 2.0 * thickness })
}

/// `‖A‖_{p→p} ≤ v·‖A‖_sup` for sparse-sparse `A`, checked with exact norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSparseBound {
    /// Largest row or column support.
    pub v: usize,
    pub sup: f64,
    pub bound: f64,
    pub norm_1: f64,
    /// `None` above the dense capacity.
    pub norm_2: Option<f64>,
    pub norm_inf: f64,
    pub verified: bool,
}

pub fn sparse_sparse_bound(a: &IndexedMatrix) -> SparseSparseBound {
    let st = a.stats();
    let v = st.sparseness.max(st.max_row_nnz);
    let sup = a.max_abs();
    let bound = v as f64 * sup;
    let norm_1 = column_abs_sums(a).into_iter().fold(0.0, f64::max);
    let norm_inf = row_abs_sums(a).into_iter().fold(0.0, f64::max);
    let dim = a.nrows().max(a.ncols());
    let norm_2 = if dim <= SVD_LIMIT {
        Some(dense::sigma_max(&a.to_dense()))
    } else if dim <= DENSE_CAP {
        Some(lanczos_norm(a, 1e-13, 300))
    } else {
        None
    };
    // relative slack only for the floating-point SVD
    let slack = 1e-12 * bound.max(1.0);
    let verified = norm_1 <= bound && norm_inf <= bound && norm_2.is_none_or(|n| n <= bound + slack);
    SparseSparseBound { v, sup, bound, norm_1, norm_2, norm_inf, verified }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::space::MetricSpace;

    fn z(n: usize) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::z_interval(n).unwrap())
    }

    #[test]
    fn identity_point_masses() {
        let i = IndexedMatrix::identity(z(10));
        let mut u = vec![0.0; 10];
        let mut v = vec![0.0; 10];
        u[0] = 1.0;
        v[5] = 1.0;
        let c = check_disjoint_supports(&i, &u, &v).unwrap();
        assert!(c.precondition_met && c.disjoint);
        let same = check_disjoint_supports(&i, &u, &u).unwrap();
        assert!(!same.precondition_met && !same.disjoint && same.holds());
    }

    #[test]
    fn gram_of_tridiagonal() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = IndexedMatrix::square(z(n), t).unwrap();
        let g = check_gram_banded(&a).unwrap();
        assert_eq!(g.thickness, 1.0);
        assert_eq!(g.propagation, 2.0);
        assert!(g.banded);
        let d = IndexedMatrix::square(z(5), (0..5).map(|i| (i, i, 3.0)).collect()).unwrap();
        assert_eq!(check_gram_banded(&d).unwrap().propagation, 0.0);
    }

    #[test]
    fn sparse_sparse_small_cases() {
        // signed permutation
        let p = IndexedMatrix::square(z(4), vec![(0, 2, 1.0), (1, 0, -1.0), (2, 3, 1.0), (3, 1, -1.0)]).unwrap();
        let b = sparse_sparse_bound(&p);
        assert_eq!(b.v, 1);
        assert!(b.verified);
        assert!((b.norm_2.unwrap() - 1.0).abs() < 1e-12);
        // v = 2, all ones
        let m = IndexedMatrix::square(z(3), vec![(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0), (1, 2, 1.0), (2, 2, 1.0)]).unwrap();
        let b = sparse_sparse_bound(&m);
        assert_eq!(b.v, 2);
        assert!(b.norm_1 <= 2.0 && b.verified);
    }
}
