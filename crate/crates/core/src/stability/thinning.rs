use serde::{Deserialize, Serialize};

use crate::dense::{check_capacity, sigma_max};
use crate::error::{Error, Result};
use crate::exponent::{lp_norm, Exponent};
use crate::opmat::norms::{column_abs_sums, row_abs_sums};
use crate::opmat::IndexedMatrix;

/// Relative slack allowed when comparing a measured norm with its bound.
const BOUND_SLACK: f64 = 1e-12;

/// Bound on `(Σ_{i>m} a_i^q)^{1/q}` over decreasing non-negative sequences
/// with `Σ a_i^p ≤ 1`:
/// `(p/q)^{1/q}·(1−p/q)^{1/p−1/q} / m^{1/p−1/q}` for finite `q`, and
/// `(m+1)^{−1/p}` for `q = ∞`.
pub fn sequence_tail_bound(p: Exponent, q: Exponent, m: usize) -> Result<f64> {
    if p.is_infinite() {
        return Err(Error::Parameter("the tail bound needs a finite p".into()));
    }
    if q <= p {
        return Err(Error::Parameter(format!("the tail bound needs q > p, got p={p}, q={q}")));
    }
    if m == 0 {
        return Err(Error::Parameter("the tail bound needs m >= 1".into()));
    }
    let pv = p.value();
    let m = m as f64;
    if q.is_infinite() {
        return Ok((m + 1.0).powf(-1.0 / pv));
    }
    let qv = q.value();
    let ratio = pv / qv;
    let gap = 1.0 / pv - 1.0 / qv;
    Ok(ratio.powf(1.0 / qv) * (1.0 - ratio).powf(gap) / m.powf(gap))
}

/// `‖|A − A_m|‖_{q→q}` measured exactly where possible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredTail {
    pub q1: f64,
    /// `None` above the dense capacity.
    pub q2: Option<f64>,
    pub q_inf: f64,
}

#[derive(Clone, Debug)]
pub struct ThinningResult {
    /// `A_m` at the original scale.
    pub thinned: IndexedMatrix,
    /// The factor `A` was divided by before thinning (largest column `ℓ^p` norm).
    pub scale: f64,
    pub m: usize,
    pub p: Exponent,
    pub q: Exponent,
    pub thickness: f64,
    /// Largest ball volume `v(r)` at the thickness.
    pub ball_volume: usize,
    /// `sequence_tail_bound(p, q, m)·v(r)^{1−1/q}` for the normalized matrix.
    pub bound: f64,
    /// Norms of the normalized tail `|A − A_m|/scale`.
    pub measured: MeasuredTail,
    /// The measured norm at `q`, when available.
    pub measured_q: Option<f64>,
    pub holds: Option<bool>,
}

/// Keeps the `m` largest-magnitude entries of each column (smallest row id
/// on ties) and compares the discarded part with the closed-form bound.
pub fn top_m_thinning(a: &IndexedMatrix, m: usize, p: Exponent, q: Exponent) -> Result<ThinningResult> {
    let space = a
        .col_space()
        .ok_or_else(|| Error::Structure("thinning needs a metric column set".into()))?;
    let r = a
        .stats()
        .thickness
        .ok_or_else(|| Error::Structure("thinning needs a thin matrix".into()))?;
    if q.value() < 1.0 || q < p {
        return Err(Error::Parameter(format!("thinning needs q >= max(p, 1), got p={p}, q={q}")));
    }
    let tail_constant = sequence_tail_bound(p, q, m)?;

    let columns = a.columns();
    let scale = columns
        .iter()
        .map(|col| lp_norm(&col.iter().map(|e| e.1).collect::<Vec<_>>(), p))
        .fold(0.0, f64::max);
    let mut keep = Vec::with_capacity(a.nnz());
    let mut tail = Vec::new();
    for (c, col) in columns.iter().enumerate() {
        let mut order: Vec<usize> = (0..col.len()).collect();
        order.sort_by(|&i, &j| col[j].1.abs().total_cmp(&col[i].1.abs()).then(col[i].0.cmp(&col[j].0)));
        for (rank, &i) in order.iter().enumerate() {
            let (row, v) = col[i];
            if rank < m {
                keep.push((row, c, v));
            } else if scale > 0.0 {
                tail.push((row, c, (v / scale).abs()));
            }
        }
    }
    let thinned = IndexedMatrix::from_triplets(a.rows().clone(), a.cols().clone(), keep)?;
    let tail = IndexedMatrix::from_triplets(a.rows().clone(), a.cols().clone(), tail)?;

    let q1 = column_abs_sums(&tail).into_iter().fold(0.0, f64::max);
    let q_inf = row_abs_sums(&tail).into_iter().fold(0.0, f64::max);
    let q2 = if tail.nnz() == 0 {
        Some(0.0)
    } else if check_capacity(tail.nrows(), tail.ncols()).is_ok() {
        Some(sigma_max(&tail.to_dense()))
    } else {
        None
    };
    let measured_q = if q == Exponent::ONE {
        Some(q1)
    } else if q == Exponent::TWO {
        q2
    } else if q.is_infinite() {
        Some(q_inf)
    } else {
        None
    };
    let ball_volume = space.max_volume(r);
    let bound = tail_constant * (ball_volume as f64).powf(1.0 - q.recip());
    let holds = measured_q.map(|v| v <= bound * (1.0 + BOUND_SLACK));
    Ok(ThinningResult {
        thinned,
        scale,
        m,
        p,
        q,
        thickness: r,
        ball_volume,
        bound,
        measured: MeasuredTail { q1, q2, q_inf },
        measured_q,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::space::MetricSpace;

    #[test]
    fn closed_forms() {
        let p1 = Exponent::ONE;
        let p2 = Exponent::TWO;
        assert!((sequence_tail_bound(p1, p2, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((sequence_tail_bound(p1, p2, 4).unwrap() - 0.25).abs() < 1e-15);
        assert!((sequence_tail_bound(p1, Exponent::INFINITY, 3).unwrap() - 0.25).abs() < 1e-15);
        assert!(sequence_tail_bound(p2, p1, 1).is_err());
        assert!(sequence_tail_bound(p2, p2, 1).is_err());
        assert!(sequence_tail_bound(p1, p2, 0).is_err());
    }

    #[test]
    fn single_column_example() {
        let s = Arc::new(MetricSpace::z_interval(3).unwrap());
        let a = IndexedMatrix::square(s, vec![(0, 0, 0.5), (1, 0, 0.3), (2, 0, 0.2)]).unwrap();
        let res = top_m_thinning(&a, 1, Exponent::ONE, Exponent::TWO).unwrap();
        assert_eq!(res.thinned.triplets(), vec![(0, 0, 0.5)]);
        assert!((res.measured.q2.unwrap() - 0.13f64.sqrt()).abs() < 1e-12);
        assert_eq!(res.holds, Some(true));
    }

    #[test]
    fn large_m_keeps_everything() {
        let s = Arc::new(MetricSpace::z_interval(4).unwrap());
        let a = IndexedMatrix::square(s, vec![(0, 0, 1.0), (1, 0, -2.0), (3, 2, 0.5)]).unwrap();
        let res = top_m_thinning(&a, 5, Exponent::ONE, Exponent::INFINITY).unwrap();
        assert_eq!(res.thinned, a);
        assert_eq!(res.measured_q, Some(0.0));
    }
}
