//! Sparse real matrices `A = (a_{y,x})` indexed by a row set `Y` and a
//! column metric space `X`, with their structural statistics.
//!
//! Storage is compressed by rows; entries are kept in `(row, col)` order and
//! are never dropped implicitly, however small.

mod checks;
pub(crate) mod norms;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::MetricSpace;

pub use checks::{
    check_disjoint_supports, check_gram_banded, sparse_sparse_bound, DisjointSupportCheck, GramBandCheck,
    SparseSparseBound,
};
pub use norms::{cd_norm, op_norm, schur_norm, weighted_schur_norm, NormEstimate, NormKind, Weight};

/// An index set: either a metric space or a bare set of the given size.
#[derive(Clone, Debug)]
pub enum IndexSet {
    Metric(Arc<MetricSpace>),
    Plain(usize),
}

impl IndexSet {
    pub fn len(&self) -> usize {
        match self {
            IndexSet::Metric(s) => s.len(),
            IndexSet::Plain(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn metric(&self) -> Option<&MetricSpace> {
        match self {
            IndexSet::Metric(s) => Some(s),
            IndexSet::Plain(_) => None,
        }
    }

    fn same_as(&self, other: &IndexSet) -> bool {
        match (self, other) {
            (IndexSet::Metric(a), IndexSet::Metric(b)) => Arc::ptr_eq(a, b) || a == b,
            (IndexSet::Plain(a), IndexSet::Plain(b)) => a == b,
            _ => false,
        }
    }
}

/// Thickness, sparseness and band width of a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralStats {
    /// Smallest `r` with every row support inside some `B(x, r)`, `x ∈ X`.
    /// `None` when the column set carries no metric.
    pub thickness: Option<f64>,
    /// Largest column support.
    pub sparseness: usize,
    /// Largest row support.
    pub max_row_nnz: usize,
    /// `max d(y, x)` over the support, only when `Y = X`.
    pub band_width: Option<f64>,
    pub nnz: usize,
}

#[derive(Clone, Debug)]
pub struct IndexedMatrix {
    rows: IndexSet,
    cols: IndexSet,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    stats: StructuralStats,
}

impl PartialEq for IndexedMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows.same_as(&other.rows)
            && self.cols.same_as(&other.cols)
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
            && self.values == other.values
    }
}

impl IndexedMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates,
    /// out-of-range indices and non-finite values are rejected.
    pub fn from_triplets(rows: IndexSet, cols: IndexSet, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for (k, &(r, c, v)) in triplets.iter().enumerate() {
            if r >= rows.len() || c >= cols.len() {
                return Err(Error::Shape(format!(
                    "entry {k} at ({r}, {c}) is outside {} x {}",
                    rows.len(),
                    cols.len()
                )));
            }
            if !v.is_finite() {
                return Err(Error::Format(format!("entry {k} at ({r}, {c}) is not finite")));
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::Format(format!("duplicate entry at ({}, {})", w[0].0, w[0].1)));
        }
        Ok(Self::from_sorted(rows, cols, triplets))
    }

    /// Like [`from_triplets`](Self::from_triplets) but sums duplicates.
    pub fn from_triplets_summing(rows: IndexSet, cols: IndexSet, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (r, c) => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        Self::from_triplets(rows, cols, merged)
    }

    fn from_sorted(rows: IndexSet, cols: IndexSet, triplets: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0usize; rows.len() + 1];
        for &(r, _, _) in &triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows.len() {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = triplets.iter().map(|t| t.1).collect();
        let values = triplets.iter().map(|t| t.2).collect();
        let mut m = IndexedMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
            stats: StructuralStats { thickness: None, sparseness: 0, max_row_nnz: 0, band_width: None, nnz: 0 },
        };
        m.stats = m.compute_stats();
        m
    }

    /// Square matrix on `X × X` from triplets.
    pub fn square(space: Arc<MetricSpace>, triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        Self::from_triplets(IndexSet::Metric(space.clone()), IndexSet::Metric(space), triplets)
    }

    pub fn identity(space: Arc<MetricSpace>) -> Self {
        let n = space.len();
        Self::square(space, (0..n).map(|i| (i, i, 1.0)).collect()).expect("identity is well formed")
    }

    /// Converts a dense matrix, keeping entries with `|v| > drop_below`
    /// (`drop_below < 0` keeps everything, including zeros).
    pub fn from_dense(rows: IndexSet, cols: IndexSet, m: &DMatrix<f64>, drop_below: f64) -> Result<Self> {
        if m.nrows() != rows.len() || m.ncols() != cols.len() {
            return Err(Error::Shape(format!(
                "dense matrix is {}x{}, index sets are {}x{}",
                m.nrows(),
                m.ncols(),
                rows.len(),
                cols.len()
            )));
        }
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.abs() > drop_below {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows, cols, t)
    }

    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    pub fn cols(&self) -> &IndexSet {
        &self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn stats(&self) -> StructuralStats {
        self.stats
    }

    /// The column space `X`, when it is metric.
    pub fn col_space(&self) -> Option<&MetricSpace> {
        self.cols.metric()
    }

    /// The shared column space handle, when it is metric.
    pub fn col_space_arc(&self) -> Option<Arc<MetricSpace>> {
        match &self.cols {
            IndexSet::Metric(s) => Some(s.clone()),
            IndexSet::Plain(_) => None,
        }
    }

    /// Whether `Y = X` as metric spaces.
    pub fn is_square_metric(&self) -> bool {
        matches!(self.rows, IndexSet::Metric(_)) && self.rows.same_as(&self.cols)
    }

    /// Entries in `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.entries().collect()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// `‖A‖_sup = max |a_{y,x}|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Row indices and values of every column.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.ncols()];
        for (r, c, v) in self.entries() {
            cols[c].push((r, v));
        }
        cols
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols());
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// `(Af)(y) = Σ_x a_{y,x} f(x)`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.ncols() {
            return Err(Error::Shape(format!("function has {} values, matrix has {} columns", f.len(), self.ncols())));
        }
        Ok(self.apply_unchecked(f))
    }

    pub(crate) fn apply_unchecked(&self, f: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * f[c]).sum()
            })
            .collect()
    }

    /// `A^T g` without materializing the adjoint.
    pub(crate) fn apply_adjoint_unchecked(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        for (r, c, v) in self.entries() {
            out[c] += v * g[r];
        }
        out
    }

    /// `A*` (transpose; entries are real).
    pub fn adjoint(&self) -> Self {
        let t = self.entries().map(|(r, c, v)| (c, r, v)).collect::<Vec<_>>();
        let mut t = t;
        t.sort_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted(self.cols.clone(), self.rows.clone(), t)
    }

    /// `|A| = (|a_{y,x}|)`.
    pub fn abs(&self) -> Self {
        self.map_values(f64::abs)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_values(|v| v * factor)
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.values {
            *v = f(*v);
        }
        m
    }

    /// Keeps the entries selected by the predicate.
    pub fn filter(&self, keep: impl Fn(usize, usize, f64) -> bool) -> Self {
        let t = self.entries().filter(|&(r, c, v)| keep(r, c, v)).collect();
        Self::from_sorted(self.rows.clone(), self.cols.clone(), t)
    }

    /// The sparse product `self · other`. Every structurally produced entry is
    /// kept, including exact cancellations.
    pub fn compose(&self, other: &IndexedMatrix) -> Result<Self> {
        if self.ncols() != other.nrows() || !compatible(&self.cols, &other.rows) {
            return Err(Error::Shape(format!(
                "cannot compose {}x{} with {}x{}",
                self.nrows(),
                self.ncols(),
                other.nrows(),
                other.ncols()
            )));
        }
        let mut t = Vec::new();
        let mut acc = vec![0.0f64; other.ncols()];
        let mut touched = vec![false; other.ncols()];
        let mut pattern = Vec::new();
        for r in 0..self.nrows() {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&c, &b) in ocols.iter().zip(ovals) {
                    if !touched[c] {
                        touched[c] = true;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                t.push((r, c, acc[c]));
                acc[c] = 0.0;
                touched[c] = false;
            }
            pattern.clear();
        }
        Ok(Self::from_sorted(self.rows.clone(), other.cols.clone(), t))
    }

    /// `self − other` on the union of supports.
    pub fn sub(&self, other: &IndexedMatrix) -> Result<Self> {
        if !self.rows.same_as(&other.rows) || !self.cols.same_as(&other.cols) {
            return Err(Error::Shape("cannot subtract matrices on different index sets".into()));
        }
        let t = self.entries().chain(other.entries().map(|(r, c, v)| (r, c, -v))).collect();
        Self::from_triplets_summing(self.rows.clone(), self.cols.clone(), t)
    }

    /// Restricts a matrix on a `z_interval` (with `Y = X`) to the window
    /// `{0, …, n−1}` by dropping rows and columns outside it.
    pub fn restrict_window(&self, n: usize) -> Result<Self> {
        let space = self
            .col_space()
            .filter(|_| self.is_square_metric())
            .ok_or_else(|| Error::Structure("window restriction needs Y = X".into()))?;
        let sub = Arc::new(space.z_prefix(n)?);
        let t = self.entries().filter(|&(r, c, _)| r < n && c < n).collect();
        Ok(Self::from_sorted(IndexSet::Metric(sub.clone()), IndexSet::Metric(sub), t))
    }

    /// Support of row `r` (structural).
    pub fn row_support(&self, r: usize) -> &[usize] {
        self.row(r).0
    }

    /// A center `x ∈ X` with the support of row `r` inside `B(x, thickness)`.
    pub fn row_center(&self, r: usize) -> Option<(usize, f64)> {
        self.col_space()?.enclosing_ball(self.row_support(r))
    }

    fn compute_stats(&self) -> StructuralStats {
        let mut col_counts = vec![0usize; self.ncols()];
        for &c in &self.col_idx {
            col_counts[c] += 1;
        }
        let sparseness = col_counts.into_iter().max().unwrap_or(0);
        let max_row_nnz = (0..self.nrows()).map(|r| self.row_ptr[r + 1] - self.row_ptr[r]).max().unwrap_or(0);
        let thickness = self.col_space().map(|space| {
            (0..self.nrows())
                .filter_map(|r| space.enclosing_ball(self.row_support(r)).map(|(_, rad)| rad))
                .fold(0.0, f64::max)
        });
        let band_width = if self.is_square_metric() {
            let space = self.col_space().expect("metric");
            Some(self.entries().map(|(r, c, _)| space.dist(r, c)).fold(0.0, f64::max))
        } else {
            None
        };
        StructuralStats { thickness, sparseness, max_row_nnz, band_width, nnz: self.values.len() }
    }
}

fn compatible(a: &IndexSet, b: &IndexSet) -> bool {
    a.same_as(b)
}

/// Structural statistics recomputed from scratch.
pub fn structural_stats(a: &IndexedMatrix) -> StructuralStats {
    a.compute_stats()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricSpace;

    pub(crate) fn zspace(n: usize) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::z_interval(n).unwrap())
    }

    fn dense2(a: [[f64; 2]; 2]) -> IndexedMatrix {
        let s = zspace(2);
        let t = (0..2).flat_map(|i| (0..2).map(move |j| (i, j, a[i][j]))).collect();
        IndexedMatrix::square(s, t).unwrap()
    }

    #[test]
    fn apply_small() {
        let a = dense2([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(a.apply(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert!(a.apply(&[1.0]).is_err());
        let i = IndexedMatrix::identity(zspace(5));
        let f = vec![1.0, -2.0, 3.5, 0.0, 9.0];
        assert_eq!(i.apply(&f).unwrap(), f);
    }

    #[test]
    fn adjoint_abs_compose_laws() {
        let s = zspace(1);
        let a = IndexedMatrix::from_triplets(IndexSet::Plain(1), IndexSet::Plain(2), vec![(0, 0, 1.0), (0, 1, -2.0)]).unwrap();
        assert_eq!(a.abs().triplets(), vec![(0, 0, 1.0), (0, 1, 2.0)]);
        assert_eq!(a.adjoint().adjoint(), a);
        let b = dense2([[1.0, 2.0], [3.0, 4.0]]);
        let i = IndexedMatrix::identity(b.col_space_arc().unwrap());
        assert_eq!(b.compose(&i).unwrap(), b);
        assert!(b.compose(&IndexedMatrix::identity(s)).is_err());
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        let s = zspace(3);
        assert!(IndexedMatrix::square(s.clone(), vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(IndexedMatrix::square(s.clone(), vec![(3, 0, 1.0)]).is_err());
        assert!(IndexedMatrix::square(s.clone(), vec![(0, 0, f64::NAN)]).is_err());
        let m = IndexedMatrix::from_triplets_summing(
            IndexSet::Metric(s.clone()),
            IndexSet::Metric(s),
            vec![(0, 0, 1.0), (0, 0, 2.0)],
        )
        .unwrap();
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn stats_of_simple_matrices() {
        let s = zspace(100);
        let row: Vec<_> = (47..=53).map(|c| (0, c, 1.0)).collect();
        let m = IndexedMatrix::square(s.clone(), row).unwrap();
        assert_eq!(m.stats().thickness, Some(3.0));
        assert_eq!(m.row_center(0), Some((50, 3.0)));

        let d = IndexedMatrix::square(s.clone(), (0..100).map(|i| (i, i, (i + 1) as f64)).collect()).unwrap();
        let st = d.stats();
        assert_eq!(st.thickness, Some(0.0));
        assert_eq!(st.sparseness, 1);
        assert_eq!(st.band_width, Some(0.0));
        assert_eq!(structural_stats(&d), st);
    }

    #[test]
    fn restrict_window_keeps_leading_block() {
        let s = zspace(10);
        let t = (0..10).flat_map(|i| [(i, i, 1.0)].into_iter().chain((i + 1 < 10).then_some((i, i + 1, -0.5)))).collect();
        let m = IndexedMatrix::square(s, t).unwrap();
        let w = m.restrict_window(4).unwrap();
        assert_eq!(w.nrows(), 4);
        assert_eq!(w.nnz(), 7);
    }

    #[test]
    fn sub_and_filter() {
        let a = dense2([[1.0, 2.0], [3.0, 4.0]]);
        let diag = a.filter(|r, c, _| r == c);
        let off = a.sub(&diag).unwrap();
        assert_eq!(off.get(0, 1), 2.0);
        assert_eq!(off.get(0, 0), 0.0);
    }
}
