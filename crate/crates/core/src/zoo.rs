//! Generators for the standard examples and for random structured matrices.
//! Every random generator is a deterministic function of its seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::opmat::{IndexSet, IndexedMatrix};
use crate::space::MetricSpace;

fn z(n: usize) -> Result<Arc<MetricSpace>> {
    Ok(Arc::new(MetricSpace::z_interval(n)?))
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() { 1.0 } else { -1.0 }
}

/// `I − λD` on rows `0..2n` and columns `0..n`, where `D` duplicates and
/// halves: `(2k, k) = (2k+1, k) = −λ/2`, plus `+1` at `(k, k)`.
pub fn dilation_matrix(n: usize, lambda: f64) -> Result<IndexedMatrix> {
    if n == 0 || !(lambda > 0.0) {
        return Err(Error::Parameter(format!("dilation needs n >= 1 and lambda > 0, got n={n}, lambda={lambda}")));
    }
    let mut t = Vec::with_capacity(3 * n);
    for k in 0..n {
        t.push((k, k, 1.0));
        t.push((2 * k, k, -lambda / 2.0));
        t.push((2 * k + 1, k, -lambda / 2.0));
    }
    IndexedMatrix::from_triplets_summing(IndexSet::Metric(z(2 * n)?), IndexSet::Metric(z(n)?), t)
}

/// The duplication part `D` alone (`λ = 1`), rows `0..2n`, columns `0..n`.
pub fn dilation_part(n: usize) -> Result<IndexedMatrix> {
    if n == 0 {
        return Err(Error::Parameter("dilation needs n >= 1".into()));
    }
    let t = (0..n).flat_map(|k| [(2 * k, k, 0.5), (2 * k + 1, k, 0.5)]).collect();
    IndexedMatrix::from_triplets(IndexSet::Metric(z(2 * n)?), IndexSet::Metric(z(n)?), t)
}

/// `φ_m = 1_{[0, m−1]}/m` on a window of `len` points.
pub fn dilation_test_vector(m: usize, len: usize) -> Vec<f64> {
    (0..len).map(|i| if i < m { 1.0 / m as f64 } else { 0.0 }).collect()
}

/// `‖(I − D*)φ_n‖₁` for each `n`, computed from [`dilation_matrix`] at `λ = 1`.
pub fn dilation_curve(ns: &[usize]) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let a = dilation_matrix(n, 1.0)?;
            let phi = dilation_test_vector(n, 2 * n);
            let image = a.adjoint().apply(&phi)?;
            Ok((n, image.iter().map(|v| v.abs()).sum()))
        })
        .collect()
}

/// Column `n` (1-indexed) holds `n` entries `n^{−1/p}` in the fresh rows
/// `T(n−1)..T(n)`, `T` the triangular numbers.
pub fn staircase_matrix(p: f64, n_cols: usize) -> Result<IndexedMatrix> {
    if !(p > 0.0) || !p.is_finite() || n_cols == 0 {
        return Err(Error::Parameter(format!("staircase needs 0 < p < inf and N >= 1, got p={p}, N={n_cols}")));
    }
    let rows = n_cols * (n_cols + 1) / 2;
    let mut t = Vec::with_capacity(rows);
    for n in 1..=n_cols {
        let start = (n - 1) * n / 2;
        let v = (n as f64).powf(-1.0 / p);
        for row in start..start + n {
            t.push((row, n - 1, v));
        }
    }
    IndexedMatrix::from_triplets(IndexSet::Plain(rows), IndexSet::Metric(z(n_cols)?), t)
}

/// `I − P` on an integer window: `1` on the diagonal, `−1/2` at distance 1.
pub fn random_walk_operator(n: usize) -> Result<IndexedMatrix> {
    if n < 2 {
        return Err(Error::Parameter(format!("random walk needs n >= 2, got {n}")));
    }
    tridiagonal(n, 1.0, -0.5)
}

/// `(I − P) + shift·I`, uniformly elliptic for `shift > 0`.
pub fn elliptic_operator(n: usize, shift: f64) -> Result<IndexedMatrix> {
    if n < 2 {
        return Err(Error::Parameter(format!("elliptic operator needs n >= 2, got {n}")));
    }
    tridiagonal(n, 1.0 + shift, -0.5)
}

fn tridiagonal(n: usize, diag: f64, off: f64) -> Result<IndexedMatrix> {
    let mut t = Vec::with_capacity(3 * n);
    for x in 0..n {
        if x > 0 {
            t.push((x, x - 1, off));
        }
        t.push((x, x, diag));
        if x + 1 < n {
            t.push((x, x + 1, off));
        }
    }
    IndexedMatrix::square(z(n)?, t)
}

pub fn identity(n: usize) -> Result<IndexedMatrix> {
    Ok(IndexedMatrix::identity(z(n)?))
}

/// Uniform `[−1, 1]` entries exactly on `{(y, x) : |y − αx| ≤ width}` in the
/// `n`-window.
pub fn slanted_matrix(alpha: f64, width: f64, n: usize, seed: u64) -> Result<IndexedMatrix> {
    if alpha == 0.0 || !alpha.is_finite() || !(width >= 0.0) || n == 0 {
        return Err(Error::Parameter(format!("slanted matrix needs alpha != 0, width >= 0, n >= 1; got {alpha}, {width}, {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for y in 0..n {
        for x in 0..n {
            if (y as f64 - alpha * x as f64).abs() <= width {
                t.push((y, x, rng.random_range(-1.0..=1.0)));
            }
        }
    }
    IndexedMatrix::square(z(n)?, t)
}

/// Random square matrix on `space` whose row `y` is supported in `B(y, r)`
/// and whose columns have at most `v` entries. Each admissible entry is kept
/// with probability `density`; the diagonal is always tried first.
pub fn random_thin_sparse(space: Arc<MetricSpace>, r: f64, v: usize, density: f64, seed: u64) -> Result<IndexedMatrix> {
    if !(r >= 0.0) || v == 0 {
        return Err(Error::Infeasible(format!("thin-sparse generation needs r >= 0 and v >= 1, got r={r}, v={v}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Parameter(format!("density must lie in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let mut counts = vec![0usize; n];
    let mut t = Vec::new();
    for y in 0..n {
        if counts[y] < v {
            counts[y] += 1;
            t.push((y, y, rng.random_range(-1.0..=1.0)));
        }
        for x in space.ball(y, r) {
            if x != y && counts[x] < v && rng.random::<f64>() < density {
                counts[x] += 1;
                t.push((y, x, rng.random_range(-1.0..=1.0)));
            }
        }
    }
    IndexedMatrix::square(space, t)
}

/// Random banded matrix on an integer window with entries in `[−1, 1]` at
/// distance `≤ r`. With `margin = Some(m)` the diagonal dominates both row
/// and column sums by `m`, so `σ_min ≥ m`.
pub fn random_banded(n: usize, r: usize, margin: Option<f64>, seed: u64) -> Result<IndexedMatrix> {
    if n == 0 {
        return Err(Error::Parameter("banded matrix needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    let mut row_sums = vec![0.0; n];
    let mut col_sums = vec![0.0; n];
    for y in 0..n {
        for x in y.saturating_sub(r)..=(y + r).min(n - 1) {
            let v: f64 = rng.random_range(-1.0..=1.0);
            if x != y {
                row_sums[y] += v.abs();
                col_sums[x] += v.abs();
            }
            t.push((y, x, v));
        }
    }
    if let Some(m) = margin {
        for e in t.iter_mut().filter(|e| e.0 == e.1) {
            let s = if e.2 < 0.0 { -1.0 } else { 1.0 };
            e.2 = s * (row_sums[e.0].max(col_sums[e.0]) + m);
        }
    }
    IndexedMatrix::square(z(n)?, t)
}

/// Random matrix from `rows` points to an integer window of `n` columns:
/// each row picks a random center and random entries in `(0, 1]` inside the
/// ball of radius `r` around it. Columns are unconstrained.
pub fn random_thin_empty(rows: usize, n: usize, r: usize, seed: u64) -> Result<IndexedMatrix> {
    if n == 0 || rows == 0 {
        return Err(Error::Parameter("thin-empty matrix needs rows and columns".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for y in 0..rows {
        let c = rng.random_range(0..n);
        for x in c.saturating_sub(r)..=(c + r).min(n - 1) {
            if x == c || rng.random::<bool>() {
                let v: f64 = rng.random();
                t.push((y, x, 1.0 - v));
            }
        }
    }
    IndexedMatrix::from_triplets(IndexSet::Plain(rows), IndexSet::Metric(z(n)?), t)
}

/// `a_{x,y} = s_{x,y}·(1 + d(x, y))^{−β}` with random signs.
pub fn polynomial_decay_matrix(space: Arc<MetricSpace>, beta: f64, seed: u64) -> Result<IndexedMatrix> {
    if !(beta > 1.0) {
        return Err(Error::Parameter(format!("polynomial decay needs beta > 1, got {beta}")));
    }
    decay_matrix(space, seed, |d| (1.0 + d).powf(-beta))
}

/// `a_{x,y} = s_{x,y}·exp(−rate·d(x, y))` with random signs; entries that
/// underflow to zero are omitted.
pub fn exponential_decay_matrix(space: Arc<MetricSpace>, rate: f64, seed: u64) -> Result<IndexedMatrix> {
    if !(rate > 0.0) {
        return Err(Error::Parameter(format!("exponential decay needs rate > 0, got {rate}")));
    }
    decay_matrix(space, seed, |d| (-rate * d).exp())
}

fn decay_matrix(space: Arc<MetricSpace>, seed: u64, profile: impl Fn(f64) -> f64) -> Result<IndexedMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let mut t = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let v = profile(space.dist(y, x));
            let s = sign(&mut rng);
            if v > 0.0 {
                t.push((y, x, s * v));
            }
        }
    }
    IndexedMatrix::square(space, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{lp_norm, Exponent};

    #[test]
    fn dilation_layout() {
        let d = dilation_part(4).unwrap();
        let expected: Vec<(usize, usize)> = (0..4).flat_map(|k| [(2 * k, k), (2 * k + 1, k)]).collect();
        let got: Vec<(usize, usize)> = d.entries().map(|(r, c, _)| (r, c)).collect();
        let mut e = expected.clone();
        e.sort();
        assert_eq!(got, e);
        let a = dilation_matrix(4, 1.0).unwrap();
        assert_eq!(a.get(0, 0), 0.5);
        assert_eq!(a.get(1, 0), -0.5);
        assert_eq!(a.get(2, 1), -0.5);
        assert_eq!(a.get(2, 2), 1.0);
    }

    #[test]
    fn duplication_identity() {
        let d = dilation_part(5).unwrap();
        let f = [1.0, -2.0, 0.5, 3.0, 0.0];
        for p in [0.5, 1.0, 2.0, 3.0] {
            let p = Exponent::new(p).unwrap();
            let lhs = lp_norm(&d.apply(&f).unwrap(), p);
            let rhs = 2f64.powf(p.recip() - 1.0) * lp_norm(&f, p);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation_curve_is_one_half_for_even_n() {
        for (n, v) in dilation_curve(&[4, 8, 16, 1024]).unwrap() {
            assert!((v - 0.5).abs() < 1e-12, "n={n}: {v}");
        }
    }

    #[test]
    fn staircase_columns() {
        let a = staircase_matrix(1.0, 16).unwrap();
        assert_eq!(a.nrows(), 136);
        for (c, col) in a.columns().iter().enumerate() {
            assert_eq!(col.len(), c + 1);
            let vals: Vec<f64> = col.iter().map(|e| e.1).collect();
            assert!((lp_norm(&vals, Exponent::ONE) - 1.0).abs() < 1e-12);
        }
        let mut e = vec![0.0; 16];
        e[15] = 1.0;
        assert!((lp_norm(&a.apply(&e).unwrap(), Exponent::INFINITY) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn random_walk_structure() {
        let a = random_walk_operator(200).unwrap();
        assert_eq!(a.nnz(), 598);
        assert_eq!(a.stats().thickness, Some(1.0));
        assert_eq!(crate::opmat::schur_norm(&a), 4.0);
        let image = a.apply(&[1.0; 200]).unwrap();
        assert!(image[1..199].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn slanted_support() {
        let a = slanted_matrix(1.0, 0.0, 10, 3).unwrap();
        assert!(a.entries().all(|(r, c, _)| r == c));
        let b = slanted_matrix(2.0, 1.0, 10, 3).unwrap();
        assert!(b.stats().thickness.unwrap() <= 1.0);
        assert!(b.stats().sparseness <= 4);
        assert_eq!(slanted_matrix(2.0, 1.0, 10, 3).unwrap(), b);
    }

    #[test]
    fn generators_respect_structure() {
        let s = Arc::new(MetricSpace::z_interval(300).unwrap());
        for seed in 0..5 {
            let a = random_thin_sparse(s.clone(), 3.0, 4, 0.6, seed).unwrap();
            let st = a.stats();
            assert!(st.thickness.unwrap() <= 3.0 && st.sparseness <= 4);
            assert_eq!(a, random_thin_sparse(s.clone(), 3.0, 4, 0.6, seed).unwrap());
        }
        let a = random_thin_empty(50, 40, 2, 1).unwrap();
        assert!(a.stats().thickness.unwrap() <= 2.0);
        assert!(random_thin_sparse(s, 1.0, 0, 0.5, 0).is_err());
    }

    #[test]
    fn dominant_banded_is_bounded_below() {
        let a = random_banded(60, 3, Some(0.5), 9).unwrap();
        let (sigma, _) = crate::dense::smallest_singular(&a.to_dense());
        assert!(sigma >= 0.5);
    }
}
