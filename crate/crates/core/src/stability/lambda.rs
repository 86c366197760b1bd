use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{localize, ratio, LambdaEstimate, Method};
use crate::dense::{check_capacity, smallest_singular};
use crate::error::{Error, Result};
use crate::exponent::{lp_norm, Exponent};
use crate::opmat::IndexedMatrix;

/// Dense SVD seeds are skipped above this dimension.
const EXACT_SEED_CAP: usize = 1500;
/// Dense inverse seeds are skipped above this dimension.
const INVERSE_SEED_CAP: usize = 1000;
/// All unit vectors are tried as starts up to this many columns.
const ALL_UNIT_STARTS: usize = 64;
/// Largest dimension for the exhaustive sign search at `p = ∞`.
const VERTEX_CAP: usize = 22;
/// Relative decrease required to accept a descent step.
const ACCEPT: f64 = 1e-13;

/// Work allowed to [`lambda_estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Random starts of each family (dense, bump, unit vector).
    pub starts: usize,
    /// Descent iterations per start.
    pub iters: usize,
    /// Seed with the dense `σ_min` witness when the dimension allows.
    pub svd_seed: bool,
    /// Seed with witnesses built from the dense inverse of a square matrix.
    pub inverse_seeds: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { starts: 12, iters: 200, svd_seed: true, inverse_seeds: true }
    }
}

/// `σ_min(A)` and its right singular vector from a dense SVD.
pub fn lambda_exact_2(a: &IndexedMatrix) -> Result<LambdaEstimate> {
    if a.ncols() == 0 {
        return Err(Error::Shape("matrix has no columns".into()));
    }
    check_capacity(a.nrows(), a.ncols())?;
    let (sigma, v) = smallest_singular(&a.to_dense());
    let witness: Vec<f64> = v.iter().copied().collect();
    let value = ratio(a, &witness, Exponent::TWO);
    Ok(LambdaEstimate {
        p: Exponent::TWO,
        value,
        witness,
        method: Method::ExactSvd,
        tolerance: (value - sigma).abs(),
        seed: 0,
    })
}

/// Exact `λ_p` for `p ∈ {1, ∞}` on a square matrix: `λ_p = 1/‖A⁻¹‖_{p→p}`,
/// with the norm of the inverse maximized over the extreme points of the unit
/// ball (signed unit vectors at `p = 1`, sign vectors at `p = ∞`). A singular
/// matrix gives `0` with a kernel witness.
pub fn lambda_vertex_search(a: &IndexedMatrix, p: Exponent) -> Result<LambdaEstimate> {
    let n = a.ncols();
    if a.nrows() != n || n == 0 {
        return Err(Error::Shape(format!("vertex search needs a non-empty square matrix, got {}x{}", a.nrows(), n)));
    }
    if p != Exponent::ONE && !p.is_infinite() {
        return Err(Error::Parameter(format!("vertex search is exact only at p = 1 or inf, got {p}")));
    }
    if p.is_infinite() && n > VERTEX_CAP {
        return Err(Error::Capacity { dim: n, cap: VERTEX_CAP });
    }
    let dense = a.to_dense();
    let witness: Vec<f64> = match dense.clone().try_inverse() {
        None => smallest_singular(&dense).1.iter().copied().collect(),
        Some(inv) => {
            let g = if p == Exponent::ONE {
                let j = (0..n)
                    .map(|j| (j, inv.column(j).iter().map(|v| v.abs()).sum::<f64>()))
                    .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b })
                    .0;
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                e
            } else {
                best_sign_vector(&inv)
            };
            (inv * g).iter().copied().collect()
        }
    };
    let value = ratio(a, &witness, p);
    Ok(LambdaEstimate { p, value, witness, method: Method::VertexSearch, tolerance: 0.0, seed: 0 })
}

// Maximizes ‖Bs‖_∞ over s ∈ {±1}^n with s₀ = 1, walking a Gray code so each
// step updates Bs by one column.
fn best_sign_vector(b: &DMatrix<f64>) -> DVector<f64> {
    let n = b.ncols();
    let mut s = DVector::from_element(n, 1.0);
    let mut y: DVector<f64> = b * &s;
    let mut best = (y.amax(), s.clone());
    let total: u64 = 1 << (n - 1);
    for k in 1..total {
        let bit = k.trailing_zeros() as usize + 1;
        s[bit] = -s[bit];
        y.axpy(2.0 * s[bit], &b.column(bit), 1.0);
        let v = y.amax();
        if v > best.0 {
            best = (v, s.clone());
        }
    }
    best.1
}

struct Start {
    f: Vec<f64>,
    method: Method,
    descend: bool,
}

/// Multi-start normalized subgradient descent on `f ↦ ‖Af‖_p/‖f‖_p`. The
/// result is an upper bound on `λ_p(A)` certified by its witness, and is a
/// deterministic function of `(A, p, budget, seed)`.
pub fn lambda_estimate(a: &IndexedMatrix, p: Exponent, budget: Budget, seed: u64) -> Result<LambdaEstimate> {
    let n = a.ncols();
    if n == 0 {
        return Err(Error::Shape("matrix has no columns".into()));
    }
    if a.nnz() == 0 {
        let mut witness = vec![0.0; n];
        witness[0] = 1.0;
        return Ok(LambdaEstimate { p, value: 0.0, witness, method: Method::Optimizer, tolerance: 0.0, seed });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::new();

    let mut sigma_min = None;
    if budget.svd_seed && a.nrows().max(n) <= EXACT_SEED_CAP {
        let (sigma, v) = smallest_singular(&a.to_dense());
        sigma_min = Some(sigma);
        let exact = p == Exponent::TWO;
        starts.push(Start {
            f: v.iter().copied().collect(),
            method: if exact { Method::ExactSvd } else { Method::Optimizer },
            descend: !exact,
        });
    }
    if budget.inverse_seeds && a.nrows() == n && n <= INVERSE_SEED_CAP {
        for f in inverse_seeds(a, p) {
            starts.push(Start { f, method: Method::Optimizer, descend: true });
        }
    }
    if n <= ALL_UNIT_STARTS {
        for j in 0..n {
            starts.push(Start { f: unit(n, j), method: Method::Optimizer, descend: true });
        }
    } else {
        for _ in 0..budget.starts {
            let j = rng.random_range(0..n);
            starts.push(Start { f: unit(n, j), method: Method::Optimizer, descend: true });
        }
    }
    starts.push(Start { f: vec![1.0; n], method: Method::Optimizer, descend: true });
    for _ in 0..budget.starts {
        let f: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        starts.push(Start { f, method: Method::Optimizer, descend: true });
    }
    for k in 0..budget.starts {
        let f = bump(a, &mut rng, k % 2 == 1);
        starts.push(Start { f, method: Method::Optimizer, descend: true });
    }

    let at = a.adjoint();
    let mut results = run_starts(a, &at, &starts, p, budget.iters);

    // Localized candidates built from the best witness so far.
    if p.value() >= 1.0 {
        let best = pick(&results);
        let seed_f = results[best].0.clone();
        let mut local = Vec::new();
        if let (Some(space), Some(r)) = (a.col_space(), a.stats().thickness) {
            let diameter = space.diameter();
            let mut l = r.max(1.0);
            while l <= diameter.max(1.0) {
                if let Ok(loc) = localize(a, &seed_f, l, p) {
                    local.push(Start { f: loc.h, method: Method::LocalizedSweep, descend: true });
                }
                l *= 2.0;
            }
        }
        if !local.is_empty() {
            results.extend(run_starts(a, &at, &local, p, budget.iters));
            starts.extend(local);
        }
    }

    let idx = pick(&results);
    let (witness, value, last_gain) = results.swap_remove(idx);
    let method = starts[idx].method;
    let tolerance = match (method, sigma_min) {
        (Method::ExactSvd, Some(sigma)) => (value - sigma).abs(),
        _ => last_gain,
    };
    Ok(LambdaEstimate { p, value, witness, method, tolerance, seed })
}

// (witness, value, last relative gain) for each start, in start order.
fn run_starts(
    a: &IndexedMatrix,
    at: &IndexedMatrix,
    starts: &[Start],
    p: Exponent,
    iters: usize,
) -> Vec<(Vec<f64>, f64, f64)> {
    starts
        .par_iter()
        .map(|s| {
            if s.descend {
                descend(a, at, &s.f, p, iters)
            } else {
                let v = ratio(a, &s.f, p);
                (s.f.clone(), v, 0.0)
            }
        })
        .collect()
}

// Index of the smallest value (first on ties), skipping NaN.
fn pick(results: &[(Vec<f64>, f64, f64)]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, r) in results.iter().enumerate() {
        if r.1 < best.1 {
            best = (i, r.1);
        }
    }
    best.0
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

// A tent of random radius around a random center; optionally modulated by
// Gaussian noise so oscillating minimizers are reachable.
fn bump(a: &IndexedMatrix, rng: &mut ChaCha8Rng, modulate: bool) -> Vec<f64> {
    let n = a.ncols();
    let c = rng.random_range(0..n);
    let max_radius = (n / 8).max(1);
    let radius = rng.random_range(1..=max_radius) as f64;
    (0..n)
        .map(|x| {
            let d = match a.col_space() {
                Some(s) => s.dist(c, x),
                None => (c as f64 - x as f64).abs(),
            };
            let tent = (1.0 - d / (radius + 1.0)).max(0.0);
            let noise: f64 = if modulate { rng.sample(StandardNormal) } else { 1.0 };
            tent * noise
        })
        .collect()
}

// Witnesses `A⁻¹g` for `g` near-maximizing `‖A⁻¹g‖_p/‖g‖_p`: the heaviest
// columns, the sign vector of the heaviest row, and a dual power iteration.
fn inverse_seeds(a: &IndexedMatrix, p: Exponent) -> Vec<Vec<f64>> {
    let n = a.ncols();
    let Some(inv) = a.to_dense().try_inverse() else {
        return Vec::new();
    };
    if !inv.iter().all(|v| v.is_finite()) {
        return Vec::new();
    }
    let mut seeds = Vec::new();
    let mut cols: Vec<(usize, f64)> = (0..n)
        .map(|j| (j, lp_norm(inv.column(j).as_slice(), p)))
        .collect();
    cols.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    for &(j, _) in cols.iter().take(3) {
        seeds.push(inv.column(j).iter().copied().collect());
    }
    let heavy_row = (0..n)
        .map(|i| (i, inv.row(i).iter().map(|v| v.abs()).sum::<f64>()))
        .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b })
        .0;
    let s = DVector::from_iterator(n, inv.row(heavy_row).iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }));
    seeds.push((&inv * s).iter().copied().collect());

    if p.value() > 1.0 && !p.is_infinite() {
        // Higham-style dual power method for ‖A⁻¹‖_{p→p}.
        let inv_t = inv.transpose();
        let q = Exponent(p.value() / (p.value() - 1.0));
        let mut x = DVector::from_element(n, 1.0);
        for _ in 0..30 {
            let y = &inv * &x;
            let z = &inv_t * DVector::from_vec(dual(y.as_slice(), p));
            let nx = DVector::from_vec(dual(z.as_slice(), q));
            if nx.iter().all(|v| *v == 0.0) {
                break;
            }
            x = nx;
        }
        seeds.push((&inv * x).iter().copied().collect());
    }
    seeds
}

// Gradient of the norm `‖·‖_p` at `g` (a subgradient at kinks).
fn dual(g: &[f64], p: Exponent) -> Vec<f64> {
    let norm = lp_norm(g, p);
    if norm == 0.0 {
        return vec![0.0; g.len()];
    }
    if p.is_infinite() {
        let cut = norm * (1.0 - 1e-12);
        let count = g.iter().filter(|v| v.abs() >= cut).count() as f64;
        return g.iter().map(|&v| if v.abs() >= cut { v.signum() / count } else { 0.0 }).collect();
    }
    let pv = p.value();
    if pv == 1.0 {
        return g.iter().map(|&v| if v == 0.0 { 0.0 } else { v.signum() }).collect();
    }
    g.iter()
        .map(|&v| if v == 0.0 { 0.0 } else { v.signum() * (v.abs() / norm).powf(pv - 1.0) })
        .collect()
}

// Normalized subgradient descent with backtracking; returns the final
// iterate, its ratio and the last accepted relative gain.
fn descend(a: &IndexedMatrix, at: &IndexedMatrix, f0: &[f64], p: Exponent, iters: usize) -> (Vec<f64>, f64, f64) {
    let mut f = normalized(f0);
    let mut value = ratio(a, &f, p);
    if !value.is_finite() {
        return (f, value, 0.0);
    }
    let mut step = 0.25;
    let mut last_gain = 0.0;
    // Polak-Ribière directions, reset to steepest descent when not descending.
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..iters {
        if value == 0.0 {
            break;
        }
        let g = a.apply_unchecked(&f);
        let nf = lp_norm(&f, p);
        let upstream = at.apply_unchecked(&dual(&g, p));
        let df = dual(&f, p);
        let grad: Vec<f64> = upstream.iter().zip(&df).map(|(u, d)| (u - value * d) / nf).collect();
        let gg = dot(&grad, &grad);
        if gg == 0.0 || !gg.is_finite() {
            break;
        }
        let mut dir: Vec<f64> = grad.iter().map(|v| -v).collect();
        if let Some((pg, pd)) = &prev {
            let beta = (dot(&grad, &grad) - dot(&grad, pg)) / dot(pg, pg);
            if beta > 0.0 && beta.is_finite() {
                let cand: Vec<f64> = dir.iter().zip(pd).map(|(d, q)| d + beta * q).collect();
                if dot(&cand, &grad) < 0.0 {
                    dir = cand;
                }
            }
        }
        let dn = dot(&dir, &dir).sqrt();
        let along = |t: f64| -> Vec<f64> { f.iter().zip(&dir).map(|(x, d)| x + t * d / dn).collect() };
        let mut t = step;
        let mut found: Option<(f64, f64)> = None;
        for _ in 0..30 {
            let cv = ratio(a, &along(t), p);
            if cv.is_finite() && cv < value * (1.0 - ACCEPT) {
                found = Some((t, cv));
                break;
            }
            t *= 0.5;
        }
        let Some((mut t, mut cv)) = found else { break };
        for _ in 0..10 {
            let bigger = ratio(a, &along(2.0 * t), p);
            if !(bigger.is_finite() && bigger < cv) {
                break;
            }
            t *= 2.0;
            cv = bigger;
        }
        last_gain = (value - cv) / value;
        let cand = along(t);
        let scale = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
        f = normalized(&cand);
        value = ratio(a, &f, p);
        let factor = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        prev = Some((grad, dir.iter().map(|d| d * factor).collect()));
        step = (2.0 * t).min(1.0);
    }
    (f, value, last_gain)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn normalized(f: &[f64]) -> Vec<f64> {
    let n = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return f.to_vec();
    }
    f.iter().map(|v| v / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opmat::IndexSet;
    use crate::zoo;

    fn calibration_budget() -> Budget {
        Budget { svd_seed: false, ..Budget::default() }
    }

    #[test]
    fn identity_is_one_for_every_p() {
        let a = zoo::identity(30).unwrap();
        for p in Exponent::default_grid() {
            let e = lambda_estimate(&a, p, Budget::default(), 3).unwrap();
            assert!((e.value - 1.0).abs() < 1e-12, "{p}: {}", e.value);
        }
    }

    #[test]
    fn exact_path_spectrum() {
        let a = zoo::random_walk_operator(100).unwrap();
        let e = lambda_exact_2(&a).unwrap();
        let oracle = 1.0 - (std::f64::consts::PI / 101.0).cos();
        assert!((e.value - oracle).abs() < 1e-12);
        assert!((oracle - 4.838e-4).abs() < 1e-6);
        assert_eq!(e.method, Method::ExactSvd);
    }

    #[test]
    fn staircase_values() {
        let a = zoo::staircase_matrix(1.0, 16).unwrap();
        let one = lambda_estimate(&a, Exponent::ONE, Budget::default(), 0).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12);
        let inf = lambda_estimate(&a, Exponent::INFINITY, Budget::default(), 0).unwrap();
        assert!(inf.value <= 1.0 / 16.0 + 1e-15);
    }

    #[test]
    fn optimizer_matches_svd_on_small_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..20 {
            let t: Vec<(usize, usize, f64)> = (0..10)
                .flat_map(|i| (0..10).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let a = IndexedMatrix::from_triplets(IndexSet::Plain(10), IndexSet::Plain(10), t).unwrap();
            let exact = lambda_exact_2(&a).unwrap().value;
            let est = lambda_estimate(&a, Exponent::TWO, calibration_budget(), k).unwrap();
            assert!((est.value - exact).abs() < 1e-6, "instance {k}: {} vs {exact}", est.value);
            assert!(est.value >= exact - 1e-12);
        }
    }

    #[test]
    fn vertex_search_matches_inverse_norms() {
        let a = zoo::random_banded(10, 2, Some(0.3), 5).unwrap();
        let inv = a.to_dense().try_inverse().unwrap();
        let col_max = (0..10).map(|j| inv.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let row_max = (0..10).map(|i| inv.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let l1 = lambda_vertex_search(&a, Exponent::ONE).unwrap();
        let linf = lambda_vertex_search(&a, Exponent::INFINITY).unwrap();
        assert!((l1.value - 1.0 / col_max).abs() < 1e-12);
        assert!((linf.value - 1.0 / row_max).abs() < 1e-12);
        for p in [Exponent::ONE, Exponent::INFINITY] {
            let est = lambda_estimate(&a, p, Budget::default(), 1).unwrap();
            let exact = lambda_vertex_search(&a, p).unwrap().value;
            assert!((est.value - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_and_consistent() {
        let a = zoo::random_banded(80, 2, None, 2).unwrap();
        let p = Exponent::new(3.0).unwrap();
        let x = lambda_estimate(&a, p, Budget::default(), 9).unwrap();
        let y = lambda_estimate(&a, p, Budget::default(), 9).unwrap();
        assert_eq!(x, y);
        assert!((super::super::ratio(&a, &x.witness, p) - x.value).abs() <= 1e-12 * x.value.max(1e-300));
    }

    #[test]
    fn zero_matrix() {
        let a = IndexedMatrix::from_triplets(IndexSet::Plain(3), IndexSet::Plain(4), vec![]).unwrap();
        let e = lambda_estimate(&a, Exponent::TWO, Budget::default(), 0).unwrap();
        assert_eq!(e.value, 0.0);
    }
}
