use serde::{Deserialize, Serialize};

use super::ratio;
use crate::error::{Error, Result};
use crate::exponent::{lp_norm, Exponent};
use crate::opmat::IndexedMatrix;
use crate::space::{covering, cutoff, cutoff_value, select_color_class, DEFAULT_ALPHA};

/// Separation factor between retained centers, in units of `L`.
const PERIOD_FACTOR: f64 = 6.0;
/// Relative slack allowed when comparing a measured ratio with its bound.
const CERT_SLACK: f64 = 1e-12;

/// How the center set `P` was chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalizeStrategy {
    /// `P = {offset + k·period : k ∈ ℤ}` on an integer window, with the
    /// offset maximizing `‖Δ_P f‖_p` over all shifts.
    PeriodicShift { offset: usize, period: usize },
    /// A color class of the `(L, α)` covering.
    ColorClass { color: usize, num_colors: usize },
}

/// `ratio_h ≤ c1·(ratio_f + error_term)`, checked against the measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizeCertificate {
    pub c1: f64,
    pub error_term: f64,
    pub bound: f64,
    pub holds: bool,
}

impl LocalizeCertificate {
    fn new(c1: f64, ratio_f: f64, error_term: f64, ratio_h: f64) -> Self {
        let bound = c1 * (ratio_f + error_term);
        LocalizeCertificate { c1, error_term, bound, holds: ratio_h <= bound * (1.0 + CERT_SLACK) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Localized {
    /// The retained piece of `g = Δ_P f`.
    pub h: Vec<f64>,
    /// `h` is supported in `B(center, support_radius)`.
    pub center: usize,
    pub support_radius: f64,
    pub ratio_h: f64,
    pub ratio_f: f64,
    pub ratio_g: f64,
    /// `‖g‖_p / ‖f‖_p`.
    pub captured: f64,
    pub num_pieces: usize,
    pub thickness: f64,
    pub strategy: LocalizeStrategy,
    /// Relative gap between `‖Ag‖_p^p` and `Σ‖Ag_i‖_p^p` (max at `p = ∞`).
    pub decomposition_gap: f64,
    /// `c1 = 2·(number of classes)`, error `r·‖|A|‖_p/(2L)` with the Schur
    /// bound for `‖|A|‖_p`.
    pub general: LocalizeCertificate,
    /// On integer windows: `3·(ratio_f + 3r²‖A‖_sup/L)`.
    pub integer_line: Option<LocalizeCertificate>,
}

impl Localized {
    pub fn holds(&self) -> bool {
        self.general.holds && self.integer_line.as_ref().is_none_or(|c| c.holds)
    }
}

/// Localizes `f` onto a ball of radius `2L`: multiplies by the cutoff of a
/// well separated center set, splits the product into pieces around each
/// center, and keeps the piece with the smallest ratio.
pub fn localize(a: &IndexedMatrix, f: &[f64], l: f64, p: Exponent) -> Result<Localized> {
    let space = a
        .col_space()
        .ok_or_else(|| Error::Structure("localization needs a metric column set".into()))?;
    let r = a
        .stats()
        .thickness
        .ok_or_else(|| Error::Structure("localization needs a thin matrix".into()))?;
    if f.len() != a.ncols() {
        return Err(Error::Shape(format!("function has {} values, matrix has {} columns", f.len(), a.ncols())));
    }
    if p.value() < 1.0 {
        return Err(Error::Parameter(format!("localization needs p >= 1, got {p}")));
    }
    if !(l > 0.0) || !l.is_finite() || l < r {
        return Err(Error::Parameter(format!("localization length {l} must be positive and at least the thickness {r}")));
    }
    let f_norm = lp_norm(f, p);
    if f_norm == 0.0 {
        return Err(Error::Degenerate("function is identically zero".into()));
    }
    let ratio_f = ratio(a, f, p);

    // (cutoff values, owning piece per point, piece centers, strategy, classes)
    let (delta, owner, centers, strategy, classes) = if space.is_z_interval() {
        periodic_plan(f, l, p)
    } else {
        let cov = covering(space, l, DEFAULT_ALPHA)?;
        let choice = select_color_class(f, &cov, space, p)?;
        let profile = cutoff(&choice.centers, l, space)?;
        let mut owner = vec![usize::MAX; f.len()];
        for x in 0..f.len() {
            if profile.values[x] > 0.0 {
                let (k, _) = choice
                    .centers
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| (k, space.dist(x, c)))
                    .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
                owner[x] = k;
            }
        }
        let strategy = LocalizeStrategy::ColorClass { color: choice.color, num_colors: cov.num_colors };
        let centers = choice.centers.iter().map(|&c| c as i64).collect();
        (profile.values, owner, centers, strategy, cov.num_colors)
    };

    let g: Vec<f64> = f.iter().zip(&delta).map(|(v, d)| v * d).collect();
    let g_norm = lp_norm(&g, p);
    if g_norm == 0.0 {
        return Err(Error::Degenerate("function vanishes on the retained thickened class".into()));
    }
    let ag = a.apply_unchecked(&g);
    let ratio_g = lp_norm(&ag, p) / g_norm;

    let columns = a.columns();
    let mut members = vec![Vec::new(); centers.len()];
    for (x, &k) in owner.iter().enumerate() {
        if k != usize::MAX && g[x] != 0.0 {
            members[k].push(x);
        }
    }
    let mut scratch = vec![0.0; a.nrows()];
    let mut marked = vec![false; a.nrows()];
    let mut best: Option<(usize, f64)> = None;
    let mut piece_image_norms = Vec::new();
    let mut num_pieces = 0;
    for (k, pts) in members.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        num_pieces += 1;
        let mut touched = Vec::new();
        for &x in pts {
            for &(row, v) in &columns[x] {
                if !marked[row] {
                    marked[row] = true;
                    touched.push(row);
                }
                scratch[row] += v * g[x];
            }
        }
        let image: Vec<f64> = touched.iter().map(|&row| scratch[row]).collect();
        for &row in &touched {
            scratch[row] = 0.0;
            marked[row] = false;
        }
        let piece: Vec<f64> = pts.iter().map(|&x| g[x]).collect();
        let image_norm = lp_norm(&image, p);
        piece_image_norms.push(image_norm);
        let value = image_norm / lp_norm(&piece, p);
        if best.is_none_or(|(_, b)| value < b) {
            best = Some((k, value));
        }
    }
    let (k, ratio_h) = best.expect("g is non-zero so some piece is non-empty");
    let mut h = vec![0.0; f.len()];
    for &x in &members[k] {
        h[x] = g[x];
    }

    let decomposition_gap = {
        let whole = lp_norm(&ag, p);
        let parts = if p.is_infinite() {
            piece_image_norms.iter().copied().fold(0.0, f64::max)
        } else {
            let pv = p.value();
            // compare p-th powers relative to the whole, scaled to avoid overflow
            let scale = whole.max(f64::MIN_POSITIVE);
            piece_image_norms.iter().map(|n| (n / scale).powf(pv)).sum::<f64>().powf(1.0 / pv) * scale
        };
        if whole == 0.0 { parts } else { (whole - parts).abs() / whole }
    };

    let abs_bound = schur_abs_bound(a, p);
    let general = LocalizeCertificate::new(2.0 * classes as f64, ratio_f, r * abs_bound / (2.0 * l), ratio_h);
    let integer_line = space
        .is_z_interval()
        .then(|| LocalizeCertificate::new(3.0, ratio_f, 3.0 * r * r * a.max_abs() / l, ratio_h));
    let center = centers[k].clamp(0, f.len() as i64 - 1) as usize;
    Ok(Localized {
        h,
        center,
        support_radius: 2.0 * l,
        ratio_h,
        ratio_f,
        ratio_g,
        captured: g_norm / f_norm,
        num_pieces,
        thickness: r,
        strategy,
        decomposition_gap,
        general,
        integer_line,
    })
}

// `‖|A|‖₁^{1/p}·‖|A|‖_∞^{1−1/p}`, an upper bound for `‖|A|‖_{p→p}`.
fn schur_abs_bound(a: &IndexedMatrix, p: Exponent) -> f64 {
    let n1 = crate::opmat::norms::column_abs_sums(a).into_iter().fold(0.0, f64::max);
    let ninf = crate::opmat::norms::row_abs_sums(a).into_iter().fold(0.0, f64::max);
    let s = p.recip();
    if s == 0.0 {
        ninf
    } else if s == 1.0 {
        n1
    } else {
        n1.powf(s) * ninf.powf(1.0 - s)
    }
}

type Plan = (Vec<f64>, Vec<usize>, Vec<i64>, LocalizeStrategy, usize);

// Periodic centers `offset + k·T` on ℤ, `T = ⌈6L⌉`, including centers outside
// the window. Averaged over all `T` offsets, `Δ` has mean `1/3` at every
// point when `2L` is an integer, so the best offset captures at least a third
// of `‖f‖_p`.
fn periodic_plan(f: &[f64], l: f64, p: Exponent) -> Plan {
    let n = f.len();
    let period = (PERIOD_FACTOR * l).ceil() as usize;
    let kernel: Vec<f64> = (0..period)
        .map(|j| {
            let d = j.min(period - j) as f64;
            let t = cutoff_value(d, l);
            if p.is_infinite() { t } else { t.powf(p.value()) }
        })
        .collect();
    let offset = if p.is_infinite() {
        let argmax = f
            .iter()
            .enumerate()
            .fold((0, -1.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b })
            .0;
        argmax % period
    } else {
        let pv = p.value();
        let mut folded = vec![0.0; period];
        let max = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, v) in f.iter().enumerate() {
            folded[x % period] += (v.abs() / max).powf(pv);
        }
        let support: Vec<usize> = (0..period).filter(|&j| kernel[j] > 0.0).collect();
        let mut best = (0, -1.0);
        for x0 in 0..period {
            let mut s = 0.0;
            for &j in &support {
                s += kernel[j] * folded[(x0 + j) % period];
            }
            if s > best.1 {
                best = (x0, s);
            }
        }
        best.0
    };

    let mut delta = vec![0.0; n];
    let mut owner = vec![usize::MAX; n];
    let mut centers: Vec<i64> = Vec::new();
    let t = period as i64;
    let first = offset as i64 - t * ((offset as i64 + t) / t);
    let mut c = first;
    while c - 2 * t <= n as i64 {
        let k = centers.len();
        centers.push(c);
        let lo = (c - t / 2).max(0);
        let hi = (c + t / 2).min(n as i64 - 1);
        for x in lo..=hi {
            let d = (x - c).unsigned_abs() as f64;
            let v = cutoff_value(d, l);
            if v > 0.0 {
                delta[x as usize] = v;
                owner[x as usize] = k;
            }
        }
        c += t;
    }
    (delta, owner, centers, LocalizeStrategy::PeriodicShift { offset, period }, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::opmat::IndexedMatrix;
    use crate::space::MetricSpace;

    fn zspace(n: usize) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::z_interval(n).unwrap())
    }

    #[test]
    fn identity_keeps_ratio_one() {
        let a = IndexedMatrix::identity(zspace(200));
        let f: Vec<f64> = (0..200).map(|x| ((x * 37 % 11) as f64) - 5.0).collect();
        for l in [1.0, 4.0, 16.0] {
            for p in [Exponent::ONE, Exponent::TWO, Exponent::INFINITY] {
                let loc = localize(&a, &f, l, p).unwrap();
                assert!((loc.ratio_h - 1.0).abs() < 1e-12);
                assert!(loc.holds());
                assert!(loc.h.iter().enumerate().all(|(x, v)| *v == 0.0
                    || (x as f64 - loc.center as f64).abs() <= loc.support_radius));
            }
        }
    }

    #[test]
    fn captures_a_third() {
        let a = IndexedMatrix::identity(zspace(1000));
        let f: Vec<f64> = (0..1000).map(|x| 1.0 + (x % 7) as f64).collect();
        for l in [4.0, 8.0, 32.0, 128.0] {
            let loc = localize(&a, &f, l, Exponent::ONE).unwrap();
            assert!(loc.captured >= 1.0 / 3.0 - 1e-12, "L={l}: {}", loc.captured);
        }
    }

    #[test]
    fn rejects_short_length() {
        let s = zspace(10);
        let a = IndexedMatrix::square(s, vec![(0, 0, 1.0), (0, 3, 1.0), (5, 5, 1.0)]).unwrap();
        let f = vec![1.0; 10];
        assert!(matches!(localize(&a, &f, 1.0, Exponent::TWO), Err(Error::Parameter(_))));
        assert!(matches!(localize(&a, &vec![0.0; 10], 2.0, Exponent::TWO), Err(Error::Degenerate(_))));
    }
}
