use serde::{Deserialize, Serialize};

use super::{localize, ratio, Localized};
use crate::dense::{check_capacity, sigma_max};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::opmat::norms::{column_abs_sums, row_abs_sums};
use crate::opmat::IndexedMatrix;

/// Relative slack allowed when comparing a measured norm with its bound.
const SLACK: f64 = 1e-12;

/// Decay law `‖|A − A_{r,v}|‖ ≤ decay_constant·(r^{−t} + v^{−s})` claimed for
/// the approximant family, plus the structure parameters to request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostTsParams {
    pub t: f64,
    pub s: f64,
    pub decay_constant: f64,
    /// Thickness of the requested approximant.
    pub r: f64,
    /// Sparseness of the requested approximant (`∞` for no constraint).
    pub v: f64,
}

/// The parameter choice `u = min{1/2, t/2, s·d}`, `L = λ^{−1/u}`,
/// `r = L^{1/2}`, `v = L^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostTsPreset {
    pub u: f64,
    pub length: f64,
    pub r: f64,
    pub v: f64,
}

impl AlmostTsPreset {
    pub fn new(lambda_p: f64, t: f64, s: f64, d: f64) -> Result<Self> {
        if !(lambda_p > 0.0 && lambda_p < 1.0) {
            return Err(Error::Parameter(format!("the preset needs 0 < lambda < 1, got {lambda_p}")));
        }
        if !(t > 0.0 && s > 0.0 && d > 0.0) {
            return Err(Error::Parameter(format!("decay exponents and dimension must be positive: t={t}, s={s}, d={d}")));
        }
        let u = 0.5f64.min(t / 2.0).min(s * d);
        let length = lambda_p.powf(-1.0 / u);
        Ok(AlmostTsPreset { u, length, r: length.sqrt(), v: length.powf(d) })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostTsCertificate {
    pub localized: Localized,
    /// `‖|A − A_{r,v}|‖_{p→p}` (exact at `p ∈ {1, 2, ∞}`, Schur bound otherwise).
    pub approximation_error: f64,
    /// `decay_constant·(r^{−t} + v^{−s})`.
    pub allowed_error: f64,
    /// `‖Ah‖_p/‖h‖_p` for the original matrix.
    pub ratio_h: f64,
    pub ratio_f: f64,
    /// `c1·(ratio_f + E + error_term) + E` with `E` the approximation error.
    pub bound: f64,
    /// A constant `C` with `bound ≤ C·(ratio_f + r/L + r^{−t} + v^{−s})`.
    pub constant: f64,
    pub holds: bool,
}

/// Localizes `f` for an operator approximated by thin-sparse matrices: the
/// approximant at the requested `(r, v)` is localized and the result is
/// certified for `A` itself.
pub fn almost_ts_localize(
    a: &IndexedMatrix,
    approximant: &dyn Fn(f64, f64) -> Result<IndexedMatrix>,
    f: &[f64],
    l: f64,
    p: Exponent,
    params: AlmostTsParams,
) -> Result<AlmostTsCertificate> {
    if !(l >= 1.0) {
        return Err(Error::Parameter(format!("localization length must be at least 1, got {l}")));
    }
    let AlmostTsParams { t, s, decay_constant, r, v } = params;
    let approx = approximant(r, v)?;
    let stats = approx.stats();
    let thickness = stats.thickness.ok_or_else(|| Error::Structure("approximant is not thin".into()))?;
    if thickness > r || stats.sparseness as f64 > v {
        return Err(Error::Structure(format!(
            "approximant has thickness {thickness} and sparseness {}, requested r={r}, v={v}",
            stats.sparseness
        )));
    }
    let diff = a.sub(&approx)?.abs();
    let approximation_error = abs_norm(&diff, p);
    let allowed_error = decay_constant * (r.powf(-t) + if v.is_infinite() { 0.0 } else { v.powf(-s) });
    if approximation_error > allowed_error * (1.0 + SLACK) {
        return Err(Error::DecayViolation { measured: approximation_error, allowed: allowed_error });
    }

    let localized = localize(&approx, f, l, p)?;
    let ratio_h = ratio(a, &localized.h, p);
    let ratio_f = ratio(a, f, p);
    let c1 = localized.general.c1;
    let error_term = localized.general.error_term;
    let e = approximation_error;
    let bound = c1 * (ratio_f + e + error_term) + e;
    let decay = r.powf(-t) + if v.is_infinite() { 0.0 } else { v.powf(-s) };
    let r_over_l = r.max(f64::MIN_POSITIVE) / l;
    let constant = c1.max(c1 * error_term / r_over_l).max((c1 + 1.0) * e / decay);
    Ok(AlmostTsCertificate {
        localized,
        approximation_error,
        allowed_error,
        ratio_h,
        ratio_f,
        bound,
        constant,
        holds: ratio_h <= bound * (1.0 + SLACK),
    })
}

// ‖B‖_{p→p} for an entrywise non-negative B: exact at 1 and ∞, dense SVD at
// 2 when it fits, Schur interpolation bound otherwise.
fn abs_norm(b: &IndexedMatrix, p: Exponent) -> f64 {
    let n1 = column_abs_sums(b).into_iter().fold(0.0, f64::max);
    let ninf = row_abs_sums(b).into_iter().fold(0.0, f64::max);
    let s = p.recip();
    if s == 1.0 {
        return n1;
    }
    if s == 0.0 {
        return ninf;
    }
    if s == 0.5 && b.nnz() > 0 && check_capacity(b.nrows(), b.ncols()).is_ok() {
        return sigma_max(&b.to_dense());
    }
    n1.powf(s) * ninf.powf(1.0 - s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_exponent() {
        let pre = AlmostTsPreset::new(0.1, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(pre.u, 0.5);
        assert!((pre.length - 100.0).abs() < 1e-9);
        assert!((pre.r - 10.0).abs() < 1e-9);
        let pre = AlmostTsPreset::new(0.5, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(pre.u, 0.25);
    }
}
