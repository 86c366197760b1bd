//! Left inverses `B = (A*A)⁻¹A*`, band truncation with decay fitting, and the
//! window-sweep pipeline that checks whether a left inverse stays in the
//! Schur-type algebras as the window grows.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{check_capacity, sigma_max, singular_values, smallest_singular, spd_solve};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::opmat::{cd_norm, check_gram_banded, op_norm, schur_norm, weighted_schur_norm, GramBandCheck, IndexedMatrix, Weight};
use crate::stability::{lambda_estimate, lambda_exact_2, stability_report, Budget, StabilityReport, Verdict};

/// Default relative threshold `σ_min > tol·σ_max` for "bounded below".
pub const DEFAULT_TOL: f64 = 1e-9;
/// Fitted decay exponents below this are treated as sub-polynomial.
pub const SUB_POLYNOMIAL_T: f64 = 0.2;
/// A log-log slope of `λ̂₂` against the window size below this is read as
/// `λ₂ → 0`.
pub const DEGENERATE_TREND: f64 = -0.5;
/// Symmetry tolerance, relative to the largest entry.
const SYMMETRY_TOL: f64 = 1e-12;

/// Drops the entries with `d(y, x) > r`.
pub fn band_truncate(a: &IndexedMatrix, r: f64) -> Result<IndexedMatrix> {
    if !a.is_square_metric() {
        return Err(Error::Structure("band truncation needs Y = X".into()));
    }
    let space = a.col_space().expect("metric");
    Ok(a.filter(|y, x, _| space.dist(y, x) <= r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub radii: Vec<f64>,
    /// `‖A − A_r‖_𝒜` per radius.
    pub errors: Vec<f64>,
    /// Negated least-squares slope of `log error` against `log r`; `+∞` when
    /// every error vanishes.
    pub fitted_t: f64,
    /// Root-mean-square residual of the log-log fit.
    pub fit_residual: f64,
    /// Root-mean-square residual of `log error` against `r`.
    pub semilog_residual: f64,
    /// Every truncation error is zero.
    pub banded: bool,
    /// The semilog fit beats the log-log fit.
    pub super_polynomial: bool,
    /// The fitted exponent is below [`SUB_POLYNOMIAL_T`].
    pub sub_polynomial: bool,
}

/// Schur-norm truncation errors over increasing radii and the fitted decay
/// exponent.
pub fn decay_profile(a: &IndexedMatrix, radii: &[f64]) -> Result<DecayProfile> {
    if radii.len() < 3 {
        return Err(Error::Parameter(format!("decay fitting needs at least 3 radii, got {}", radii.len())));
    }
    if radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] <= 0.0 {
        return Err(Error::Parameter("radii must be positive and strictly increasing".into()));
    }
    if !a.is_square_metric() {
        return Err(Error::Structure("decay fitting needs Y = X".into()));
    }
    let space = a.col_space().expect("metric");
    let dist: Vec<f64> = a.entries().map(|(y, x, _)| space.dist(y, x)).collect();
    let errors: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let mut col = vec![0.0; a.ncols()];
            let mut row = vec![0.0; a.nrows()];
            for ((y, x, v), &d) in a.entries().zip(&dist) {
                if d > r {
                    col[x] += v.abs();
                    row[y] += v.abs();
                }
            }
            col.into_iter().fold(0.0, f64::max) + row.into_iter().fold(0.0, f64::max)
        })
        .collect();

    let pts: Vec<(f64, f64)> = radii.iter().zip(&errors).filter(|(_, &e)| e > 0.0).map(|(&r, &e)| (r, e.ln())).collect();
    let banded = pts.is_empty();
    let (fitted_t, fit_residual, semilog_residual) = if banded {
        (f64::INFINITY, 0.0, 0.0)
    } else if pts.len() < 2 {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let loglog: Vec<(f64, f64)> = pts.iter().map(|&(r, le)| (r.ln(), le)).collect();
        let (slope, res) = least_squares(&loglog);
        let (_, semi) = least_squares(&pts);
        (-slope, res, semi)
    };
    let super_polynomial = !banded && pts.len() >= 3 && semilog_residual < fit_residual;
    let sub_polynomial = fitted_t.is_finite() && fitted_t < SUB_POLYNOMIAL_T;
    Ok(DecayProfile {
        radii: radii.to_vec(),
        errors,
        fitted_t,
        fit_residual,
        semilog_residual,
        banded,
        super_polynomial,
        sub_polynomial,
    })
}

// Slope and RMS residual of the least-squares line through the points.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

/// Radii `8, 16, 32, …` up to `n/8`; `1, 2, 4` on small windows. Small radii
/// are skipped because the `(1 + d)` offset bends the log-log curve there.
pub fn default_radii(n: usize) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = 8.0;
    while r <= n as f64 / 8.0 {
        radii.push(r);
        r *= 2.0;
    }
    if radii.len() < 3 {
        radii = vec![1.0, 2.0, 4.0];
    }
    radii
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeftInverseDiagnostics {
    /// `max |(BA − I)_{x,x'}|`.
    pub residual_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub gram_band: Option<GramBandCheck>,
    /// `max |b_{x,y}|` over `d(x, y) = k`, for `k = 0, 1, …`.
    pub off_band_decay: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct LeftInverse {
    pub b: IndexedMatrix,
    pub diagnostics: LeftInverseDiagnostics,
}

/// `B = (A*A)⁻¹A*` by a dense Cholesky solve. Fails when
/// `σ_min(A) ≤ tol·σ_max(A)`.
pub fn build_left_inverse(a: &IndexedMatrix, tol: f64) -> Result<LeftInverse> {
    check_capacity(a.nrows(), a.ncols())?;
    if a.ncols() == 0 {
        return Err(Error::Shape("matrix has no columns".into()));
    }
    let dense = a.to_dense();
    let (sigma_min, _) = smallest_singular(&dense);
    let sigma_max = sigma_max(&dense);
    if !(sigma_min > tol * sigma_max) {
        return Err(Error::NotBoundedBelow { sigma_min, sigma_max });
    }
    let at = dense.transpose();
    let gram = &at * &dense;
    let z = spd_solve(&gram, &at).ok_or(Error::NotBoundedBelow { sigma_min, sigma_max })?;
    let residual = &z * &dense;
    let mut residual_max = 0.0f64;
    for i in 0..residual.nrows() {
        for j in 0..residual.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            residual_max = residual_max.max((residual[(i, j)] - target).abs());
        }
    }
    let b = IndexedMatrix::from_dense(a.cols().clone(), a.rows().clone(), &z, 0.0)?;
    let gram_band = if a.stats().thickness.is_some() { check_gram_banded(a).ok() } else { None };
    let off_band_decay = b.is_square_metric().then(|| {
        let space = b.col_space().expect("metric");
        let mut env: Vec<f64> = Vec::new();
        for (x, y, v) in b.entries() {
            let k = space.dist(x, y).round() as usize;
            if env.len() <= k {
                env.resize(k + 1, 0.0);
            }
            env[k] = env[k].max(v.abs());
        }
        env
    });
    Ok(LeftInverse {
        b,
        diagnostics: LeftInverseDiagnostics { residual_max, sigma_min, sigma_max, gram_band, off_band_decay },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfAdjointCheck {
    pub p: Exponent,
    /// `‖A⁻¹‖_{p→p}`: exact at `p ∈ {1, 2, ∞}`, an upper bound otherwise.
    pub inverse_norm: f64,
    /// Witness lower bound on `‖A⁻¹‖_{p→p}`.
    pub inverse_norm_lower: f64,
    pub lambda_hat: f64,
    /// `1/λ̂_p`.
    pub reciprocal: f64,
    /// `|‖A⁻¹‖·λ̂ − 1|`.
    pub gap: f64,
}

/// Compares `‖A⁻¹‖_p` with `1/λ_p(A)` for a self-adjoint invertible `A`.
pub fn selfadjoint_inverse_norm_check(a: &IndexedMatrix, p: Exponent) -> Result<SelfAdjointCheck> {
    if a.nrows() != a.ncols() {
        return Err(Error::Structure("self-adjoint check needs a square matrix".into()));
    }
    check_capacity(a.nrows(), a.ncols())?;
    let dense = a.to_dense();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    if (&dense - dense.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::Structure("matrix is not self-adjoint".into()));
    }
    let sv = singular_values(&dense);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if !(smin > DEFAULT_TOL * smax) {
        return Err(Error::NotBoundedBelow { sigma_min: smin, sigma_max: smax });
    }
    let inv = dense.try_inverse().ok_or(Error::NotBoundedBelow { sigma_min: smin, sigma_max: smax })?;
    let (inverse_norm, inverse_norm_lower, lambda_hat) = if p == Exponent::TWO {
        let n = sigma_max(&inv);
        (n, n, lambda_exact_2(a)?.value)
    } else {
        let inv_m = IndexedMatrix::from_dense(a.cols().clone(), a.rows().clone(), &inv, 0.0)?;
        let est = op_norm(&inv_m, p)?;
        (est.value, est.lower, lambda_estimate(a, p, Budget::default(), 0)?.value)
    };
    let reciprocal = 1.0 / lambda_hat;
    Ok(SelfAdjointCheck {
        p,
        inverse_norm,
        inverse_norm_lower,
        lambda_hat,
        reciprocal,
        gap: (inverse_norm * lambda_hat - 1.0).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramCheck {
    pub lambda_2_gram: f64,
    pub lambda_2_squared: f64,
    /// Relative gap.
    pub gap: f64,
}

/// `λ₂(A*A)` against `λ₂(A)²`, both from dense decompositions.
pub fn gram_lambda_identity_check(a: &IndexedMatrix) -> Result<GramCheck> {
    check_capacity(a.nrows(), a.ncols())?;
    let dense = a.to_dense();
    let gram = dense.transpose() * &dense;
    let (lambda_2_gram, _) = smallest_singular(&gram);
    let (s, _) = smallest_singular(&dense);
    let lambda_2_squared = s * s;
    let floor = f64::EPSILON * sigma_max(&gram);
    let gap = (lambda_2_gram - lambda_2_squared).abs() / lambda_2_squared.max(floor).max(f64::MIN_POSITIVE);
    Ok(GramCheck { lambda_2_gram, lambda_2_squared, gap })
}

/// The trichotomy reported by [`stability_pipeline`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineVerdict {
    UniformlyBoundedBelow,
    Degenerate,
    /// The truncation errors decay slower than any power.
    OutsideTheoremScope,
}

impl PipelineVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            PipelineVerdict::UniformlyBoundedBelow => "uniformly_bounded_below",
            PipelineVerdict::Degenerate => "degenerate",
            PipelineVerdict::OutsideTheoremScope => "outside_theorem_scope",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseNorms {
    pub residual_max: f64,
    pub norm_1: f64,
    pub norm_2: f64,
    pub norm_inf: f64,
    pub schur: f64,
    pub weighted_schur: f64,
    pub cd: Option<f64>,
}

impl InverseNorms {
    fn as_vec(&self) -> [f64; 5] {
        [self.norm_1, self.norm_2, self.norm_inf, self.schur, self.weighted_schur]
    }

    pub fn norm_p(&self, p: Exponent) -> Option<f64> {
        if p == Exponent::ONE {
            Some(self.norm_1)
        } else if p == Exponent::TWO {
            Some(self.norm_2)
        } else if p.is_infinite() {
            Some(self.norm_inf)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub window: usize,
    pub stability: StabilityReport,
    pub sigma_min: f64,
    pub inverse: Option<InverseNorms>,
    /// Why no inverse was built, if none was.
    pub inverse_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub weight: Weight,
    pub windows: Vec<WindowReport>,
    /// Decay profile of the largest window.
    pub decay: DecayProfile,
    /// Log-log slope of `λ̂₂` against the window size.
    pub lambda_2_trend: Option<f64>,
    /// Ratios of each inverse norm (`‖·‖₁, ‖·‖₂, ‖·‖_∞`, Schur, weighted
    /// Schur) between consecutive windows.
    pub norm_ratios: Vec<[f64; 5]>,
    /// Every ratio lies in `[1/2, 2]`.
    pub norms_stable: bool,
    pub verdict: PipelineVerdict,
    pub notes: Vec<String>,
}

/// Runs the stability report, the decay fit and the left-inverse norms on
/// each window of a formula-defined operator, then classifies it.
pub fn stability_pipeline(
    family: &(dyn Fn(usize) -> Result<IndexedMatrix> + Sync),
    windows: &[usize],
    weight: Weight,
    grid: &[Exponent],
    budget: Budget,
    seed: u64,
) -> Result<PipelineReport> {
    if windows.is_empty() {
        return Err(Error::Parameter("the pipeline needs at least one window".into()));
    }
    let reports = windows
        .par_iter()
        .map(|&n| window_report(&family(n)?, n, &weight, grid, budget, seed))
        .collect::<Result<Vec<_>>>()?;

    let largest = windows.iter().enumerate().max_by_key(|(_, &n)| n).map(|(i, _)| i).expect("non-empty");
    let decay = decay_profile(&family(windows[largest])?, &default_radii(windows[largest]))?;

    let lambda_2: Vec<(f64, f64)> = reports
        .iter()
        .filter_map(|w| {
            let e = w.stability.estimates.iter().find(|e| e.p == Exponent::TWO)?;
            (e.value > 0.0).then(|| ((w.window as f64).ln(), e.value.ln()))
        })
        .collect();
    let lambda_2_trend = (lambda_2.len() >= 2).then(|| least_squares(&lambda_2).0);

    let mut norm_ratios = Vec::new();
    for pair in reports.windows(2) {
        if let (Some(a), Some(b)) = (&pair[0].inverse, &pair[1].inverse) {
            let (a, b) = (a.as_vec(), b.as_vec());
            norm_ratios.push(std::array::from_fn(|i| b[i] / a[i]));
        }
    }
    let norms_stable = reports.iter().all(|w| w.inverse.is_some())
        && norm_ratios.iter().flatten().all(|r| (0.5..=2.0).contains(r));

    let mut notes = vec![
        "operators are restricted to each window by dropping rows and columns outside it".to_string(),
    ];
    let any_degenerate = reports.iter().any(|w| w.stability.verdict == Verdict::Degenerate);
    let trend_degenerate = lambda_2_trend.is_some_and(|s| s < DEGENERATE_TREND);
    if trend_degenerate {
        notes.push(format!("lambda_2 decays with the window (log-log slope below {DEGENERATE_TREND})"));
    }
    if decay.super_polynomial {
        notes.push("truncation errors decay faster than any power".to_string());
    }
    let verdict = if decay.sub_polynomial {
        notes.push(format!("fitted decay exponent below {SUB_POLYNOMIAL_T}: no polynomial rate"));
        PipelineVerdict::OutsideTheoremScope
    } else if any_degenerate || trend_degenerate {
        PipelineVerdict::Degenerate
    } else {
        PipelineVerdict::UniformlyBoundedBelow
    };
    Ok(PipelineReport { weight, windows: reports, decay, lambda_2_trend, norm_ratios, norms_stable, verdict, notes })
}

fn window_report(
    a: &IndexedMatrix,
    n: usize,
    weight: &Weight,
    grid: &[Exponent],
    budget: Budget,
    seed: u64,
) -> Result<WindowReport> {
    let stability = stability_report(a, grid, budget, seed)?;
    let (sigma_min, _) = smallest_singular(&a.to_dense());
    let (inverse, inverse_error) = if stability.verdict == Verdict::UniformlyBoundedBelow {
        match build_left_inverse(a, DEFAULT_TOL) {
            Ok(li) => {
                let b = &li.b;
                let norms = InverseNorms {
                    residual_max: li.diagnostics.residual_max,
                    norm_1: op_norm(b, Exponent::ONE)?.value,
                    norm_2: op_norm(b, Exponent::TWO)?.value,
                    norm_inf: op_norm(b, Exponent::INFINITY)?.value,
                    schur: schur_norm(b),
                    weighted_schur: weighted_schur_norm(b, weight)?,
                    cd: cd_norm(b).ok(),
                };
                (Some(norms), None)
            }
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("window verdict is degenerate".to_string()))
    };
    Ok(WindowReport { window: n, stability, sigma_min, inverse, inverse_error })
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// `window,p,lambda_hat,norm_B_p,schur_B,weighted_schur_B,fitted_t,verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window,p,lambda_hat,norm_B_p,schur_B,weighted_schur_B,fitted_t,verdict\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for w in &self.windows {
            for e in &w.stability.estimates {
                let inv = w.inverse.as_ref();
                let _ = writeln!(
                    out,
                    "{},{},{:e},{},{},{},{},{}",
                    w.window,
                    e.p,
                    e.value,
                    opt(inv.and_then(|i| i.norm_p(e.p))),
                    opt(inv.map(|i| i.schur)),
                    opt(inv.map(|i| i.weighted_schur)),
                    self.decay.fitted_t,
                    self.verdict.as_str()
                );
            }
        }
        out
    }
}
