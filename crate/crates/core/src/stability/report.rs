use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::propagation::INTEGER_LINE_K;
use super::{chain_propagation, lambda_estimate, Budget, ChainResult, LambdaEstimate, PropagationConstants, Variant};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::opmat::norms::{column_abs_sums, row_abs_sums};
use crate::opmat::{op_norm, IndexedMatrix};
use crate::space::{covering, DEFAULT_ALPHA};

/// `λ̂_p < DEGENERACY_FACTOR·‖A‖₂` for every grid exponent means degenerate.
pub const DEGENERACY_FACTOR: f64 = 1e-6;

/// Entries below this fraction of the largest witness entry are treated as
/// zero when measuring the witness support.
const SUPPORT_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Degenerate,
    UniformlyBoundedBelow,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Degenerate => "degenerate",
            Verdict::UniformlyBoundedBelow => "uniformly_bounded_below",
        }
    }
}

/// The constants reported alongside every result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportedConstants {
    pub alpha: f64,
    pub integer_line_k: f64,
    pub zrem2_denominator: f64,
    pub degeneracy_factor: f64,
}

impl Default for ReportedConstants {
    fn default() -> Self {
        ReportedConstants {
            alpha: DEFAULT_ALPHA,
            integer_line_k: INTEGER_LINE_K,
            zrem2_denominator: super::ZREM2_DENOMINATOR,
            degeneracy_factor: DEGENERACY_FACTOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub p_grid: Vec<Exponent>,
    pub estimates: Vec<LambdaEstimate>,
    /// Radius of the smallest ball containing each witness support.
    pub witness_support_radii: Vec<Option<f64>>,
    pub lambda_small: f64,
    pub p_small: Exponent,
    pub lambda_big: f64,
    pub p_big: Exponent,
    pub norm_2: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub propagation_constants: Option<PropagationConstants>,
    pub chain: Option<ChainResult>,
    pub constants: ReportedConstants,
    pub budget: Budget,
    pub seed: u64,
}

/// Estimates `λ_p` over the grid, classifies the matrix and chains the
/// propagation inequalities from the largest to the smallest estimate.
pub fn stability_report(a: &IndexedMatrix, grid: &[Exponent], budget: Budget, seed: u64) -> Result<StabilityReport> {
    for needed in [Exponent::ONE, Exponent::TWO, Exponent::INFINITY] {
        if !grid.contains(&needed) {
            return Err(Error::Parameter(format!("the exponent grid must contain 1, 2 and inf; {needed} is missing")));
        }
    }
    let estimates = grid
        .iter()
        .map(|&p| lambda_estimate(a, p, budget, seed))
        .collect::<Result<Vec<_>>>()?;
    let witness_support_radii = estimates.iter().map(|e| support_radius(a, &e.witness)).collect();

    let closeness = |p: Exponent| (p.recip() - 0.5).abs();
    let mut small = 0;
    let mut big = 0;
    for (i, e) in estimates.iter().enumerate() {
        let s = &estimates[small];
        if e.value < s.value || (e.value == s.value && closeness(e.p) < closeness(s.p)) {
            small = i;
        }
        let b = &estimates[big];
        if e.value > b.value || (e.value == b.value && closeness(e.p) < closeness(b.p)) {
            big = i;
        }
    }
    let (lambda_small, p_small) = (estimates[small].value, estimates[small].p);
    let (lambda_big, p_big) = (estimates[big].value, estimates[big].p);

    let norm_2 = op_norm(a, Exponent::TWO)?.value;
    let threshold = DEGENERACY_FACTOR * norm_2;
    let verdict = if estimates.iter().all(|e| e.value < threshold) {
        Verdict::Degenerate
    } else {
        Verdict::UniformlyBoundedBelow
    };

    let propagation_constants = propagation_constants_for(a);
    let integer = a.is_square_metric() && a.col_space().is_some_and(|s| s.is_z_interval());
    let lambda_2 = estimates.iter().find(|e| e.p == Exponent::TWO).map(|e| e.value);
    let chain = propagation_constants.as_ref().and_then(|c| {
        chain_propagation(
            lambda_small,
            p_small,
            lambda_big,
            p_big,
            lambda_2,
            c,
            Variant::ThinSparse,
            integer.then(|| a.max_abs()),
        )
        .ok()
    });

    Ok(StabilityReport {
        p_grid: grid.to_vec(),
        estimates,
        witness_support_radii,
        lambda_small,
        p_small,
        lambda_big,
        p_big,
        norm_2,
        threshold,
        verdict,
        propagation_constants,
        chain,
        constants: ReportedConstants::default(),
        budget,
        seed,
    })
}

/// Integer-line constants for square matrices on an integer window, the
/// covering-based constants on other metric spaces, `None` without a metric.
pub fn propagation_constants_for(a: &IndexedMatrix) -> Option<PropagationConstants> {
    let space = a.col_space()?;
    let stats = a.stats();
    let r = stats.thickness?;
    let v = stats.sparseness.max(stats.max_row_nnz) as f64;
    if a.nnz() == 0 {
        return None;
    }
    if a.is_square_metric() && space.is_z_interval() {
        return Some(PropagationConstants::integer_line(r, v, a.max_abs()));
    }
    let cov = covering(space, r.max(1.0), DEFAULT_ALPHA).ok()?;
    let n1 = column_abs_sums(a).into_iter().fold(0.0, f64::max);
    let ninf = row_abs_sums(a).into_iter().fold(0.0, f64::max);
    let growth = space.growth();
    Some(PropagationConstants::general(
        cov.num_colors,
        (n1 * ninf).sqrt(),
        growth.growth_d,
        growth.growth_k,
        r,
        v,
    ))
}

fn support_radius(a: &IndexedMatrix, w: &[f64]) -> Option<f64> {
    let max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return None;
    }
    let support: Vec<usize> = (0..w.len()).filter(|&x| w[x].abs() > SUPPORT_CUTOFF * max).collect();
    match a.col_space() {
        Some(space) => space.enclosing_ball(&support).map(|(_, r)| r),
        None => Some(((support[support.len() - 1] - support[0]) as f64 / 2.0).ceil()),
    }
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One row per grid exponent: `p,lambda_hat,method,witness_support_radius,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,lambda_hat,method,witness_support_radius,seed\n");
        for (e, r) in self.estimates.iter().zip(&self.witness_support_radii) {
            let radius = r.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{:e},{},{},{}", e.p, e.value, e.method.as_str(), radius, e.seed);
        }
        out
    }
}
