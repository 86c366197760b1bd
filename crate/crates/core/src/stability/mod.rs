//! Estimation of `λ_p(A) = inf_{f≠0} ‖Af‖_p/‖f‖_p`, localization of
//! near-minimizers onto balls, inequalities transferring lower bounds across
//! exponents, and the thinning scheme for thin operators with no column
//! constraint.

mod almost_ts;
mod lambda;
mod localize;
mod propagation;
mod report;
mod thinning;

use serde::{Deserialize, Serialize};

use crate::exponent::{lp_norm, Exponent};
use crate::opmat::IndexedMatrix;

pub use almost_ts::{almost_ts_localize, AlmostTsCertificate, AlmostTsParams, AlmostTsPreset};
pub use lambda::{lambda_estimate, lambda_exact_2, lambda_vertex_search, Budget};
pub use localize::{localize, LocalizeCertificate, Localized, LocalizeStrategy};
pub use propagation::{
    chain_propagation, propagation_bound, zrem2_bound, ChainResult, ChainStep, PropagationConstants, Variant,
    Zrem2Check, ZREM2_DENOMINATOR,
};
pub use report::{propagation_constants_for, stability_report, ReportedConstants, StabilityReport, Verdict, DEGENERACY_FACTOR};
pub use thinning::{sequence_tail_bound, top_m_thinning, ThinningResult};

/// How an estimate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Smallest singular value of the dense matrix (`p = 2` only).
    ExactSvd,
    /// Multi-start descent on the Rayleigh-type quotient.
    Optimizer,
    /// A start produced by the localization procedure won.
    LocalizedSweep,
    /// Exhaustive search over the extreme points of the unit ball of the
    /// inverse (square invertible matrices, `p ∈ {1, ∞}`).
    VertexSearch,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactSvd => "exact_svd",
            Method::Optimizer => "optimizer",
            Method::LocalizedSweep => "localized_sweep",
            Method::VertexSearch => "vertex_search",
        }
    }
}

/// An upper bound on `λ_p(A)` certified by its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub p: Exponent,
    /// `‖A·witness‖_p / ‖witness‖_p`, recomputed from the witness.
    pub value: f64,
    pub witness: Vec<f64>,
    pub method: Method,
    /// For `exact_svd`, `|value − σ_min|`; otherwise the descent tolerance.
    pub tolerance: f64,
    pub seed: u64,
}

/// `‖Af‖_p / ‖f‖_p`.
pub fn ratio(a: &IndexedMatrix, f: &[f64], p: Exponent) -> f64 {
    let nf = lp_norm(f, p);
    if nf == 0.0 {
        return f64::NAN;
    }
    lp_norm(&a.apply_unchecked(f), p) / nf
}
