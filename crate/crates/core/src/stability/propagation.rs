use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;

/// Denominator of the single-step bound on integer windows,
/// `λ₂ ≥ Λ²/(162·r³·‖A‖_sup)`.
pub const ZREM2_DENOMINATOR: f64 = 162.0;
/// Propagation constant on integer windows.
pub const INTEGER_LINE_K: f64 = 18.0;
/// Largest step in `d/p` space taken by [`chain_propagation`].
const MAX_STEP: f64 = 0.5;

/// Which one-step inequality is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Thin rows, sparse columns: carries the factor `v^{|1/p−1/q|}`.
    ThinSparse,
    /// Thin rows, no column assumption: no `v` factor, only `p ≤ q`.
    ThinEmpty,
}

/// Constants entering the localization and propagation inequalities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConstants {
    /// Multiplicative localization constant.
    pub c1: f64,
    /// Error-term constant.
    pub c2: f64,
    /// One-step propagation constant.
    pub k_step: f64,
    /// Growth exponent of the space.
    pub d: f64,
    /// Thickness (at least 1).
    pub r: f64,
    /// Sparseness.
    pub v: f64,
    /// Decay exponents of the thin-sparse approximation, when relevant.
    pub t: Option<f64>,
    pub s: Option<f64>,
}

impl PropagationConstants {
    /// Integer-line constants: `C1 = 3`, `C2 = 3r²‖A‖_sup`, `K = 18`, `d = 1`.
    pub fn integer_line(r: f64, v: f64, sup: f64) -> Self {
        let r = r.max(1.0);
        PropagationConstants { c1: 3.0, c2: 3.0 * r * r * sup, k_step: INTEGER_LINE_K, d: 1.0, r, v, t: None, s: None }
    }

    /// Constants on a general doubling space: `C1 = 2·(number of colors)`,
    /// `C2 = ‖|A|‖/2`, and `K = 2·C1·K_growth`.
    pub fn general(num_colors: usize, abs_norm: f64, growth_d: f64, growth_k: f64, r: f64, v: f64) -> Self {
        let c1 = 2.0 * num_colors as f64;
        PropagationConstants {
            c1,
            c2: abs_norm / 2.0,
            k_step: 2.0 * c1 * growth_k.max(1.0),
            d: growth_d.max(f64::MIN_POSITIVE),
            r: r.max(1.0),
            v: v.max(1.0),
            t: None,
            s: None,
        }
    }

    pub fn with_decay(mut self, t: f64, s: f64) -> Self {
        self.t = Some(t);
        self.s = Some(s);
        self
    }

    /// `u = min{1/2, t/2, s·d}` when both decay exponents are set.
    pub fn u(&self) -> Option<f64> {
        Some(0.5f64.min(self.t? / 2.0).min(self.s? * self.d))
    }

    fn validate(&self) -> Result<()> {
        let all = [self.c1, self.c2, self.k_step, self.d, self.r, self.v];
        if all.iter().any(|v| !(*v > 0.0)) || self.t.is_some_and(|t| !(t > 0.0)) || self.s.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::Parameter(format!("propagation constants must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Lower bound on `λ_p` from `λ_q`:
/// `λ_p ≥ (λ_q / (K·v^{|1/p−1/q|}·r^{gap}))^{1/(1−gap)}` with
/// `gap = |d/p − d/q| < 1` (the `v` factor is dropped for [`Variant::ThinEmpty`]).
pub fn propagation_bound(
    lambda_q: f64,
    p: Exponent,
    q: Exponent,
    consts: &PropagationConstants,
    variant: Variant,
) -> Result<f64> {
    consts.validate()?;
    if !(lambda_q >= 0.0) {
        return Err(Error::Parameter(format!("lambda_q must be non-negative, got {lambda_q}")));
    }
    let gap = consts.d * (p.recip() - q.recip()).abs();
    if gap >= 1.0 {
        return Err(Error::StepTooLarge { gap });
    }
    let v_factor = match variant {
        Variant::ThinSparse => consts.v.powf((p.recip() - q.recip()).abs()),
        Variant::ThinEmpty => {
            if p > q {
                return Err(Error::Parameter(format!("thin-empty propagation needs p <= q, got p={p}, q={q}")));
            }
            1.0
        }
    };
    let denom = consts.k_step * v_factor * consts.r.powf(gap);
    Ok((lambda_q / denom).powf(1.0 / (1.0 - gap)))
}

/// `Λ²/(162·r³·‖A‖_sup)`.
pub fn zrem2_bound(lambda_big: f64, r: f64, sup: f64) -> f64 {
    let r = r.max(1.0);
    lambda_big * lambda_big / (ZREM2_DENOMINATOR * r.powi(3) * sup)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub from: Exponent,
    pub to: Exponent,
    pub gap: f64,
    /// Bound on `λ_to` obtained from the bound on `λ_from`.
    pub lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zrem2Check {
    pub lambda_2: f64,
    pub lambda_big: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub p_small: Exponent,
    pub p_big: Exponent,
    pub steps: Vec<ChainStep>,
    /// Power of `Λ` in the chained bound `λ ≥ k·Λ^exponent`.
    pub exponent: f64,
    /// The chained bound at `Λ = 1`.
    pub k: f64,
    /// `k·Λ^exponent`.
    pub bound: f64,
    pub lambda_small: f64,
    pub lambda_big: f64,
    /// `λ ≥ bound` for the estimated `λ`.
    pub holds: bool,
    pub zrem2: Option<Zrem2Check>,
}

/// Chains [`propagation_bound`] from `p_big` (where `Λ` is attained) to
/// `p_small` in equal steps of at most `1/2` in `d/p` space. With
/// `integer_sup = Some(‖A‖_sup)` the single-step integer-line bound on `λ₂`
/// is evaluated as well.
#[allow(clippy::too_many_arguments)]
pub fn chain_propagation(
    lambda_small: f64,
    p_small: Exponent,
    lambda_big: f64,
    p_big: Exponent,
    lambda_2: Option<f64>,
    consts: &PropagationConstants,
    variant: Variant,
    integer_sup: Option<f64>,
) -> Result<ChainResult> {
    consts.validate()?;
    let start = consts.d * p_big.recip();
    let end = consts.d * p_small.recip();
    let total = (end - start).abs();
    let n_steps = (total / MAX_STEP - 1e-12).ceil().max(0.0) as usize;
    let mut steps = Vec::with_capacity(n_steps);
    let mut current = lambda_big;
    let mut unit = 1.0;
    let mut exponent = 1.0;
    let mut from = p_big;
    for i in 1..=n_steps {
        let s = start + (end - start) * i as f64 / n_steps as f64;
        let to = if i == n_steps { p_small } else { Exponent::from_recip(s / consts.d)? };
        let gap = consts.d * (to.recip() - from.recip()).abs();
        current = propagation_bound(current, to, from, consts, variant)?;
        unit = propagation_bound(unit, to, from, consts, variant)?;
        exponent /= 1.0 - gap;
        steps.push(ChainStep { from, to, gap, lower_bound: current });
        from = to;
    }
    let k = if n_steps == 0 { 1.0 } else { unit };
    let bound = k * lambda_big.powf(exponent);
    let zrem2 = match (integer_sup, lambda_2) {
        (Some(sup), Some(l2)) => {
            let b = zrem2_bound(lambda_big, consts.r, sup);
            Some(Zrem2Check { lambda_2: l2, lambda_big, bound: b, holds: l2 >= b })
        }
        _ => None,
    };
    Ok(ChainResult {
        p_small,
        p_big,
        steps,
        exponent,
        k,
        bound,
        lambda_small,
        lambda_big,
        holds: lambda_small >= bound,
        zrem2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let c = PropagationConstants::integer_line(1.0, 3.0, 1.0);
        let b = propagation_bound(0.9, Exponent::TWO, Exponent::INFINITY, &c, Variant::ThinSparse).unwrap();
        let expected = (0.9 / (18.0 * 3f64.sqrt())).powi(2);
        assert!((b - expected).abs() < 1e-15);
        assert!((b - 8.333e-4).abs() < 1e-6);
    }

    #[test]
    fn zero_gap_and_vanishing() {
        let c = PropagationConstants::integer_line(2.0, 5.0, 1.0);
        let p = Exponent::new(3.0).unwrap();
        let b = propagation_bound(0.36, p, p, &c, Variant::ThinSparse).unwrap();
        assert!((b - 0.02).abs() < 1e-15);
        assert_eq!(propagation_bound(0.0, Exponent::ONE, Exponent::TWO, &c, Variant::ThinSparse).unwrap(), 0.0);
    }

    #[test]
    fn step_limits() {
        let c = PropagationConstants::integer_line(1.0, 3.0, 1.0);
        assert!(matches!(
            propagation_bound(0.5, Exponent::ONE, Exponent::INFINITY, &c, Variant::ThinSparse),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(propagation_bound(0.5, Exponent::INFINITY, Exponent::TWO, &c, Variant::ThinEmpty).is_err());
        assert!(propagation_bound(0.5, Exponent::TWO, Exponent::INFINITY, &c, Variant::ThinEmpty).is_ok());
    }

    #[test]
    fn chain_on_the_line_has_exponent_four() {
        let c = PropagationConstants::integer_line(1.0, 3.0, 1.0);
        let res = chain_propagation(0.5, Exponent::ONE, 0.9, Exponent::INFINITY, Some(0.6), &c, Variant::ThinSparse, Some(1.0))
            .unwrap();
        assert_eq!(res.steps.len(), 2);
        assert!(res.steps.iter().all(|s| (s.gap - 0.5).abs() < 1e-15));
        assert!((res.exponent - 4.0).abs() < 1e-12);
        assert!(res.holds);
        assert!(res.zrem2.unwrap().holds);
    }

    #[test]
    fn identity_chain() {
        let c = PropagationConstants::integer_line(0.0, 1.0, 1.0);
        let res = chain_propagation(1.0, Exponent::TWO, 1.0, Exponent::TWO, Some(1.0), &c, Variant::ThinSparse, Some(1.0))
            .unwrap();
        assert!(res.steps.is_empty());
        let z = res.zrem2.unwrap();
        assert!((z.bound - 1.0 / 162.0).abs() < 1e-15 && z.holds);
    }

    #[test]
    fn decay_exponent() {
        let c = PropagationConstants::integer_line(1.0, 3.0, 1.0).with_decay(2.0, 1.0);
        assert_eq!(c.u(), Some(0.5));
        let c = PropagationConstants::integer_line(1.0, 3.0, 1.0).with_decay(0.4, 1.0);
        assert!((c.u().unwrap() - 0.2).abs() < 1e-15);
    }
}
