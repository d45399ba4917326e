//! Number of simulation rounds needed for a Chernoff-style accuracy
//! guarantee on the estimated pmf of `I(k)`.

use serde::{Deserialize, Serialize};

use crate::error::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Bound {
    /// Additive error `ε·√Pr` on every pmf entry.
    Tight,
    /// Relative error `ε` on every pmf entry, given `p_floor` as a lower
    /// bound on every nonzero entry.
    Loose { p_floor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuaranteeSpec {
    pub epsilon: f64,
    pub delta: f64,
    pub bound: Bound,
    pub accept: usize,
}

impl GuaranteeSpec {
    pub fn new(epsilon: f64, delta: f64, bound: Bound, accept: usize) -> Result<Self, EngineError> {
        let spec = Self {
            epsilon,
            delta,
            bound,
            accept,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(EngineError::Validation("ε > 0".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(EngineError::Validation("δ ∈ (0, 1)".into()));
        }
        if let Bound::Loose { p_floor } = self.bound {
            if !(p_floor > 0.0 && p_floor <= 1.0) {
                return Err(EngineError::Validation("p_floor ∈ (0, 1]".into()));
            }
        }
        Ok(())
    }

    /// `3 ln(2(k+1)/δ) / ε²` before rounding up.
    fn base(&self) -> f64 {
        3.0 * (2.0 * (self.accept as f64 + 1.0) / self.delta).ln() / (self.epsilon * self.epsilon)
    }

    pub fn required_rounds(&self) -> u64 {
        match self.bound {
            Bound::Tight => required_rounds_tight(self.epsilon, self.delta, self.accept),
            Bound::Loose { p_floor } => required_rounds_loose(self.epsilon, self.delta, self.accept, p_floor),
        }
    }
}

/// `K = ⌈3 ln(2(k+1)/δ) / ε²⌉`.
pub fn required_rounds_tight(epsilon: f64, delta: f64, accept: usize) -> u64 {
    let spec = GuaranteeSpec {
        epsilon,
        delta,
        bound: Bound::Tight,
        accept,
    };
    spec.base().ceil() as u64
}

/// `K = ⌈3 ln(2(k+1)/δ) / (p_floor·ε²)⌉`.
pub fn required_rounds_loose(epsilon: f64, delta: f64, accept: usize, p_floor: f64) -> u64 {
    let spec = GuaranteeSpec {
        epsilon,
        delta,
        bound: Bound::Loose { p_floor },
        accept,
    };
    (spec.base() / p_floor).ceil() as u64
}

/// Whether every entry satisfies `|p̂ - p| ≤ ε·√p`.
pub fn within_tight_guarantee(estimate: &[f64], exact: &[f64], epsilon: f64) -> bool {
    estimate.len() == exact.len()
        && estimate
            .iter()
            .zip(exact)
            .all(|(e, p)| (e - p).abs() <= epsilon * p.sqrt())
}

/// Whether every entry satisfies `|p̂ - p| ≤ ε·p`.
pub fn within_relative_guarantee(estimate: &[f64], exact: &[f64], epsilon: f64) -> bool {
    estimate.len() == exact.len()
        && estimate
            .iter()
            .zip(exact)
            .all(|(e, p)| (e - p).abs() <= epsilon * p)
}
