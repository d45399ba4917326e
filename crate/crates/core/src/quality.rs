//! Intrinsic paper quality.
//!
//! Submitted qualities live in the open interval `(1, m)`. A venue's
//! self-selectivity is modelled by the mean and variance of a normal law that
//! is truncated to that interval; the "random" regime is the infinite-variance
//! limit, i.e. a uniform law on `(1, m)`.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::normal;

/// The four self-selectivity regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selectivity {
    High,
    Medium,
    Low,
    Random,
}

impl Selectivity {
    pub const ALL: [Selectivity; 4] = [
        Selectivity::High,
        Selectivity::Medium,
        Selectivity::Low,
        Selectivity::Random,
    ];

    /// Short label used in report tables (`H-S-S`, `M-S-S`, ...).
    pub fn label(self) -> &'static str {
        match self {
            Selectivity::High => "H-S-S",
            Selectivity::Medium => "M-S-S",
            Selectivity::Low => "L-S-S",
            Selectivity::Random => "R-S-S",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Selectivity::High => "high",
            Selectivity::Medium => "medium",
            Selectivity::Low => "low",
            Selectivity::Random => "random",
        }
    }
}

/// Mean and variance of the untruncated normal behind a regime.
///
/// `mean` is `None` and `variance` is infinite for [`Selectivity::Random`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    pub mean: Option<f64>,
    pub variance: f64,
}

impl RegimeParams {
    pub fn is_infinite_variance(&self) -> bool {
        self.variance.is_infinite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectivityRegime {
    pub kind: Selectivity,
    pub max_score: u32,
}

impl SelectivityRegime {
    pub fn new(kind: Selectivity, max_score: u32) -> Result<Self, ModelError> {
        if max_score < 2 {
            return Err(ModelError::InvalidParameter(format!(
                "rating ceiling m must be at least 2, got {max_score}"
            )));
        }
        Ok(Self { kind, max_score })
    }

    pub fn params(&self) -> RegimeParams {
        let m = f64::from(self.max_score);
        match self.kind {
            Selectivity::High => RegimeParams {
                mean: Some(m),
                variance: 1.0,
            },
            Selectivity::Medium => RegimeParams {
                mean: Some((m + 1.0) / 2.0),
                variance: 1.0,
            },
            Selectivity::Low => RegimeParams {
                mean: Some(1.0),
                variance: 1.0,
            },
            Selectivity::Random => RegimeParams {
                mean: None,
                variance: f64::INFINITY,
            },
        }
    }

    pub fn distribution(&self) -> QualityDistribution {
        let upper = f64::from(self.max_score);
        match self.params() {
            RegimeParams {
                mean: Some(mean),
                variance,
            } => QualityDistribution::Truncated(
                TruncatedNormal::new(mean, variance, 1.0, upper)
                    .expect("regime parameters are always valid"),
            ),
            _ => QualityDistribution::Uniform { lower: 1.0, upper },
        }
    }
}

/// `(q, σ²)` pair for a regime.
pub fn regime_params(regime: SelectivityRegime) -> RegimeParams {
    regime.params()
}

/// Normal law `N(mean, variance)` conditioned on `(lower, upper)`.
///
/// Sampling is by inverse CDF, consuming exactly one uniform per accepted draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    // Standardised bounds, reflected so that the interval sits mostly on the
    // left of zero where Φ has full relative precision.
    z_lo: f64,
    z_hi: f64,
    reflected: bool,
    p_lo: f64,
    p_hi: f64,
}

impl TruncatedNormal {
    pub fn new(mean: f64, variance: f64, lower: f64, upper: f64) -> Result<Self, ModelError> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "truncated normal needs a finite positive variance, got {variance}"
            )));
        }
        if !(lower < upper) || !mean.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "invalid truncation interval ({lower}, {upper}) for mean {mean}"
            )));
        }
        let sd = variance.sqrt();
        let a = (lower - mean) / sd;
        let b = (upper - mean) / sd;
        let reflected = a + b > 0.0;
        let (z_lo, z_hi) = if reflected { (-b, -a) } else { (a, b) };
        let p_lo = normal::cdf(z_lo);
        let p_hi = normal::cdf(z_hi);
        if !(p_hi > p_lo) {
            return Err(ModelError::InvalidParameter(format!(
                "interval ({lower}, {upper}) has no mass under N({mean}, {variance})"
            )));
        }
        Ok(Self {
            mean,
            sd,
            lower,
            upper,
            z_lo,
            z_hi,
            reflected,
            p_lo,
            p_hi,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Probability mass of the parent normal inside the interval.
    pub fn kept_mass(&self) -> f64 {
        normal::interval_mass(self.z_lo, self.z_hi)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= self.lower || x >= self.upper {
            return 0.0;
        }
        normal::pdf((x - self.mean) / self.sd) / (self.sd * self.kept_mass())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        let z = (x - self.mean) / self.sd;
        let total = self.kept_mass();
        if self.reflected {
            // Mass of (x, upper) in the original orientation is (z_lo, -z).
            1.0 - normal::interval_mass(self.z_lo, -z) / total
        } else {
            normal::interval_mass(self.z_lo, z) / total
        }
    }

    /// Inverse CDF applied to `u` in `(0, 1)`; may land on a boundary through
    /// rounding, which [`TruncatedNormal::sample`] rejects.
    pub fn transform(&self, u: f64) -> f64 {
        // keep the map increasing in u when working on the mirrored interval
        let p = if self.reflected {
            self.p_hi - u * (self.p_hi - self.p_lo)
        } else {
            self.p_lo + u * (self.p_hi - self.p_lo)
        };
        let z = normal::quantile(p).clamp(self.z_lo, self.z_hi);
        let z = if self.reflected { -z } else { z };
        self.mean + self.sd * z
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.sample(Open01);
            let x = self.transform(u);
            if x > self.lower && x < self.upper {
                return x;
            }
        }
    }
}

/// Law of a single paper's intrinsic quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QualityDistribution {
    Truncated(TruncatedNormal),
    Uniform { lower: f64, upper: f64 },
}

impl QualityDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            QualityDistribution::Truncated(ref t) => t.sample(rng),
            QualityDistribution::Uniform { lower, upper } => loop {
                let u: f64 = rng.sample(Open01);
                let x = lower + (upper - lower) * u;
                if x > lower && x < upper {
                    return x;
                }
            },
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            QualityDistribution::Truncated(ref t) => t.cdf(x),
            QualityDistribution::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
        }
    }
}

/// Qualities of all `N` papers in one simulated conference.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityVector(Vec<f64>);

impl QualityVector {
    pub fn new(values: Vec<f64>, max_score: u32) -> Result<Self, ModelError> {
        let m = f64::from(max_score);
        if values.is_empty() {
            return Err(ModelError::InvalidParameter("quality vector is empty".into()));
        }
        if let Some(bad) = values.iter().find(|q| !(**q > 1.0 && **q < m)) {
            return Err(ModelError::InvalidParameter(format!(
                "quality {bad} is outside (1, {max_score})"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Draws `n` independent qualities.
pub fn sample_qualities<R: Rng + ?Sized>(
    dist: &QualityDistribution,
    n: usize,
    rng: &mut R,
) -> QualityVector {
    QualityVector((0..n).map(|_| dist.sample(rng)).collect())
}

/// Deterministic evenly spaced grid `Q_i = m - i(m-1)/(N+1)`, `i = 1..=N`.
pub fn linear_quality_grid(papers: usize, max_score: u32) -> Result<QualityVector, ModelError> {
    if papers == 0 || max_score < 2 {
        return Err(ModelError::InvalidParameter(format!(
            "linear grid needs N >= 1 and m >= 2, got N = {papers}, m = {max_score}"
        )));
    }
    let m = f64::from(max_score);
    let n1 = (papers + 1) as f64;
    Ok(QualityVector(
        (1..=papers)
            .map(|i| m - (i as f64) * (m - 1.0) / n1)
            .collect(),
    ))
}
