//! Per-review score distributions and reviewer behaviour.
//!
//! A score is built in two steps. A normal `N(Q, σ²)` is discretised onto the
//! rating scale `{1..m}` by integrating unit-width bins and renormalising, and
//! the resulting pmf is then rescaled (lower bins `1..=⌊Q⌋` by `1 - β`, upper
//! bins by `1 + α`) so that its mean is exactly `Q`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::normal;

/// Scores strictly below this value count as a "low" evaluation for
/// [`Behavior::BiasScoring`].
pub const BIAS_THRESHOLD: u32 = 3;

/// Discrete distribution of one review score over `{1..m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePmf {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    quality: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
}

impl ScorePmf {
    /// Discretise and mean-adjust `N(quality, sigma²)` onto `{1..max_score}`.
    pub fn new(quality: f64, sigma: f64, max_score: u32) -> Result<Self, ModelError> {
        let pmf = discretize(quality, sigma, max_score)?;
        adjust(&pmf, quality, sigma)
    }

    /// Wraps an arbitrary pmf (index 0 is score 1). The stored quality is the
    /// pmf's own mean, so the mean-preservation invariant still holds.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.len() < 2 {
            return Err(ModelError::InvalidParameter(
                "a score pmf needs at least two rating levels".into(),
            ));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(ModelError::InvalidParameter(
                "score probabilities must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidParameter(format!(
                "score probabilities sum to {total}, not 1"
            )));
        }
        let quality = mean_of(&probs);
        Ok(Self::assemble(probs, quality, f64::NAN, 0.0, 0.0))
    }

    /// Recomputes this pmf for new parameters, reusing its buffers. The
    /// rating ceiling stays the same.
    pub fn rebuild(&mut self, quality: f64, sigma: f64) -> Result<(), ModelError> {
        discretize_into(quality, sigma, &mut self.probs)?;
        let (alpha, beta) = adjust_in_place(&mut self.probs, quality, sigma)?;
        self.quality = quality;
        self.sigma = sigma;
        self.alpha = alpha;
        self.beta = beta;
        fill_cumulative(&self.probs, &mut self.cumulative);
        Ok(())
    }

    fn assemble(probs: Vec<f64>, quality: f64, sigma: f64, alpha: f64, beta: f64) -> Self {
        let mut cumulative = vec![0.0; probs.len()];
        fill_cumulative(&probs, &mut cumulative);
        Self {
            probs,
            cumulative,
            quality,
            sigma,
            alpha,
            beta,
        }
    }

    pub fn max_score(&self) -> u32 {
        self.probs.len() as u32
    }

    /// Probabilities indexed by `score - 1`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Pr[S = score]`, zero outside `{1..m}`.
    pub fn prob(&self, score: u32) -> f64 {
        match score {
            0 => 0.0,
            s => self.probs.get(s as usize - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        mean_of(&self.probs)
    }

    /// Maps one uniform `u ∈ [0, 1)` to a score by inverse CDF.
    pub fn score_for(&self, u: f64) -> u32 {
        for (i, &c) in self.cumulative.iter().enumerate() {
            if u < c {
                return i as u32 + 1;
            }
        }
        // u rounded past the last partial sum
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32 + 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.score_for(rng.random::<f64>())
    }
}

fn fill_cumulative(probs: &[f64], out: &mut [f64]) {
    let mut acc = 0.0;
    for (c, p) in out.iter_mut().zip(probs) {
        acc += p;
        *c = acc;
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
}

fn mean_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1) as f64 * p)
        .sum()
}

/// Pmf of `L`, the normal `N(quality, sigma²)` binned onto `{1..m}` with bins
/// `[ℓ - 0.5, ℓ + 0.5]` and renormalised over `[0.5, m + 0.5]`.
pub fn discretize(quality: f64, sigma: f64, max_score: u32) -> Result<Vec<f64>, ModelError> {
    let mut out = vec![0.0; max_score as usize];
    discretize_into(quality, sigma, &mut out)?;
    Ok(out)
}

/// Bin edge `x` standardised, keeping whichever tail is small so differences
/// of nearby tail probabilities do not cancel.
#[derive(Clone, Copy)]
struct Edge {
    z: f64,
    below: f64,
    above: f64,
}

impl Edge {
    #[inline]
    fn new(x: f64, quality: f64, inv_sigma: f64) -> Self {
        let z = (x - quality) * inv_sigma;
        if z < 0.0 {
            let below = normal::cdf(z);
            Edge { z, below, above: 1.0 - below }
        } else {
            let above = normal::sf(z);
            Edge { z, below: 1.0 - above, above }
        }
    }

    fn mass_to(self, upper: Edge) -> f64 {
        if self.z >= 0.0 {
            self.above - upper.above
        } else if upper.z <= 0.0 {
            upper.below - self.below
        } else {
            1.0 - self.below - upper.above
        }
    }
}

/// [`discretize`] into a caller buffer of length `m`.
pub fn discretize_into(quality: f64, sigma: f64, out: &mut [f64]) -> Result<(), ModelError> {
    let max_score = out.len();
    let m = max_score as f64;
    if max_score < 2 {
        return Err(ModelError::InvalidParameter(format!(
            "rating ceiling must be at least 2, got {max_score}"
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(ModelError::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(quality > 1.0 && quality < m) {
        return Err(ModelError::InvalidParameter(format!(
            "quality {quality} is outside (1, {max_score})"
        )));
    }

    let inv_sigma = 1.0 / sigma;
    let first = Edge::new(0.5, quality, inv_sigma);
    let last = Edge::new(m + 0.5, quality, inv_sigma);
    let total = first.mass_to(last);
    if !(total > 0.0) {
        return Err(ModelError::AdjustmentInfeasible {
            quality,
            sigma,
            reason: "no normal mass on the rating scale".into(),
        });
    }
    let inv_total = 1.0 / total;
    let mut prev = first;
    for (l, slot) in out.iter_mut().enumerate() {
        let next = if l + 1 == max_score {
            last
        } else {
            Edge::new(l as f64 + 1.5, quality, inv_sigma)
        };
        *slot = (prev.mass_to(next) * inv_total).max(0.0);
        prev = next;
    }
    Ok(())
}

/// Rescales a binned pmf so that its mean equals `quality`.
///
/// With `P_lo`, `P_up` the masses of bins `1..=⌊Q⌋` and `⌊Q⌋+1..=m` and
/// `μ_lo`, `μ_up` their conditional means, the scale factors are
/// `α = (Q - E[L]) / (P_up (μ_up - μ_lo))` and
/// `β = (Q - E[L]) / (P_lo (μ_up - μ_lo))`. These equal the usual ratio
/// forms `P_lo (Q - E[L]) / Σ_lo p (E[L] - ℓ)` and
/// `P_up (Q - E[L]) / Σ_lo p (E[L] - ℓ)`, since
/// `Σ_lo p (E[L] - ℓ) = P_lo P_up (μ_up - μ_lo)`, but do not cancel when one
/// side carries almost no mass.
pub fn adjust(pmf_l: &[f64], quality: f64, sigma: f64) -> Result<ScorePmf, ModelError> {
    let mut probs = pmf_l.to_vec();
    let (alpha, beta) = adjust_in_place(&mut probs, quality, sigma)?;
    Ok(ScorePmf::assemble(probs, quality, sigma, alpha, beta))
}

/// [`adjust`] on a buffer, returning `(α, β)`. The buffer is unspecified on
/// error.
pub fn adjust_in_place(probs: &mut [f64], quality: f64, sigma: f64) -> Result<(f64, f64), ModelError> {
    let m = probs.len();
    if m < 2 {
        return Err(ModelError::InvalidParameter(
            "a score pmf needs at least two rating levels".into(),
        ));
    }
    let floor = quality.floor();
    if !(floor >= 1.0 && floor <= (m - 1) as f64) {
        return Err(ModelError::InvalidParameter(format!(
            "floor of quality {quality} must be in 1..={}",
            m - 1
        )));
    }
    let split = floor as usize; // bins 0..split are the lower part

    let (mut p_lo, mut p_up, mut w_lo, mut w_up) = (0.0, 0.0, 0.0, 0.0);
    let mut score = 0.0;
    for &p in &probs[..split] {
        score += 1.0;
        p_lo += p;
        w_lo += score * p;
    }
    for &p in &probs[split..] {
        score += 1.0;
        p_up += p;
        w_up += score * p;
    }
    let shift = quality - (w_lo + w_up);
    // already unbiased up to rounding of E[L]
    if shift.abs() <= 4.0 * f64::EPSILON * quality {
        return Ok((0.0, 0.0));
    }

    let infeasible = |reason: &str| ModelError::AdjustmentInfeasible {
        quality,
        sigma,
        reason: reason.to_string(),
    };
    if !(p_lo > 0.0) || !(p_up > 0.0) {
        return Err(infeasible("one side of floor(Q) carries no probability mass"));
    }
    let gap = w_up / p_up - w_lo / p_lo;

    let alpha = shift / (p_up * gap);
    let beta = shift / (p_lo * gap);
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(infeasible("rescaled probabilities leave [0, 1]"));
    }
    let (down, up) = (1.0 - beta, 1.0 + alpha);
    probs[..split].iter_mut().for_each(|p| *p *= down);
    probs[split..].iter_mut().for_each(|p| *p *= up);
    // the largest scaled entry is at most the scaled side mass
    if down < 0.0 || up < 0.0 || p_lo * down > 1.0 + 1e-12 || p_up * up > 1.0 + 1e-12 {
        return Err(infeasible("rescaled probabilities leave [0, 1]"));
    }
    Ok((alpha, beta))
}

/// Reviewer behaviour overlays applied after an honest score draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    Honest,
    RandomScoring,
    BiasScoring,
}

pub fn apply_behavior<R: Rng + ?Sized>(
    behavior: Behavior,
    honest_score: u32,
    max_score: u32,
    rng: &mut R,
) -> u32 {
    match behavior {
        Behavior::Honest => honest_score,
        Behavior::RandomScoring => rng.random_range(1..=max_score),
        Behavior::BiasScoring => {
            if honest_score < BIAS_THRESHOLD {
                max_score
            } else {
                1
            }
        }
    }
}

/// Monotone increasing map from matching degree to critical degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalMap {
    Identity,
    Square,
    Power(f64),
}

impl CriticalMap {
    pub fn apply(&self, mu: f64) -> f64 {
        match *self {
            CriticalMap::Identity => mu,
            CriticalMap::Square => mu * mu,
            CriticalMap::Power(p) => mu.powf(p),
        }
    }
}

/// Expertise level and critical degree for matching degree `mu`:
/// `e = κ` when `mu ∈ [(κ-1)/l, κ/l)`, with `e = l` at `mu = 1`, and `c = f(mu)`.
pub fn matching_to_expertise_critical(mu: f64, levels: u32, map: CriticalMap) -> (u32, f64) {
    let mu = mu.clamp(0.0, 1.0);
    let bucket = (mu * f64::from(levels)).floor() as u32 + 1;
    (bucket.min(levels), map.apply(mu).clamp(0.0, 1.0))
}

/// How a review's critical degree becomes the score standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaPolicy {
    Constant(f64),
    TwoType { matched: f64, mismatched: f64 },
    /// `σ(c) = base + slope·(1 - c)`.
    LinearInCritical { base: f64, slope: f64 },
}

impl SigmaPolicy {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            SigmaPolicy::Constant(s) => s > 0.0 && s.is_finite(),
            SigmaPolicy::TwoType { matched, mismatched } => {
                matched > 0.0 && mismatched > 0.0 && matched.is_finite() && mismatched.is_finite()
            }
            // strictly decreasing in c and positive on [0, 1]
            SigmaPolicy::LinearInCritical { base, slope } => {
                base > 0.0 && slope > 0.0 && (base + slope).is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter(format!("invalid sigma policy {self:?}")))
        }
    }

    /// Every σ the policy can produce for `c ∈ [0, 1]`, sampled on a grid for
    /// the linear policy. Used for feasibility pre-checks.
    pub fn sigma_grid(&self) -> Vec<f64> {
        match *self {
            SigmaPolicy::Constant(s) => vec![s],
            SigmaPolicy::TwoType { matched, mismatched } => vec![matched, mismatched],
            SigmaPolicy::LinearInCritical { base, slope } => {
                (0..=20).map(|i| base + slope * (1.0 - f64::from(i) / 20.0)).collect()
            }
        }
    }
}

/// `σ` for critical degree `c`. The two-type policy needs `same_type`.
pub fn sigma_of_critical(
    c: f64,
    policy: SigmaPolicy,
    same_type: Option<bool>,
) -> Result<f64, ModelError> {
    match policy {
        SigmaPolicy::Constant(s) => Ok(s),
        SigmaPolicy::TwoType { matched, mismatched } => match same_type {
            Some(true) => Ok(matched),
            Some(false) => Ok(mismatched),
            None => Err(ModelError::InvalidParameter(
                "two-type sigma policy needs a same-type flag".into(),
            )),
        },
        SigmaPolicy::LinearInCritical { base, slope } => Ok(base + slope * (1.0 - c)),
    }
}

/// One reviewer as seen by one paper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReviewerProfile {
    pub matching_degree: f64,
    pub critical_degree: f64,
    pub expertise: u32,
    pub behavior: Behavior,
}

impl ReviewerProfile {
    pub fn from_matching(mu: f64, levels: u32, map: CriticalMap, behavior: Behavior) -> Self {
        let (expertise, critical_degree) = matching_to_expertise_critical(mu, levels, map);
        Self {
            matching_degree: mu,
            critical_degree,
            expertise,
            behavior,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_quality_gives_symmetric_pmf() {
        let p = discretize(3.0, 1.0, 5).unwrap();
        for l in 0..5 {
            assert!((p[l] - p[4 - l]).abs() < 1e-15);
        }
        let adjusted = adjust(&p, 3.0, 1.0).unwrap();
        assert_eq!(adjusted.alpha(), 0.0);
        assert_eq!(adjusted.beta(), 0.0);
        for l in 0..5 {
            assert!((adjusted.probs()[l] - p[l]).abs() < 1e-15);
        }
    }

    #[test]
    fn half_integer_quality_balances_neighbouring_bins() {
        let p = discretize(2.5, 1.0, 5).unwrap();
        assert!((p[1] - p[2]).abs() < 1e-15);
    }

    #[test]
    fn discretize_matches_reference_pmf() {
        // Q = 4.2, sigma = 0.8, m = 5; reference from a 40-digit erf evaluation.
        let expected = [
            0.000_387_381_512_631_646_02,
            0.017_326_654_796_655_322,
            0.183_553_701_831_460_1,
            0.480_403_755_853_325_27,
            0.318_328_506_005_927_66,
        ];
        let p = discretize(4.2, 0.8, 5).unwrap();
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        // alpha and beta from a 40-digit solve of the normalisation and mean
        // constraints.
        let s = adjust(&p, 4.2, 0.8).unwrap();
        assert!((s.alpha() - 0.240_132_724_854_752_28).abs() < 1e-12);
        assert!((s.beta() - 0.112_137_726_485_025_2).abs() < 1e-12);
        assert!((s.mean() - 4.2).abs() < 1e-12);
    }

    #[test]
    fn near_ceiling_pmf_matches_reference() {
        // Q = 4.9, sigma = 1; 30-digit evaluation of binning plus rescale
        let expected = [
            7.641_315_070_458_709e-5,
            0.001_811_835_367_012_619_2,
            0.016_724_559_759_242_287,
            0.060_809_721_777_659_22,
            0.920_577_469_945_381_3,
        ];
        let s = ScorePmf::new(4.9, 1.0, 5).unwrap();
        for (a, b) in s.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn low_quality_shifts_mass_down() {
        let p = discretize(1.5, 1.0, 5).unwrap();
        assert!(mean_of(&p) > 1.5);
        let s = adjust(&p, 1.5, 1.0).unwrap();
        assert!(s.alpha() < 0.0 && s.beta() < 0.0);
        assert!((s.mean() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn tiny_sigma_concentrates_on_neighbours() {
        let s = ScorePmf::new(4.2, 0.01, 5).unwrap();
        assert!((s.prob(4) - 0.8).abs() < 1e-12);
        assert!((s.prob(5) - 0.2).abs() < 1e-12);
        let s = ScorePmf::new(4.0, 0.01, 5).unwrap();
        assert_eq!(s.prob(4), 1.0);
    }

    #[test]
    fn discretize_rejects_bad_inputs() {
        assert!(discretize(1.0, 1.0, 5).is_err());
        assert!(discretize(5.0, 1.0, 5).is_err());
        assert!(discretize(3.0, 0.0, 5).is_err());
        assert!(discretize(3.0, -1.0, 5).is_err());
    }

    #[test]
    fn coupling_buckets() {
        let id = CriticalMap::Identity;
        assert_eq!(matching_to_expertise_critical(1.0, 3, id), (3, 1.0));
        assert_eq!(matching_to_expertise_critical(0.0, 3, id), (1, 0.0));
        assert_eq!(matching_to_expertise_critical(0.5, 3, id), (2, 0.5));
        assert_eq!(matching_to_expertise_critical(2.0 / 3.0, 3, id).0, 3);
        assert_eq!(matching_to_expertise_critical(0.5, 3, CriticalMap::Square).1, 0.25);
    }

    #[test]
    fn sigma_policies() {
        let two = SigmaPolicy::TwoType {
            matched: 0.5,
            mismatched: 2.0,
        };
        assert_eq!(sigma_of_critical(0.3, two, Some(true)).unwrap(), 0.5);
        assert_eq!(sigma_of_critical(0.3, two, Some(false)).unwrap(), 2.0);
        assert!(sigma_of_critical(0.3, two, None).is_err());
        let lin = SigmaPolicy::LinearInCritical { base: 0.5, slope: 1.5 };
        assert_eq!(sigma_of_critical(1.0, lin, None).unwrap(), 0.5);
        assert_eq!(sigma_of_critical(0.0, lin, None).unwrap(), 2.0);
        assert!(SigmaPolicy::LinearInCritical { base: 0.5, slope: -1.0 }.validate().is_err());
    }

    #[test]
    fn behaviours() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(apply_behavior(Behavior::Honest, 4, 5, &mut rng), 4);
        assert_eq!(apply_behavior(Behavior::BiasScoring, 2, 5, &mut rng), 5);
        assert_eq!(apply_behavior(Behavior::BiasScoring, 3, 5, &mut rng), 1);
        assert_eq!(apply_behavior(Behavior::BiasScoring, 5, 5, &mut rng), 1);
        for _ in 0..1000 {
            let s = apply_behavior(Behavior::RandomScoring, 3, 5, &mut rng);
            assert!((1..=5).contains(&s));
        }
    }

    #[test]
    fn point_mass_always_sampled() {
        let s = ScorePmf::from_probs(vec![0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!((0..1000).all(|_| s.sample(&mut rng) == 4));
        assert_eq!(s.score_for(0.999_999_999_999), 4);
    }
}
