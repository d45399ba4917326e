//! Scenario description shared by the engine, the strategies and the CLI.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EngineError, ModelError};
use crate::quality::{linear_quality_grid, QualityVector, Selectivity};
use crate::rules::{TieBreakRule, VotingRule};
use crate::score::{CriticalMap, ScorePmf, SigmaPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReviewPolicy {
    /// Every paper receives `n` reviews.
    Homogeneous(u32),
    /// `⌊n/2⌋` reviews for everyone, then `2⌈n/2⌉` more for the better half.
    HeterogeneousTwoRound(u32),
}

impl ReviewPolicy {
    pub fn n(&self) -> u32 {
        match *self {
            ReviewPolicy::Homogeneous(n) | ReviewPolicy::HeterogeneousTwoRound(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum QualityModel {
    /// Qualities redrawn every round from a self-selectivity regime.
    Regime(Selectivity),
    /// The fixed, evenly spaced grid `Q_i = m - i(m-1)/(N+1)`.
    LinearGrid,
    /// Fixed qualities, one per paper.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatchingModel {
    /// Matching is not modelled; every review has critical degree `critical`.
    None { critical: f64 },
    /// Each review comes from a same-type reviewer with probability
    /// `fraction` (matching degree 1), otherwise matching degree 0. Two
    /// expertise levels.
    TwoType { fraction: f64 },
    /// Matching degree uniform on `[0, 1]` per review, `levels` expertise
    /// levels and critical degree `map(μ)`.
    ManyType { levels: u32, map: CriticalMap },
}

impl Default for MatchingModel {
    fn default() -> Self {
        MatchingModel::None { critical: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorMix {
    #[serde(default)]
    pub random_scoring: f64,
    #[serde(default)]
    pub bias_scoring: f64,
}

impl BehaviorMix {
    pub fn is_honest(&self) -> bool {
        self.random_scoring == 0.0 && self.bias_scoring == 0.0
    }
}

fn default_max_score() -> u32 {
    5
}

fn default_tiebreak() -> TieBreakRule {
    TieBreakRule::RandomPick
}

fn default_sigma() -> SigmaPolicy {
    SigmaPolicy::Constant(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub papers: usize,
    pub accept: usize,
    #[serde(default = "default_max_score")]
    pub max_score: u32,
    pub reviews: ReviewPolicy,
    pub quality: QualityModel,
    pub voting: VotingRule,
    #[serde(default = "default_tiebreak")]
    pub tiebreak: TieBreakRule,
    #[serde(default = "default_sigma")]
    pub sigma: SigmaPolicy,
    #[serde(default)]
    pub matching: MatchingModel,
    #[serde(default)]
    pub behaviors: BehaviorMix,
    /// Values of `i` for which `|top-i ∩ accepted|` is tallied; `k` is
    /// always included.
    #[serde(default)]
    pub metrics: Vec<usize>,
    pub seed: u64,
}

fn invalid(what: &str) -> EngineError {
    EngineError::Validation(what.to_string())
}

fn fraction_ok(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl ScenarioConfig {
    /// Homogeneous scenario with honest reviewers and `σ = 1`.
    pub fn basic(
        papers: usize,
        accept: usize,
        reviews: u32,
        quality: QualityModel,
        voting: VotingRule,
        tiebreak: TieBreakRule,
        seed: u64,
    ) -> Self {
        Self {
            papers,
            accept,
            max_score: default_max_score(),
            reviews: ReviewPolicy::Homogeneous(reviews),
            quality,
            voting,
            tiebreak,
            sigma: default_sigma(),
            matching: MatchingModel::default(),
            behaviors: BehaviorMix::default(),
            metrics: Vec::new(),
            seed,
        }
    }

    /// Sorted, de-duplicated metric list including `k`.
    pub fn metric_list(&self) -> Vec<usize> {
        let mut list = self.metrics.clone();
        list.push(self.accept);
        list.sort_unstable();
        list.dedup();
        list
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }

    /// Checks every cross-field constraint, then that the score model is
    /// feasible for all qualities and noise levels the scenario can produce.
    pub fn validate(&self) -> Result<(), EngineError> {
        self.validate_structure()?;
        self.check_feasibility()
    }

    pub fn validate_structure(&self) -> Result<(), EngineError> {
        if self.max_score < 2 {
            return Err(invalid("m ≥ 2"));
        }
        if self.papers < 1 {
            return Err(invalid("N ≥ 1"));
        }
        if self.accept < 1 {
            return Err(invalid("k ≥ 1"));
        }
        if self.accept > self.papers {
            return Err(invalid("k ≤ N"));
        }
        let n = self.reviews.n();
        if n < 1 {
            return Err(invalid("n ≥ 1"));
        }
        let needed = self.voting.min_reviews() as u32;
        match self.reviews {
            ReviewPolicy::Homogeneous(n) => {
                if n < needed {
                    return Err(EngineError::Validation(format!(
                        "{} needs n ≥ {needed}",
                        self.voting.name()
                    )));
                }
            }
            ReviewPolicy::HeterogeneousTwoRound(n) => {
                if n < 2 {
                    return Err(invalid("two-round reviewing needs n ≥ 2"));
                }
                if n / 2 < needed {
                    return Err(EngineError::Validation(format!(
                        "{} needs ⌊n/2⌋ ≥ {needed} in the first round",
                        self.voting.name()
                    )));
                }
                if self.accept > self.papers.div_ceil(2) {
                    return Err(invalid("two-round reviewing needs k ≤ ⌈N/2⌉"));
                }
            }
        }
        if let QualityModel::Custom(values) = &self.quality {
            if values.len() != self.papers {
                return Err(invalid("custom qualities: one per paper"));
            }
            if values.iter().any(|&q| !(q > 1.0 && q < f64::from(self.max_score))) {
                return Err(invalid("custom qualities in (1, m)"));
            }
        }
        self.sigma.validate().map_err(|_| invalid("σ policy positive and finite"))?;
        match self.matching {
            MatchingModel::None { critical } => {
                if !fraction_ok(critical) {
                    return Err(invalid("critical degree in [0, 1]"));
                }
            }
            MatchingModel::TwoType { fraction } => {
                if !fraction_ok(fraction) {
                    return Err(invalid("same-type fraction in [0, 1]"));
                }
            }
            MatchingModel::ManyType { levels, map } => {
                if levels < 1 {
                    return Err(invalid("expertise levels ≥ 1"));
                }
                if let CriticalMap::Power(p) = map {
                    if !(p > 0.0 && p.is_finite()) {
                        return Err(invalid("critical map exponent > 0"));
                    }
                }
            }
        }
        if matches!(self.sigma, SigmaPolicy::TwoType { .. })
            && !matches!(self.matching, MatchingModel::TwoType { .. })
        {
            return Err(invalid("two-type σ policy needs two-type matching"));
        }
        let b = self.behaviors;
        if !fraction_ok(b.random_scoring) || !fraction_ok(b.bias_scoring) {
            return Err(invalid("behaviour fractions in [0, 1]"));
        }
        if b.random_scoring + b.bias_scoring > 1.0 + 1e-12 {
            return Err(invalid("behaviour fractions sum ≤ 1"));
        }
        if self.metrics.iter().any(|&i| i < 1 || i > self.papers) {
            return Err(invalid("metrics: 1 ≤ i ≤ N"));
        }
        Ok(())
    }

    /// Qualities fixed by the scenario, if any.
    pub fn fixed_qualities(&self) -> Result<Option<QualityVector>, ModelError> {
        match &self.quality {
            QualityModel::Regime(_) => Ok(None),
            QualityModel::LinearGrid => linear_quality_grid(self.papers, self.max_score).map(Some),
            QualityModel::Custom(values) => QualityVector::new(values.clone(), self.max_score).map(Some),
        }
    }

    fn check_feasibility(&self) -> Result<(), EngineError> {
        let m = self.max_score;
        let qualities: Vec<f64> = match self.fixed_qualities()? {
            Some(q) => q.into_inner(),
            // a dense sweep of (1, m), including points next to every integer
            None => {
                let steps = 200 * (m - 1);
                let mut grid: Vec<f64> = (1..steps)
                    .map(|j| 1.0 + f64::from(m - 1) * f64::from(j) / f64::from(steps))
                    .collect();
                for l in 1..m {
                    let l = f64::from(l);
                    if l > 1.0 {
                        grid.push(l - 1e-9);
                    }
                    grid.push(l + 1e-9);
                }
                grid
            }
        };
        let mut pmf: Option<ScorePmf> = None;
        for sigma in self.sigma.sigma_grid() {
            for &q in &qualities {
                match pmf.as_mut() {
                    Some(p) => p.rebuild(q, sigma)?,
                    None => pmf = Some(ScorePmf::new(q, sigma, m)?),
                }
            }
        }
        Ok(())
    }
}
