//! Review allocation strategies.
//!
//! The two-round strategy spends `⌊n/2⌋` reviews on every paper, drops the
//! worse half using the scenario's own voting and tie-breaking rules, and
//! gives each survivor `2⌈n/2⌉` further reviews. The final decision
//! aggregates all of a survivor's reviews from both rounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ReviewPolicy, ScenarioConfig};
use crate::engine::{run_with, PaperReviews, ReviewModel, RunOptions};
use crate::error::EngineError;
use crate::rules::{select_top_k, AggregateScore};

pub type ReviewPlan = ReviewPolicy;

impl ReviewPolicy {
    /// Reviews every paper gets before any elimination.
    pub fn round1_reviews(&self) -> u32 {
        match *self {
            ReviewPolicy::Homogeneous(n) => n,
            ReviewPolicy::HeterogeneousTwoRound(n) => n / 2,
        }
    }

    /// Extra reviews per surviving paper; zero for the homogeneous plan.
    pub fn round2_reviews(&self) -> u32 {
        match *self {
            ReviewPolicy::Homogeneous(_) => 0,
            ReviewPolicy::HeterogeneousTwoRound(n) => 2 * n.div_ceil(2),
        }
    }

    /// Papers still in play after the first round.
    pub fn survivors(&self, papers: usize) -> usize {
        match *self {
            ReviewPolicy::Homogeneous(_) => papers,
            ReviewPolicy::HeterogeneousTwoRound(_) => papers.div_ceil(2),
        }
    }
}

/// Total number of reviews `W = Σ n_i`.
pub fn workload(plan: ReviewPlan, papers: usize) -> u64 {
    let papers_u = papers as u64;
    match plan {
        ReviewPolicy::Homogeneous(n) => papers_u * u64::from(n),
        ReviewPolicy::HeterogeneousTwoRound(_) => {
            papers_u * u64::from(plan.round1_reviews())
                + plan.survivors(papers) as u64 * u64::from(plan.round2_reviews())
        }
    }
}

/// Draws `reviews_per_paper` fresh reviews for each paper in `papers`,
/// appending them to what the paper already has.
pub fn run_round<R: Rng + ?Sized>(
    reviews_per_paper: u32,
    papers: &[usize],
    qualities: &[f64],
    model: &mut ReviewModel,
    reviews: &mut [PaperReviews],
    rng: &mut R,
) -> Result<(), EngineError> {
    model.add_reviews(reviews_per_paper, papers, qualities, reviews, rng)
}

/// Accepted papers (ascending) after both rounds of the two-round plan.
pub fn two_round_selection<R: Rng + ?Sized>(
    model: &mut ReviewModel,
    n: u32,
    papers: &[usize],
    qualities: &[f64],
    reviews: &mut [PaperReviews],
    aggregates: &mut Vec<AggregateScore>,
    rng: &mut R,
) -> Result<Vec<usize>, EngineError> {
    let plan = ReviewPolicy::HeterogeneousTwoRound(n);
    let (accept, tiebreak) = (model.config().accept, model.config().tiebreak);

    run_round(plan.round1_reviews(), papers, qualities, model, reviews, rng)?;
    model.aggregate(papers, reviews, aggregates)?;
    let survivors: Vec<usize> = select_top_k(aggregates, plan.survivors(papers.len()), tiebreak, rng)
        .into_iter()
        .map(|local| papers[local])
        .collect();

    run_round(plan.round2_reviews(), &survivors, qualities, model, reviews, rng)?;
    model.aggregate(&survivors, reviews, aggregates)?;
    let mut accepted: Vec<usize> = select_top_k(aggregates, accept, tiebreak, rng)
        .into_iter()
        .map(|local| survivors[local])
        .collect();
    accepted.sort_unstable();
    Ok(accepted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementEntry {
    pub top: usize,
    pub baseline_mean: f64,
    pub baseline_stderr: f64,
    pub candidate_mean: f64,
    pub candidate_stderr: f64,
    /// `E[I_i | candidate] - E[I_i | baseline]`.
    pub delta: f64,
    /// `delta / E[I_i | baseline]`, absent when the baseline mean is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub rounds: u64,
    pub baseline: ReviewPlan,
    pub candidate: ReviewPlan,
    /// `(W_baseline, W_candidate)`.
    pub workloads: (u64, u64),
    pub entries: Vec<ImprovementEntry>,
}

impl ImprovementReport {
    pub fn entry(&self, top: usize) -> Option<&ImprovementEntry> {
        self.entries.iter().find(|e| e.top == top)
    }
}

/// Runs `config` under both plans with the same seed, so that both arms see
/// the same qualities in every round.
pub fn compare_plans(
    config: &ScenarioConfig,
    baseline: ReviewPlan,
    candidate: ReviewPlan,
    rounds: u64,
    options: RunOptions,
) -> Result<ImprovementReport, EngineError> {
    let mut base_cfg = config.clone();
    base_cfg.reviews = baseline;
    let mut cand_cfg = config.clone();
    cand_cfg.reviews = candidate;
    let base = run_with(&base_cfg, rounds, options)?;
    let cand = run_with(&cand_cfg, rounds, options)?;

    let entries = base
        .metrics
        .iter()
        .zip(&cand.metrics)
        .map(|(b, c)| {
            let delta = c.mean() - b.mean();
            ImprovementEntry {
                top: b.top,
                baseline_mean: b.mean(),
                baseline_stderr: b.mean_stderr(),
                candidate_mean: c.mean(),
                candidate_stderr: c.mean_stderr(),
                delta,
                ratio: (b.mean() > 0.0).then(|| delta / b.mean()),
            }
        })
        .collect();
    Ok(ImprovementReport {
        rounds,
        baseline,
        candidate,
        workloads: (workload(baseline, config.papers), workload(candidate, config.papers)),
        entries,
    })
}

/// Two-round plan against the homogeneous plan with the same `n`.
pub fn compare_strategies(
    config: &ScenarioConfig,
    n: u32,
    rounds: u64,
    options: RunOptions,
) -> Result<ImprovementReport, EngineError> {
    if n < 2 {
        return Err(EngineError::Validation("two-round reviewing needs n ≥ 2".into()));
    }
    compare_plans(
        config,
        ReviewPolicy::Homogeneous(n),
        ReviewPolicy::HeterogeneousTwoRound(n),
        rounds,
        options,
    )
}
