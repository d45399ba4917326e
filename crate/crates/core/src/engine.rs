//! Monte Carlo estimation of the accuracy distribution.
//!
//! Every round owns an independent random stream derived from the scenario
//! seed and the round index, so a run over `0..K` gives the same tallies no
//! matter how the rounds are split between workers.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{MatchingModel, QualityModel, ReviewPolicy, ScenarioConfig};
use crate::error::EngineError;
use crate::quality::{QualityDistribution, SelectivityRegime};
use crate::report::AccuracyReport;
use crate::rules::{aggregate_scores, select_top_k, AggregateScore};
use crate::score::{
    apply_behavior, matching_to_expertise_critical, sigma_of_critical, Behavior, CriticalMap,
    ScorePmf,
};
use crate::strategy;

/// Rounds handled by one unit of parallel work.
pub const CHUNK_ROUNDS: u64 = 1024;

/// Environment variable that overrides the default worker count.
pub const WORKERS_ENV: &str = "REVIEWSIM_WORKERS";

/// Random stream of one round.
pub fn round_rng(seed: u64, round: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round);
    rng
}

/// Reviews collected so far for one paper.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PaperReviews {
    pub scores: Vec<u32>,
    pub expertise: Vec<u32>,
}

impl PaperReviews {
    pub fn clear(&mut self) {
        self.scores.clear();
        self.expertise.clear();
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// How one review of a paper of known quality is generated.
#[derive(Debug, Clone)]
pub struct ReviewModel {
    config: ScenarioConfig,
    // reused between reviews; rebuilt only when (Q, σ) changes
    pmf: ScorePmf,
    // per-paper laws when both qualities and σ are fixed by the scenario
    fixed: Option<Vec<ScorePmf>>,
}

impl ReviewModel {
    pub fn new(config: &ScenarioConfig) -> Result<Self, EngineError> {
        let mid = 0.5 * (1.0 + f64::from(config.max_score));
        let fixed = match (config.fixed_qualities()?, config.matching) {
            (Some(qualities), MatchingModel::None { critical }) => {
                let sigma = sigma_of_critical(critical, config.sigma, None)?;
                let pmfs = qualities
                    .values()
                    .iter()
                    .map(|&q| ScorePmf::new(q, sigma, config.max_score))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(pmfs)
            }
            _ => None,
        };
        Ok(Self {
            config: config.clone(),
            pmf: ScorePmf::new(mid, 1.0, config.max_score)?,
            fixed,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    fn draw_behavior<R: Rng + ?Sized>(&self, rng: &mut R) -> Behavior {
        let mix = self.config.behaviors;
        if mix.is_honest() {
            return Behavior::Honest;
        }
        let u: f64 = rng.random();
        if u < mix.random_scoring {
            Behavior::RandomScoring
        } else if u < mix.random_scoring + mix.bias_scoring {
            Behavior::BiasScoring
        } else {
            Behavior::Honest
        }
    }

    /// One `(score, expertise)` pair for paper `paper` of quality `quality`.
    pub fn review<R: Rng + ?Sized>(
        &mut self,
        paper: usize,
        quality: f64,
        rng: &mut R,
    ) -> Result<(u32, u32), EngineError> {
        let behavior = self.draw_behavior(rng);
        let (expertise, critical, same_type) = match self.config.matching {
            MatchingModel::None { critical } => (1, critical, None),
            MatchingModel::TwoType { fraction } => {
                let same = rng.random::<f64>() < fraction;
                let mu = if same { 1.0 } else { 0.0 };
                let (e, c) = matching_to_expertise_critical(mu, 2, CriticalMap::Identity);
                (e, c, Some(same))
            }
            MatchingModel::ManyType { levels, map } => {
                let mu: f64 = rng.random();
                let (e, c) = matching_to_expertise_critical(mu, levels, map);
                (e, c, None)
            }
        };
        let honest = match &self.fixed {
            Some(pmfs) => pmfs[paper].sample(rng),
            None => {
                let sigma = sigma_of_critical(critical, self.config.sigma, same_type)?;
                if self.pmf.quality() != quality || self.pmf.sigma() != sigma {
                    self.pmf.rebuild(quality, sigma)?;
                }
                self.pmf.sample(rng)
            }
        };
        let score = apply_behavior(behavior, honest, self.config.max_score, rng);
        Ok((score, expertise))
    }

    /// Appends `count` fresh reviews for every paper in `papers`.
    pub fn add_reviews<R: Rng + ?Sized>(
        &mut self,
        count: u32,
        papers: &[usize],
        qualities: &[f64],
        reviews: &mut [PaperReviews],
        rng: &mut R,
    ) -> Result<(), EngineError> {
        for &p in papers {
            for _ in 0..count {
                let (s, e) = self.review(p, qualities[p], rng)?;
                reviews[p].scores.push(s);
                reviews[p].expertise.push(e);
            }
        }
        Ok(())
    }

    /// Combined scores of `papers` under the scenario's voting rule.
    pub fn aggregate(
        &self,
        papers: &[usize],
        reviews: &[PaperReviews],
        out: &mut Vec<AggregateScore>,
    ) -> Result<(), EngineError> {
        out.clear();
        for &p in papers {
            out.push(aggregate_scores(self.config.voting, &reviews[p].scores, &reviews[p].expertise)?);
        }
        Ok(())
    }
}

/// Per-worker state reused across rounds.
struct Simulator {
    model: ReviewModel,
    regime: Option<QualityDistribution>,
    qualities: Vec<f64>,
    // rank[p] = position of paper p in the true quality order (0 = best),
    // tracked only for the best `ranked` papers; usize::MAX for the rest
    rank: Vec<usize>,
    ranked: usize,
    order: Vec<usize>,
    all_papers: Vec<usize>,
    reviews: Vec<PaperReviews>,
    aggregates: Vec<AggregateScore>,
    metric_list: Vec<usize>,
}

impl Simulator {
    fn new(config: &ScenarioConfig) -> Result<Self, EngineError> {
        let papers = config.papers;
        let mut sim = Self {
            model: ReviewModel::new(config)?,
            regime: None,
            qualities: vec![0.0; papers],
            rank: vec![usize::MAX; papers],
            ranked: config.metric_list().last().copied().unwrap_or(papers),
            order: (0..papers).collect(),
            all_papers: (0..papers).collect(),
            reviews: vec![PaperReviews::default(); papers],
            aggregates: Vec::with_capacity(papers),
            metric_list: config.metric_list(),
        };
        match &config.quality {
            QualityModel::Regime(kind) => {
                sim.regime = Some(SelectivityRegime::new(*kind, config.max_score)?.distribution());
            }
            _ => {
                let fixed = config.fixed_qualities()?.expect("grid or custom qualities");
                sim.qualities.copy_from_slice(fixed.values());
                sim.rank_papers();
            }
        }
        Ok(sim)
    }

    /// Orders papers by quality (higher first, lower index on exact ties)
    /// far enough to answer "is p among the best i" for every metric.
    fn rank_papers(&mut self) {
        let t = self.ranked;
        for &p in &self.order[..t] {
            self.rank[p] = usize::MAX;
        }
        let q = &self.qualities;
        let cmp = |a: &usize, b: &usize| q[*b].total_cmp(&q[*a]).then(a.cmp(b));
        if t < self.order.len() {
            self.order.select_nth_unstable_by(t - 1, cmp);
        }
        self.order[..t].sort_unstable_by(cmp);
        for (pos, &p) in self.order[..t].iter().enumerate() {
            self.rank[p] = pos;
        }
    }

    fn round(&mut self, round: u64, report: &mut AccuracyReport) -> Result<(), EngineError> {
        let (seed, accept, policy, tiebreak) = {
            let c = self.model.config();
            (c.seed, c.accept, c.reviews, c.tiebreak)
        };
        let mut rng = round_rng(seed, round);
        if let Some(dist) = &self.regime {
            for q in self.qualities.iter_mut() {
                *q = dist.sample(&mut rng);
            }
            self.rank_papers();
        }
        for r in self.reviews.iter_mut() {
            r.clear();
        }

        let accepted = match policy {
            ReviewPolicy::Homogeneous(n) => {
                self.model
                    .add_reviews(n, &self.all_papers, &self.qualities, &mut self.reviews, &mut rng)?;
                self.model.aggregate(&self.all_papers, &self.reviews, &mut self.aggregates)?;
                select_top_k(&self.aggregates, accept, tiebreak, &mut rng)
            }
            ReviewPolicy::HeterogeneousTwoRound(n) => strategy::two_round_selection(
                &mut self.model,
                n,
                &self.all_papers,
                &self.qualities,
                &mut self.reviews,
                &mut self.aggregates,
                &mut rng,
            )?,
        };

        for (tally, &top) in report.metrics.iter_mut().zip(&self.metric_list) {
            let hits = accepted.iter().filter(|&&p| self.rank[p] < top).count();
            tally.counts[hits] += 1;
        }
        report.rounds += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` reads the environment override, then uses all
    /// available cores.
    pub workers: Option<usize>,
    /// Print progress to standard error.
    pub progress: bool,
}

fn check_rounds(rounds: u64) -> Result<(), EngineError> {
    if rounds < 1 {
        Err(EngineError::Validation("K ≥ 1".into()))
    } else {
        Ok(())
    }
}

fn simulate_range(config: &ScenarioConfig, start: u64, end: u64) -> Result<AccuracyReport, EngineError> {
    let mut sim = Simulator::new(config)?;
    let mut report = AccuracyReport::empty(config.accept, &sim.metric_list, config.seed, config.digest());
    for round in start..end {
        sim.round(round, &mut report)?;
    }
    Ok(report)
}

/// Runs rounds `start..end` on the calling thread.
pub fn run_range(config: &ScenarioConfig, start: u64, end: u64) -> Result<AccuracyReport, EngineError> {
    config.validate()?;
    check_rounds(end.saturating_sub(start))?;
    simulate_range(config, start, end)
}

/// Runs rounds `0..rounds` with the default worker count.
pub fn run(config: &ScenarioConfig, rounds: u64) -> Result<AccuracyReport, EngineError> {
    run_with(config, rounds, RunOptions::default())
}

/// Runs rounds `0..rounds` on exactly `workers` threads.
pub fn run_parallel(config: &ScenarioConfig, rounds: u64, workers: usize) -> Result<AccuracyReport, EngineError> {
    run_with(
        config,
        rounds,
        RunOptions {
            workers: Some(workers),
            progress: false,
        },
    )
}

pub fn resolve_workers(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&w| w >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_with(config: &ScenarioConfig, rounds: u64, options: RunOptions) -> Result<AccuracyReport, EngineError> {
    config.validate()?;
    check_rounds(rounds)?;
    let workers = resolve_workers(options.workers);
    let chunks: Vec<(u64, u64)> = (0..rounds.div_ceil(CHUNK_ROUNDS))
        .map(|c| (c * CHUNK_ROUNDS, ((c + 1) * CHUNK_ROUNDS).min(rounds)))
        .collect();

    if workers == 1 {
        let mut sim = Simulator::new(config)?;
        let mut report = AccuracyReport::empty(config.accept, &sim.metric_list, config.seed, config.digest());
        let progress = Progress::new(options.progress, rounds);
        for &(start, end) in &chunks {
            for round in start..end {
                sim.round(round, &mut report)?;
            }
            progress.advance(end - start);
        }
        return Ok(report);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| EngineError::Validation(format!("worker pool: {e}")))?;
    let progress = Progress::new(options.progress, rounds);
    let partials: Vec<AccuracyReport> = pool.install(|| {
        chunks
            .par_iter()
            .map_init(
                || Simulator::new(config),
                |sim, &(start, end)| {
                    let sim = sim.as_mut().map_err(|e| e.clone())?;
                    let mut report =
                        AccuracyReport::empty(config.accept, &sim.metric_list, config.seed, config.digest());
                    for round in start..end {
                        sim.round(round, &mut report)?;
                    }
                    progress.advance(end - start);
                    Ok(report)
                },
            )
            .collect::<Result<Vec<_>, EngineError>>()
    })?;
    crate::report::merge_reports(&partials)
}

struct Progress {
    enabled: bool,
    total: u64,
    done: AtomicU64,
}

impl Progress {
    fn new(enabled: bool, total: u64) -> Self {
        Self {
            enabled,
            total,
            done: AtomicU64::new(0),
        }
    }

    fn advance(&self, rounds: u64) {
        if !self.enabled {
            return;
        }
        let before = self.done.fetch_add(rounds, Ordering::Relaxed);
        let after = before + rounds;
        let step = (self.total / 10).max(1);
        if before / step != after / step || after == self.total {
            eprintln!("  {after}/{} rounds ({:.0}%)", self.total, 100.0 * after as f64 / self.total as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BehaviorMix, QualityModel};
    use crate::quality::Selectivity;
    use crate::rules::{TieBreakRule, VotingRule};
    use crate::score::SigmaPolicy;

    fn small(seed: u64) -> ScenarioConfig {
        let mut c = ScenarioConfig::basic(
            20,
            4,
            3,
            QualityModel::Regime(Selectivity::Medium),
            VotingRule::AverageScore,
            TieBreakRule::LeastVariance,
            seed,
        );
        c.metrics = vec![1, 2];
        c
    }

    #[test]
    fn tallies_are_consistent() {
        let r = run_range(&small(3), 0, 500).unwrap();
        assert_eq!(r.rounds, 500);
        for m in &r.metrics {
            assert_eq!(m.rounds(), 500);
            assert!(m.mean() >= 0.0 && m.mean() <= m.top as f64);
            assert!(m.variance() >= 0.0);
        }
        assert_eq!(r.metric(1).unwrap().counts.len(), 2);
    }

    #[test]
    fn ranges_merge_into_full_run() {
        let c = small(5);
        let whole = run_range(&c, 0, 3000).unwrap();
        let a = run_range(&c, 0, 1234).unwrap();
        let b = run_range(&c, 1234, 3000).unwrap();
        assert_eq!(crate::report::merge_reports(&[a, b]).unwrap(), whole);
        assert_eq!(run_parallel(&c, 3000, 3).unwrap(), whole);
    }

    #[test]
    fn near_noiseless_reviews_recover_ranking() {
        // integral grid qualities 4, 3, 2 keep the tiny-σ model feasible
        let mut c = ScenarioConfig::basic(
            3,
            1,
            3,
            QualityModel::LinearGrid,
            VotingRule::AverageScore,
            TieBreakRule::RandomPick,
            1,
        );
        c.sigma = SigmaPolicy::Constant(0.01);
        let r = run_range(&c, 0, 10_000).unwrap();
        assert!(r.pmf()[1] >= 0.999);
    }

    #[test]
    fn behaviours_and_matching_run() {
        let mut c = small(8);
        c.behaviors = BehaviorMix {
            random_scoring: 0.2,
            bias_scoring: 0.1,
        };
        c.matching = MatchingModel::TwoType { fraction: 0.5 };
        c.sigma = SigmaPolicy::TwoType {
            matched: 0.5,
            mismatched: 2.0,
        };
        c.voting = VotingRule::WeightedAverage;
        run_range(&c, 0, 200).unwrap();

        c.matching = MatchingModel::ManyType {
            levels: 3,
            map: CriticalMap::Identity,
        };
        c.sigma = SigmaPolicy::LinearInCritical { base: 0.5, slope: 1.5 };
        run_range(&c, 0, 200).unwrap();
    }

    #[test]
    fn rejects_zero_rounds() {
        assert!(matches!(run_range(&small(1), 5, 5), Err(EngineError::Validation(_))));
    }
}
