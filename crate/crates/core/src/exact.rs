//! Exact accuracy distribution for the special case: every paper gets `n`
//! reviews from identical reviewers, scores are averaged and ties at the
//! acceptance boundary are broken uniformly at random.
//!
//! Paper `0` is the best paper, paper `1` the second best and so on, so the
//! truly-best `k` set is always `{0, .., k-1}`.

use crate::error::ExactError;
use crate::quality::linear_quality_grid;
use crate::rules::{aggregate_scores, VotingRule};
use crate::score::ScorePmf;

/// Largest number of papers accepted without an explicit override.
pub const DEFAULT_SIZE_LIMIT: usize = 12;

/// Elementary steps the enumeration oracle may spend by default.
pub const DEFAULT_BRUTE_FORCE_BUDGET: f64 = 1e8;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Distribution of the total of `n` independent scores; the average score is
/// the total divided by `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AvgScorePmf {
    reviews: u32,
    max_score: u32,
    // index t holds Pr[total = n + t]
    mass: Vec<f64>,
    cdf: Vec<f64>,
    sf: Vec<f64>,
}

impl AvgScorePmf {
    pub fn new(score_pmf: &ScorePmf, reviews: u32) -> Result<Self, ExactError> {
        if reviews == 0 {
            return Err(ExactError::InvalidInstance("need at least one review".into()));
        }
        let single = score_pmf.probs();
        let mut mass = single.to_vec();
        for _ in 1..reviews {
            let mut next = vec![0.0; mass.len() + single.len() - 1];
            for (a, &pa) in mass.iter().enumerate() {
                for (b, &pb) in single.iter().enumerate() {
                    next[a + b] += pa * pb;
                }
            }
            mass = next;
        }
        let mut cdf = Vec::with_capacity(mass.len());
        let mut acc = 0.0;
        for &p in &mass {
            acc += p;
            cdf.push(acc);
        }
        let mut sf = vec![0.0; mass.len()];
        let mut acc = 0.0;
        for t in (0..mass.len()).rev() {
            acc += mass[t];
            sf[t] = acc;
        }
        Ok(Self {
            reviews,
            max_score: score_pmf.max_score(),
            mass,
            cdf,
            sf,
        })
    }

    pub fn reviews(&self) -> u32 {
        self.reviews
    }

    pub fn min_total(&self) -> u32 {
        self.reviews
    }

    pub fn max_total(&self) -> u32 {
        self.reviews * self.max_score
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    fn offset(&self, total: u32) -> Option<usize> {
        if total < self.min_total() || total > self.max_total() {
            None
        } else {
            Some((total - self.min_total()) as usize)
        }
    }

    /// `Pr[total = ℓ]`, i.e. `Pr[γ = ℓ/n]`.
    pub fn prob(&self, total: u32) -> f64 {
        self.offset(total).map_or(0.0, |t| self.mass[t])
    }

    /// `Pr[total <= ℓ]`, the prefix sums of [`AvgScorePmf::prob`].
    pub fn cdf(&self, total: i64) -> f64 {
        if total < i64::from(self.min_total()) {
            0.0
        } else if total >= i64::from(self.max_total()) {
            *self.cdf.last().unwrap()
        } else {
            self.cdf[(total - i64::from(self.min_total())) as usize]
        }
    }

    /// `Pr[total >= ℓ]`, summed from the top to keep tail precision.
    pub fn at_least(&self, total: i64) -> f64 {
        if total <= i64::from(self.min_total()) {
            self.sf[0]
        } else if total > i64::from(self.max_total()) {
            0.0
        } else {
            self.sf[(total - i64::from(self.min_total())) as usize]
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactInstance {
    accept: usize,
    reviews: u32,
    max_score: u32,
    score_pmfs: Vec<ScorePmf>,
    totals: Vec<AvgScorePmf>,
    size_limit: usize,
}

impl ExactInstance {
    /// Qualities on the linear grid, every review drawn with the same `sigma`.
    pub fn special_case(
        papers: usize,
        accept: usize,
        reviews: u32,
        max_score: u32,
        sigma: f64,
    ) -> Result<Self, ExactError> {
        let grid = linear_quality_grid(papers, max_score)?;
        let pmfs = grid
            .values()
            .iter()
            .map(|&q| ScorePmf::new(q, sigma, max_score))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_score_pmfs(accept, reviews, pmfs)
    }

    /// Arbitrary per-paper score laws, listed from best to worst paper.
    pub fn from_score_pmfs(
        accept: usize,
        reviews: u32,
        score_pmfs: Vec<ScorePmf>,
    ) -> Result<Self, ExactError> {
        let papers = score_pmfs.len();
        if accept == 0 || accept > papers {
            return Err(ExactError::InvalidInstance(format!(
                "need 1 <= k <= N, got k = {accept}, N = {papers}"
            )));
        }
        let max_score = score_pmfs[0].max_score();
        if score_pmfs.iter().any(|p| p.max_score() != max_score) {
            return Err(ExactError::InvalidInstance(
                "all score laws must share the same ceiling".into(),
            ));
        }
        let totals = score_pmfs
            .iter()
            .map(|p| AvgScorePmf::new(p, reviews))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            accept,
            reviews,
            max_score,
            score_pmfs,
            totals,
            size_limit: DEFAULT_SIZE_LIMIT,
        })
    }

    pub fn with_size_limit(mut self, limit: usize) -> Self {
        self.size_limit = limit;
        self
    }

    pub fn papers(&self) -> usize {
        self.score_pmfs.len()
    }

    pub fn accept(&self) -> usize {
        self.accept
    }

    pub fn reviews(&self) -> u32 {
        self.reviews
    }

    pub fn max_score(&self) -> u32 {
        self.max_score
    }

    pub fn score_pmfs(&self) -> &[ScorePmf] {
        &self.score_pmfs
    }

    pub fn totals(&self) -> &[AvgScorePmf] {
        &self.totals
    }

    fn check_size(&self) -> Result<(), ExactError> {
        if self.papers() > self.size_limit {
            Err(ExactError::InstanceTooLarge {
                papers: self.papers(),
                limit: self.size_limit,
            })
        } else {
            Ok(())
        }
    }

    /// Probability that the accepted set is exactly `set`.
    ///
    /// Conditioning on the lowest total `ℓ` inside `set`: with `F` the members
    /// of `set` at `ℓ` and `G` the outsiders at `ℓ`, the set wins when all
    /// other members are above `ℓ`, all other outsiders below, and the random
    /// tie-break hands the `|F|` remaining slots to `F`, which happens with
    /// probability `1 / C(|F|+|G|, |F|)`. `G = ∅` is the strict-dominance
    /// term. Sums over `F` and `G` depend only on their sizes, so they are
    /// collapsed by a product expansion instead of enumerating subsets.
    pub fn prob_accept_set(&self, set: &[usize]) -> Result<f64, ExactError> {
        self.check_size()?;
        let n = self.papers();
        if set.len() != self.accept {
            return Err(ExactError::InvalidInstance(format!(
                "target set has {} papers, expected {}",
                set.len(),
                self.accept
            )));
        }
        let mut inside = vec![false; n];
        for &i in set {
            if i >= n || inside[i] {
                return Err(ExactError::InvalidInstance(format!(
                    "target set {set:?} is not a set of paper indices below {n}"
                )));
            }
            inside[i] = true;
        }
        Ok(self.set_probability(&inside))
    }

    fn set_probability(&self, inside: &[bool]) -> f64 {
        let k = self.accept;
        let rest = self.papers() - k;
        if rest == 0 {
            return 1.0;
        }
        let binom = binomial_table(self.papers());
        let lo = i64::from(self.reviews);
        let hi = i64::from(self.reviews * self.max_score);

        let mut total = CompensatedSum::default();
        let mut members = vec![0.0; k + 1];
        let mut outsiders = vec![0.0; rest + 1];
        for level in lo..=hi {
            // members[a]: exactly a members at `level`, the others above it
            // outsiders[b]: exactly b outsiders at `level`, the others below it
            members.iter_mut().for_each(|x| *x = 0.0);
            outsiders.iter_mut().for_each(|x| *x = 0.0);
            members[0] = 1.0;
            outsiders[0] = 1.0;
            let (mut a_max, mut b_max) = (0, 0);
            for (law, &is_member) in self.totals.iter().zip(inside) {
                let eq = law.prob(level as u32);
                if is_member {
                    expand(&mut members, &mut a_max, eq, law.at_least(level + 1));
                } else {
                    expand(&mut outsiders, &mut b_max, eq, law.cdf(level - 1));
                }
            }
            for a in 1..=k {
                if members[a] == 0.0 {
                    continue;
                }
                total.add(members[a] * outsiders[0]);
                for b in 1..=rest {
                    if outsiders[b] != 0.0 {
                        total.add(members[a] * outsiders[b] / binom[a + b][a]);
                    }
                }
            }
        }
        total.value()
    }

    /// Every `k`-subset with its acceptance probability, in lexicographic order.
    pub fn set_probabilities(&self) -> Result<Vec<(Vec<usize>, f64)>, ExactError> {
        self.check_size()?;
        let n = self.papers();
        let mut out = Vec::new();
        let mut inside = vec![false; n];
        for_each_combination(n, self.accept, |set| {
            inside.iter_mut().for_each(|x| *x = false);
            for &i in set {
                inside[i] = true;
            }
            out.push((set.to_vec(), self.set_probability(&inside)));
        });
        Ok(out)
    }

    /// pmf of `I(k)` over `0..=k`.
    pub fn intersection_pmf_exact(&self) -> Result<Vec<f64>, ExactError> {
        self.intersection_pmf_top(self.accept)
    }

    /// pmf of `|top-i ∩ accepted|` over `0..=min(i, k)`.
    pub fn intersection_pmf_top(&self, top: usize) -> Result<Vec<f64>, ExactError> {
        if top == 0 || top > self.papers() {
            return Err(ExactError::InvalidInstance(format!(
                "metric index {top} outside 1..={}",
                self.papers()
            )));
        }
        let mut sums = vec![CompensatedSum::default(); top.min(self.accept) + 1];
        for (set, p) in self.set_probabilities()? {
            sums[set.iter().filter(|&&i| i < top).count()].add(p);
        }
        Ok(sums.iter().map(CompensatedSum::value).collect())
    }

    /// Result of enumerating every score assignment.
    pub fn brute_force_oracle(&self) -> Result<BruteForce, ExactError> {
        self.brute_force_with_budget(DEFAULT_BRUTE_FORCE_BUDGET)
    }

    pub fn brute_force_with_budget(&self, budget: f64) -> Result<BruteForce, ExactError> {
        let n = self.papers();
        let r = self.reviews as usize;
        let m = self.max_score as usize;
        let slots = n * r;
        let steps = (m as f64).powi(slots as i32) * slots as f64;
        if steps > budget {
            return Err(ExactError::BudgetExceeded { steps, budget });
        }

        let k = self.accept;
        let binom = binomial_table(n);
        let mut pmf = vec![CompensatedSum::default(); k + 1];
        let mut sets = std::collections::BTreeMap::<Vec<usize>, CompensatedSum>::new();
        let mut digits = vec![0usize; slots];
        let mut scores = vec![0u32; r];
        let mut gammas = Vec::with_capacity(n);
        loop {
            let mut weight = 1.0;
            gammas.clear();
            for paper in 0..n {
                let probs = self.score_pmfs[paper].probs();
                for j in 0..r {
                    let d = digits[paper * r + j];
                    weight *= probs[d];
                    scores[j] = d as u32 + 1;
                }
                let agg = aggregate_scores(VotingRule::AverageScore, &scores, &[])
                    .expect("average accepts any non-empty review set");
                gammas.push(agg.gamma);
            }
            if weight > 0.0 {
                let mut sorted = gammas.clone();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                let threshold = sorted[k - 1];
                let above: Vec<usize> = (0..n).filter(|&i| gammas[i] > threshold).collect();
                let tied: Vec<usize> = (0..n).filter(|&i| gammas[i] == threshold).collect();
                let need = k - above.len();
                let choices = binom[tied.len()][need];
                for_each_combination(tied.len(), need, |pick| {
                    let mut set: Vec<usize> = above.clone();
                    set.extend(pick.iter().map(|&t| tied[t]));
                    set.sort_unstable();
                    let p = weight / choices;
                    pmf[set.iter().filter(|&&i| i < k).count()].add(p);
                    sets.entry(set).or_default().add(p);
                });
            }

            // odometer over all score assignments
            let mut pos = 0;
            loop {
                if pos == slots {
                    return Ok(BruteForce {
                        pmf: pmf.iter().map(CompensatedSum::value).collect(),
                        set_probabilities: sets.into_iter().map(|(s, p)| (s, p.value())).collect(),
                    });
                }
                digits[pos] += 1;
                if digits[pos] < m {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    /// pmf of `I(k)`.
    pub pmf: Vec<f64>,
    /// Accepted sets with nonzero probability, in lexicographic order.
    pub set_probabilities: Vec<(Vec<usize>, f64)>,
}

/// Multiplies the polynomial `poly` (in the size variable) by `other + eq·x`.
fn expand(poly: &mut [f64], degree: &mut usize, eq: f64, other: f64) {
    let top = (*degree + 1).min(poly.len() - 1);
    for a in (1..=top).rev() {
        poly[a] = poly[a] * other + poly[a - 1] * eq;
    }
    poly[0] *= other;
    *degree = top;
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        table[i][0] = 1.0;
        for j in 1..=i {
            table[i][j] = table[i - 1][j - 1] + if j < i { table[i - 1][j] } else { 0.0 };
        }
    }
    table
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Mean and variance of a pmf over `0..len`.
pub fn pmf_moments(pmf: &[f64]) -> (f64, f64) {
    let mean: f64 = pmf.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
    let second: f64 = pmf.iter().enumerate().map(|(i, p)| (i * i) as f64 * p).sum();
    (mean, (second - mean * mean).max(0.0))
}
