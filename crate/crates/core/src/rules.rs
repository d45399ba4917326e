//! Voting rules and tie-breaking.
//!
//! Combined scores are exact rationals so that ties between papers are
//! detected exactly; floating point would split mathematically equal
//! averages such as `4/6` and `2/3`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::RuleError;

pub type Rational = Ratio<i64>;

/// Scores of one paper together with the expertise declared on each review.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewSet {
    scores: Vec<u32>,
    expertise: Vec<u32>,
}

impl ReviewSet {
    pub fn new(scores: Vec<u32>, expertise: Vec<u32>) -> Result<Self, RuleError> {
        if scores.is_empty() {
            return Err(RuleError::InsufficientReviews {
                rule: "any voting rule",
                needed: 1,
                got: 0,
            });
        }
        if scores.len() != expertise.len() {
            return Err(RuleError::MalformedReviews(format!(
                "{} scores but {} expertise levels",
                scores.len(),
                expertise.len()
            )));
        }
        if scores.contains(&0) || expertise.contains(&0) {
            return Err(RuleError::MalformedReviews(
                "scores and expertise levels start at 1".into(),
            ));
        }
        Ok(Self { scores, expertise })
    }

    /// Reviews that all carry expertise level 1.
    pub fn from_scores(scores: Vec<u32>) -> Result<Self, RuleError> {
        let expertise = vec![1; scores.len()];
        Self::new(scores, expertise)
    }

    pub fn scores(&self) -> &[u32] {
        &self.scores
    }

    pub fn expertise(&self) -> &[u32] {
        &self.expertise
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TiebreakMeta {
    /// Population variance (divisor `n`).
    pub variance: Rational,
    pub max: u32,
    pub min: u32,
    /// Lower median for an even number of reviews.
    pub median: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AggregateScore {
    pub gamma: Rational,
    pub meta: TiebreakMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VotingRule {
    AverageScore,
    EliminateHighLow,
    /// Average minus `eta` for every score equal to 1.
    PunishLow { eta: Rational },
    WeightedAverage,
}

impl VotingRule {
    pub const DEFAULT_PUNISHMENT: (i64, i64) = (1, 2);

    pub fn punish_low_default() -> Self {
        let (n, d) = Self::DEFAULT_PUNISHMENT;
        VotingRule::PunishLow {
            eta: Rational::new(n, d),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            VotingRule::AverageScore => "average",
            VotingRule::EliminateHighLow => "eliminate-high-low",
            VotingRule::PunishLow { .. } => "punish-low",
            VotingRule::WeightedAverage => "weighted-average",
        }
    }

    /// Fewest reviews per paper the rule accepts.
    pub fn min_reviews(&self) -> usize {
        match self {
            VotingRule::EliminateHighLow => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for VotingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VotingRule::PunishLow { eta } if *self != VotingRule::punish_low_default() => {
                write!(f, "punish-low({eta})")
            }
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for VotingRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(VotingRule::AverageScore),
            "eliminate-high-low" => Ok(VotingRule::EliminateHighLow),
            "punish-low" => Ok(VotingRule::punish_low_default()),
            "weighted-average" => Ok(VotingRule::WeightedAverage),
            other => {
                let eta = other
                    .strip_prefix("punish-low(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown voting rule `{other}`"))?;
                let eta: Rational = eta
                    .trim()
                    .parse()
                    .map_err(|_| format!("punishment `{eta}` is not a fraction such as 1/2"))?;
                if eta < Rational::from_integer(0) {
                    return Err(format!("punishment {eta} must be non-negative"));
                }
                Ok(VotingRule::PunishLow { eta })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TieBreakRule {
    RandomPick,
    LeastVariance,
    LargestMaxScore,
    LargestMinScore,
    LargestMedianScore,
}

impl TieBreakRule {
    pub const ALL: [TieBreakRule; 5] = [
        TieBreakRule::RandomPick,
        TieBreakRule::LeastVariance,
        TieBreakRule::LargestMaxScore,
        TieBreakRule::LargestMinScore,
        TieBreakRule::LargestMedianScore,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TieBreakRule::RandomPick => "random",
            TieBreakRule::LeastVariance => "least-variance",
            TieBreakRule::LargestMaxScore => "largest-max",
            TieBreakRule::LargestMinScore => "largest-min",
            TieBreakRule::LargestMedianScore => "largest-median",
        }
    }
}

impl fmt::Display for TieBreakRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TieBreakRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TieBreakRule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown tie-breaking rule `{s}`"))
    }
}

macro_rules! serde_via_str {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(de::Error::custom)
            }
        }
    };
}

serde_via_str!(VotingRule);
serde_via_str!(TieBreakRule);

/// Outcome of comparing two tied papers under a tie-breaking rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    First,
    Second,
    Unordered,
}

impl Preference {
    fn as_ordering(self) -> Ordering {
        match self {
            Preference::First => Ordering::Less,
            Preference::Second => Ordering::Greater,
            Preference::Unordered => Ordering::Equal,
        }
    }
}

pub fn aggregate(rule: VotingRule, reviews: &ReviewSet) -> Result<AggregateScore, RuleError> {
    aggregate_scores(rule, reviews.scores(), reviews.expertise())
}

/// [`aggregate`] over borrowed slices; `expertise` may be empty unless the
/// rule is [`VotingRule::WeightedAverage`].
pub fn aggregate_scores(
    rule: VotingRule,
    scores: &[u32],
    expertise: &[u32],
) -> Result<AggregateScore, RuleError> {
    let n = scores.len();
    if n < rule.min_reviews() {
        return Err(RuleError::InsufficientReviews {
            rule: rule.name(),
            needed: rule.min_reviews(),
            got: n,
        });
    }

    let mut sum = 0i64;
    let mut sum_sq = 0i64;
    let mut max = 0u32;
    let mut min = u32::MAX;
    let mut ones = 0i64;
    for &s in scores {
        let v = i64::from(s);
        sum += v;
        sum_sq += v * v;
        max = max.max(s);
        min = min.min(s);
        if s == 1 {
            ones += 1;
        }
    }
    let count = n as i64;

    let gamma = match rule {
        VotingRule::AverageScore => Rational::new(sum, count),
        VotingRule::EliminateHighLow => {
            Rational::new(sum - i64::from(max) - i64::from(min), count - 2)
        }
        VotingRule::PunishLow { eta } => Rational::new(sum, count) - eta * ones,
        VotingRule::WeightedAverage => {
            if expertise.len() != n {
                return Err(RuleError::MalformedReviews(format!(
                    "{n} scores but {} expertise levels",
                    expertise.len()
                )));
            }
            let weight: i64 = expertise.iter().map(|&e| i64::from(e)).sum();
            if weight <= 0 {
                return Err(RuleError::MalformedReviews(
                    "expertise levels sum to zero".into(),
                ));
            }
            let weighted: i64 = scores
                .iter()
                .zip(expertise)
                .map(|(&s, &e)| i64::from(s) * i64::from(e))
                .sum();
            Rational::new(weighted, weight)
        }
    };

    Ok(AggregateScore {
        gamma,
        meta: TiebreakMeta {
            variance: Rational::new(count * sum_sq - sum * sum, count * count),
            max,
            min,
            median: Rational::from_integer(i64::from(lower_median(scores))),
        },
    })
}

fn lower_median(scores: &[u32]) -> u32 {
    let target = (scores.len() - 1) / 2;
    if scores.len() <= 32 {
        let mut buf = [0u32; 32];
        let buf = &mut buf[..scores.len()];
        buf.copy_from_slice(scores);
        buf.sort_unstable();
        buf[target]
    } else {
        let mut v = scores.to_vec();
        v.sort_unstable();
        v[target]
    }
}

/// Exact comparison by cross-multiplication; denominators are positive.
#[inline]
pub fn cmp_rational(a: &Rational, b: &Rational) -> Ordering {
    if a.denom() == b.denom() {
        return a.numer().cmp(b.numer());
    }
    let lhs = i128::from(*a.numer()) * i128::from(*b.denom());
    let rhs = i128::from(*b.numer()) * i128::from(*a.denom());
    lhs.cmp(&rhs)
}

/// Compares two papers whose combined scores are equal.
pub fn tiebreak_compare(rule: TieBreakRule, a: &AggregateScore, b: &AggregateScore) -> Preference {
    let ord = match rule {
        TieBreakRule::RandomPick => Ordering::Equal,
        // smaller variance wins, so compare b against a
        TieBreakRule::LeastVariance => cmp_rational(&b.meta.variance, &a.meta.variance),
        TieBreakRule::LargestMaxScore => a.meta.max.cmp(&b.meta.max),
        TieBreakRule::LargestMinScore => a.meta.min.cmp(&b.meta.min),
        TieBreakRule::LargestMedianScore => cmp_rational(&a.meta.median, &b.meta.median),
    };
    match ord {
        Ordering::Greater => Preference::First,
        Ordering::Less => Preference::Second,
        Ordering::Equal => Preference::Unordered,
    }
}

/// Indices (ascending) of the `k` accepted papers.
///
/// Everything strictly above the `k`-th largest combined score is accepted.
/// Papers tied at that threshold are ordered by the tie-breaking rule, and
/// whatever is still tied at the cut is resolved uniformly at random.
pub fn select_top_k<R: Rng + ?Sized>(
    scores: &[AggregateScore],
    k: usize,
    tiebreak: TieBreakRule,
    rng: &mut R,
) -> Vec<usize> {
    let n = scores.len();
    assert!(k >= 1 && k <= n, "need 1 <= k <= N, got k = {k}, N = {n}");
    if k == n {
        return (0..n).collect();
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.select_nth_unstable_by(k - 1, |&a, &b| cmp_rational(&scores[b].gamma, &scores[a].gamma));
    let threshold = scores[order[k - 1]].gamma;

    let mut accepted = Vec::with_capacity(k);
    let mut tied = Vec::new();
    for (i, s) in scores.iter().enumerate() {
        match cmp_rational(&s.gamma, &threshold) {
            Ordering::Greater => accepted.push(i),
            Ordering::Equal => tied.push(i),
            Ordering::Less => {}
        }
    }
    let need = k - accepted.len();
    if need == tied.len() {
        accepted.extend_from_slice(&tied);
    } else {
        resolve_tie(scores, &mut tied, need, tiebreak, rng);
        accepted.extend_from_slice(&tied[..need]);
    }
    accepted.sort_unstable();
    accepted
}

/// Reorders `tied` so that its first `need` entries are the winners.
fn resolve_tie<R: Rng + ?Sized>(
    scores: &[AggregateScore],
    tied: &mut [usize],
    need: usize,
    tiebreak: TieBreakRule,
    rng: &mut R,
) {
    let cmp = |a: &usize, b: &usize| tiebreak_compare(tiebreak, &scores[*a], &scores[*b]).as_ordering();
    tied.sort_by(cmp);
    let pivot = tied[need - 1];
    let start = tied
        .iter()
        .position(|x| cmp(x, &pivot) == Ordering::Equal)
        .expect("pivot compares equal to itself");
    let end = start
        + tied[start..]
            .iter()
            .take_while(|x| cmp(x, &pivot) == Ordering::Equal)
            .count();
    let block = &mut tied[start..end];
    let picks = need - start;
    for i in 0..picks {
        let j = rng.random_range(i..block.len());
        block.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agg(rule: VotingRule, scores: &[u32]) -> AggregateScore {
        aggregate(rule, &ReviewSet::from_scores(scores.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn voting_rule_examples() {
        assert_eq!(agg(VotingRule::AverageScore, &[3, 4, 5]).gamma, Rational::from_integer(4));
        assert_eq!(agg(VotingRule::EliminateHighLow, &[1, 3, 5, 5]).gamma, Rational::from_integer(4));
        assert_eq!(
            agg(VotingRule::punish_low_default(), &[1, 1, 4]).gamma,
            Rational::from_integer(1)
        );
        let weighted = aggregate(
            VotingRule::WeightedAverage,
            &ReviewSet::new(vec![2, 4], vec![1, 3]).unwrap(),
        )
        .unwrap();
        assert_eq!(weighted.gamma, Rational::new(7, 2));
    }

    #[test]
    fn eliminate_high_low_needs_three_reviews() {
        let err = aggregate(
            VotingRule::EliminateHighLow,
            &ReviewSet::from_scores(vec![2, 5]).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, RuleError::InsufficientReviews { needed: 3, got: 2, .. }));
    }

    #[test]
    fn meta_fields() {
        let a = agg(VotingRule::AverageScore, &[1, 4, 4, 2]);
        assert_eq!(a.meta.max, 4);
        assert_eq!(a.meta.min, 1);
        assert_eq!(a.meta.median, Rational::from_integer(2));
        // mean 11/4, E[s^2] = 37/4, variance = 37/4 - 121/16 = 27/16
        assert_eq!(a.meta.variance, Rational::new(27, 16));
    }

    #[test]
    fn tiebreak_examples() {
        let a = agg(VotingRule::AverageScore, &[5, 1]);
        let b = agg(VotingRule::AverageScore, &[4, 2]);
        assert_eq!(tiebreak_compare(TieBreakRule::LargestMaxScore, &a, &b), Preference::First);
        let c = agg(VotingRule::AverageScore, &[2, 4]);
        assert_eq!(tiebreak_compare(TieBreakRule::LargestMinScore, &b, &c), Preference::Unordered);
        let d = agg(VotingRule::AverageScore, &[2, 3, 5]);
        let e = agg(VotingRule::AverageScore, &[1, 4, 4]);
        assert_eq!(tiebreak_compare(TieBreakRule::LargestMedianScore, &d, &e), Preference::Second);
        assert_eq!(tiebreak_compare(TieBreakRule::LeastVariance, &b, &a), Preference::First);
        assert_eq!(tiebreak_compare(TieBreakRule::RandomPick, &b, &a), Preference::Unordered);
    }

    #[test]
    fn distinct_scores_ignore_tiebreak() {
        let scores: Vec<_> = [[3, 3], [5, 5], [1, 2], [4, 4], [2, 2]]
            .iter()
            .map(|s| agg(VotingRule::AverageScore, s))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for rule in TieBreakRule::ALL {
            assert_eq!(select_top_k(&scores, 2, rule, &mut rng), vec![1, 3]);
        }
    }

    #[test]
    fn least_variance_breaks_boundary_tie() {
        // both average 3, variances 1/2 and 2
        let low_var = agg(VotingRule::AverageScore, &[2, 3, 3, 4]);
        let high_var = agg(VotingRule::AverageScore, &[1, 3, 3, 5]);
        assert_eq!(low_var.meta.variance, Rational::new(1, 2));
        assert_eq!(high_var.meta.variance, Rational::from_integer(2));
        let top = agg(VotingRule::AverageScore, &[5, 5, 5, 5]);
        let scores = vec![high_var, top, low_var];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            assert_eq!(select_top_k(&scores, 2, TieBreakRule::LeastVariance, &mut rng), vec![1, 2]);
        }
    }

    #[test]
    fn parses_config_strings() {
        assert_eq!("least-variance".parse::<TieBreakRule>().unwrap(), TieBreakRule::LeastVariance);
        assert_eq!("weighted-average".parse::<VotingRule>().unwrap(), VotingRule::WeightedAverage);
        assert!("median".parse::<VotingRule>().is_err());
        let custom: VotingRule = "punish-low(1/3)".parse().unwrap();
        assert_eq!(custom, VotingRule::PunishLow { eta: Rational::new(1, 3) });
        assert_eq!(custom.to_string(), "punish-low(1/3)");
        assert_eq!(VotingRule::punish_low_default().to_string(), "punish-low");
        let json = serde_json::to_string(&TieBreakRule::LargestMinScore).unwrap();
        assert_eq!(json, "\"largest-min\"");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn review_sets() -> impl Strategy<Value = Vec<Vec<u32>>> {
            prop::collection::vec(prop::collection::vec(1u32..=5, 3..6), 2..12)
        }

        proptest! {
            #[test]
            fn fast_compare_matches_ratio_order(a in -500i64..500, b in 1i64..60, c in -500i64..500, d in 1i64..60) {
                let (x, y) = (Rational::new(a, b), Rational::new(c, d));
                prop_assert_eq!(cmp_rational(&x, &y), x.cmp(&y));
            }

            #[test]
            fn aggregate_ignores_review_order(mut scores in prop::collection::vec(1u32..=5, 3..8), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                let rules = [
                    VotingRule::AverageScore,
                    VotingRule::EliminateHighLow,
                    VotingRule::punish_low_default(),
                ];
                let before: Vec<_> = rules.iter().map(|&r| aggregate_scores(r, &scores, &[]).unwrap()).collect();
                scores.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                for (r, b) in rules.iter().zip(&before) {
                    prop_assert_eq!(&aggregate_scores(*r, &scores, &[]).unwrap(), b);
                }
            }

            #[test]
            fn selection_has_size_k_and_dominates(sets in review_sets(), k_seed in any::<usize>(), seed in any::<u64>(), rule_ix in 0usize..5) {
                let aggs: Vec<_> = sets.iter().map(|s| aggregate_scores(VotingRule::AverageScore, s, &[]).unwrap()).collect();
                let k = 1 + k_seed % aggs.len();
                let rule = TieBreakRule::ALL[rule_ix];
                let accepted = select_top_k(&aggs, k, rule, &mut ChaCha8Rng::seed_from_u64(seed));
                prop_assert_eq!(accepted.len(), k);
                prop_assert!(accepted.windows(2).all(|w| w[0] < w[1]));
                let worst_in = accepted.iter().map(|&i| aggs[i].gamma).min().unwrap();
                for i in (0..aggs.len()).filter(|i| !accepted.contains(i)) {
                    prop_assert!(aggs[i].gamma <= worst_in);
                }
            }

            #[test]
            fn relabelling_papers_relabels_the_result(sets in review_sets(), k_seed in any::<usize>(), rule_ix in 1usize..5) {
                // deterministic rules give a permutation-equivariant result
                // whenever no residual tie is left at the cut
                let aggs: Vec<_> = sets.iter().map(|s| aggregate_scores(VotingRule::AverageScore, s, &[]).unwrap()).collect();
                let n = aggs.len();
                let k = 1 + k_seed % n;
                let rule = TieBreakRule::ALL[rule_ix];
                let a = select_top_k(&aggs, k, rule, &mut ChaCha8Rng::seed_from_u64(1));
                let b = select_top_k(&aggs, k, rule, &mut ChaCha8Rng::seed_from_u64(2));
                prop_assume!(a == b);
                let reversed: Vec<_> = aggs.iter().rev().cloned().collect();
                let c = select_top_k(&reversed, k, rule, &mut ChaCha8Rng::seed_from_u64(3));
                let mut mapped: Vec<usize> = c.iter().map(|&i| n - 1 - i).collect();
                mapped.sort_unstable();
                // a residual tie can still split differently; only compare
                // when the reversed run is also stable across seeds
                let d = select_top_k(&reversed, k, rule, &mut ChaCha8Rng::seed_from_u64(4));
                prop_assume!(c == d);
                prop_assert_eq!(mapped, a);
            }
        }
    }

    #[test]
    fn random_pick_is_uniform() {
        let aggs = vec![agg(VotingRule::AverageScore, &[3, 3]); 3];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut hits = [0u32; 3];
        let trials = 30_000;
        for _ in 0..trials {
            hits[select_top_k(&aggs, 1, TieBreakRule::RandomPick, &mut rng)[0]] += 1;
        }
        for h in hits {
            // 1/3 with a 5 sigma band
            assert!((f64::from(h) / f64::from(trials) - 1.0 / 3.0).abs() < 0.014, "{hits:?}");
        }
    }
}
