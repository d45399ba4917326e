use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::EngineError;

/// Round tallies of `I_i = |top-i ∩ accepted|` for one `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricTally {
    pub top: usize,
    /// `counts[j]` = rounds with `I_i = j`, for `j` in `0..=min(i, k)`.
    pub counts: Vec<u64>,
}

impl MetricTally {
    pub fn new(top: usize, accept: usize) -> Self {
        Self {
            top,
            counts: vec![0; top.min(accept) + 1],
        }
    }

    pub fn rounds(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn pmf(&self) -> Vec<f64> {
        let k = self.rounds() as f64;
        self.counts.iter().map(|&c| c as f64 / k).collect()
    }

    pub fn pmf_exact(&self) -> Vec<Ratio<u64>> {
        let k = self.rounds();
        self.counts.iter().map(|&c| Ratio::new(c, k)).collect()
    }

    fn sums(&self) -> (u128, u128, u128) {
        let mut s0 = 0u128;
        let mut s1 = 0u128;
        let mut s2 = 0u128;
        for (j, &c) in self.counts.iter().enumerate() {
            let (j, c) = (j as u128, u128::from(c));
            s0 += c;
            s1 += c * j;
            s2 += c * j * j;
        }
        (s0, s1, s2)
    }

    /// `Ê[I_i] = Σ j·p̂_j`.
    pub fn mean(&self) -> f64 {
        let (s0, s1, _) = self.sums();
        s1 as f64 / s0 as f64
    }

    /// `V̂ar[I_i] = Σ j²·p̂_j - Ê²`, evaluated in integers before dividing.
    pub fn variance(&self) -> f64 {
        let (s0, s1, s2) = self.sums();
        let num = s0 * s2 - s1 * s1;
        num as f64 / (s0 as f64 * s0 as f64)
    }

    /// Standard error of [`MetricTally::mean`].
    pub fn mean_stderr(&self) -> f64 {
        (self.variance() / self.rounds() as f64).sqrt()
    }

    /// Large-sample standard error of [`MetricTally::variance`],
    /// `√((μ₄ - μ₂²)/K)` with central sample moments.
    pub fn variance_stderr(&self) -> f64 {
        let k = self.rounds() as f64;
        let mean = self.mean();
        let (mut m2, mut m4) = (0.0, 0.0);
        for (j, &c) in self.counts.iter().enumerate() {
            let d = j as f64 - mean;
            m2 += c as f64 * d * d;
            m4 += c as f64 * d * d * d * d;
        }
        let (m2, m4) = (m2 / k, m4 / k);
        ((m4 - m2 * m2).max(0.0) / k).sqrt()
    }

    /// Binomial standard error of each pmf entry.
    pub fn pmf_stderr(&self) -> Vec<f64> {
        let k = self.rounds() as f64;
        self.pmf().iter().map(|p| (p * (1.0 - p) / k).sqrt()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accept: usize,
    pub rounds: u64,
    pub seed: u64,
    pub digest: String,
    /// One tally per metric, sorted by `top`; always contains `top = k`.
    pub metrics: Vec<MetricTally>,
}

impl AccuracyReport {
    pub fn empty(accept: usize, metrics: &[usize], seed: u64, digest: String) -> Self {
        Self {
            accept,
            rounds: 0,
            seed,
            digest,
            metrics: metrics.iter().map(|&i| MetricTally::new(i, accept)).collect(),
        }
    }

    pub fn metric(&self, top: usize) -> Option<&MetricTally> {
        self.metrics.iter().find(|m| m.top == top)
    }

    /// Tally of `I(k)`.
    pub fn intersection(&self) -> &MetricTally {
        self.metric(self.accept).expect("report always tallies I(k)")
    }

    /// Round counts of `I(k) = 0..=k`.
    pub fn counts(&self) -> &[u64] {
        &self.intersection().counts
    }

    pub fn pmf(&self) -> Vec<f64> {
        self.intersection().pmf()
    }

    pub fn expectation(&self, top: usize) -> Option<f64> {
        self.metric(top).map(MetricTally::mean)
    }

    pub fn variance(&self, top: usize) -> Option<f64> {
        self.metric(top).map(MetricTally::variance)
    }

    pub fn stderr(&self, top: usize) -> Option<f64> {
        self.metric(top).map(MetricTally::mean_stderr)
    }

    /// Adds `other`'s tallies; both must describe the same scenario.
    pub fn absorb(&mut self, other: &AccuracyReport) -> Result<(), EngineError> {
        if self.digest != other.digest {
            return Err(EngineError::ConfigMismatch(self.digest.clone(), other.digest.clone()));
        }
        self.rounds += other.rounds;
        for (mine, theirs) in self.metrics.iter_mut().zip(&other.metrics) {
            for (a, b) in mine.counts.iter_mut().zip(&theirs.counts) {
                *a += b;
            }
        }
        Ok(())
    }
}

/// Sums reports of disjoint round ranges of one scenario.
pub fn merge_reports(partials: &[AccuracyReport]) -> Result<AccuracyReport, EngineError> {
    let (first, rest) = partials.split_first().ok_or(EngineError::EmptyMerge)?;
    let mut merged = first.clone();
    for p in rest {
        merged.absorb(p)?;
    }
    Ok(merged)
}
