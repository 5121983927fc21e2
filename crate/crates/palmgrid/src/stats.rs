//! Paired nonparametric comparison of two hands' per-episode success
//! counts: Wilcoxon signed-rank, Bonferroni adjustment, and box-plot
//! descriptive statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest count of non-zero differences handled by the exact permutation
/// distribution; beyond it the normal approximation takes over.
pub const EXACT_CUTOFF: usize = 25;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("paired samples differ in length: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("paired sample is empty")]
    Empty,
    #[error("all paired differences are zero; the test is undefined")]
    AllZeroDifferences,
}

/// Per-episode success counts for two hands under the shared protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        if x.len() != y.len() {
            return Err(StatsError::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.is_empty() {
            return Err(StatsError::Empty);
        }
        Ok(Self { x, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    NormalApproximation,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Exact => f.write_str("exact"),
            Method::NormalApproximation => f.write_str("normal-approximation"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// min(W⁺, W⁻); mid-ranking can make it fractional.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value_two_sided: f64,
    /// Equals the raw p until a multiple-comparison pass scales it.
    pub p_value_adjusted: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub method: Method,
}

/// Mid-ranks of `|d|` in doubled units so ties stay integral: a tie group
/// covering sorted positions i..=j gets rank (i + j + 2) / 2, doubled to
/// i + j + 2.
fn doubled_ranks(magnitudes: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..magnitudes.len()).collect();
    order.sort_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]));
    let mut ranks = vec![0u64; magnitudes.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len()
            && magnitudes[order[end + 1]] == magnitudes[order[start]]
        {
            end += 1;
        }
        for &original in &order[start..=end] {
            ranks[original] = (start + end + 2) as u64;
        }
        tie_sizes.push(end - start + 1);
        start = end + 1;
    }
    (ranks, tie_sizes)
}

/// Exact two-sided p: the distribution of the doubled negative-rank sum
/// over all 2ⁿ sign assignments, tallied by subset-sum counting. Counts
/// are exact integers, so the p equals what literal enumeration gives.
fn exact_two_sided(ranks: &[u64], w_minus_doubled: u64) -> f64 {
    let total_rank: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; total_rank as usize + 1];
    counts[0] = 1;
    for &rank in ranks {
        for w in (rank as usize..counts.len()).rev() {
            counts[w] += counts[w - rank as usize];
        }
    }
    let assignments = (1u64 << ranks.len()) as f64;
    let at_most: u64 = counts[..=w_minus_doubled as usize].iter().sum();
    let at_least: u64 = counts[w_minus_doubled as usize..].iter().sum();
    let tail = (at_most.min(at_least)) as f64 / assignments;
    (2.0 * tail).min(1.0)
}

/// Normal approximation with tie correction and a 0.5 continuity
/// correction, applied to W = min(W⁺, W⁻).
fn normal_two_sided(w: f64, n: usize, tie_sizes: &[usize]) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            (t * t * t - t) / 48.0
        })
        .sum();
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let z = (w - mean + 0.5) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * normal.cdf(z)).min(1.0)
}

/// Paired Wilcoxon signed-rank test, two-sided.
///
/// Zero differences are dropped and ties mid-ranked. With at most
/// `EXACT_CUTOFF` effective pairs the p-value comes from the full
/// sign-assignment distribution; above that, from the normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(sample: &PairedSample) -> Result<TestResult, StatsError> {
    if sample.x.len() != sample.y.len() {
        return Err(StatsError::LengthMismatch {
            x: sample.x.len(),
            y: sample.y.len(),
        });
    }
    if sample.x.is_empty() {
        return Err(StatsError::Empty);
    }
    let differences: Vec<f64> = sample
        .x
        .iter()
        .zip(&sample.y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if differences.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    let magnitudes: Vec<f64> = differences.iter().map(|d| d.abs()).collect();
    let (ranks, tie_sizes) = doubled_ranks(&magnitudes);
    let mut w_plus_doubled = 0u64;
    let mut w_minus_doubled = 0u64;
    for (d, &rank) in differences.iter().zip(&ranks) {
        if *d > 0.0 {
            w_plus_doubled += rank;
        } else {
            w_minus_doubled += rank;
        }
    }
    let w_plus = w_plus_doubled as f64 / 2.0;
    let w_minus = w_minus_doubled as f64 / 2.0;
    let statistic = w_plus.min(w_minus);
    let n_effective = differences.len();
    let (p, method) = if n_effective <= EXACT_CUTOFF {
        (exact_two_sided(&ranks, w_minus_doubled), Method::Exact)
    } else {
        (
            normal_two_sided(statistic, n_effective, &tie_sizes),
            Method::NormalApproximation,
        )
    };
    Ok(TestResult {
        statistic,
        w_plus,
        w_minus,
        p_value_two_sided: p,
        p_value_adjusted: p,
        n_effective,
        method,
    })
}

/// Bonferroni adjustment: pᵢ' = min(1, m·pᵢ). `m` must cover every
/// comparison made, not just those passed in.
pub fn bonferroni(p_values: &[f64], m: usize) -> Vec<f64> {
    assert!(
        m >= p_values.len(),
        "comparison count {m} below number of p-values {}",
        p_values.len()
    );
    p_values.iter().map(|p| (m as f64 * p).min(1.0)).collect()
}

/// Box-plot statistics for one hand's episode counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub mean: f64,
    /// Midpoint convention: the average of the two middle values when the
    /// count is even.
    pub median: f64,
    /// Lower and upper quartiles by linear interpolation at positions
    /// (n-1)/4 and 3(n-1)/4 of the sorted sample.
    pub q1: f64,
    pub q3: f64,
}

fn interpolate(sorted: &[f64], quantile: f64) -> f64 {
    let position = (sorted.len() - 1) as f64 * quantile;
    let below = position.floor() as usize;
    let above = position.ceil() as usize;
    let fraction = position - below as f64;
    sorted[below] + (sorted[above] - sorted[below]) * fraction
}

/// Descriptive statistics over a non-empty sample.
pub fn summarize(counts: &[f64]) -> SampleSummary {
    assert!(!counts.is_empty(), "summarize needs at least one value");
    let mut sorted = counts.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    SampleSummary {
        mean: sorted.iter().sum::<f64>() / n as f64,
        median,
        q1: interpolate(&sorted, 0.25),
        q3: interpolate(&sorted, 0.75),
    }
}
