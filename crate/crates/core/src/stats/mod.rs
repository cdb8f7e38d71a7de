//! Hypothesis tests with two-tailed p-values and effect sizes.
//!
//! Rank tests use the large-sample normal approximation with tie-corrected
//! variance. The effect size attached to them is `r = |Z| / sqrt(N)` where `N`
//! is the total number of observations across both samples.

pub mod dist;
mod parametric;
mod rank;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parametric::{independent_t_test, pearson_p_value, pearson_r};
pub use rank::{
    average_ranks, mann_whitney_from_u, mann_whitney_u, rank_effect_size, tie_term,
    wilcoxon_from_w, wilcoxon_signed_rank, MannWhitneyOptions, WilcoxonOptions, ZeroMethod,
};
pub use table::chi_square_independence;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty or smaller than the required {needed} observations (got {got})")]
    EmptySample { needed: usize, got: usize },
    #[error("paired samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("too few non-zero pairs: need {needed}, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("both groups have zero variance")]
    DegenerateVariance,
    #[error("contingency table has a zero marginal ({0})")]
    ZeroMarginal(String),
    #[error("contingency table must be at least 2x2 and rectangular")]
    BadTable,
    #[error("non-finite value in input")]
    NonFinite,
}

/// Descriptive statistics attached to each group of a test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
    pub median: f64,
    pub iqr: f64,
    pub mean: f64,
    pub sd: f64,
    /// Observations equal to zero (inactive days when the sample is a daily series).
    pub inactive_days: usize,
}

impl GroupSummary {
    pub fn of(label: impl Into<String>, sample: &[f64]) -> Self {
        let s = summarize(sample);
        GroupSummary {
            label: label.into(),
            n: s.n,
            median: s.median,
            iqr: s.iqr,
            mean: s.mean,
            sd: s.sd,
            inactive_days: sample.iter().filter(|v| **v == 0.0).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: String,
    /// U, W, χ², t, or r depending on the test.
    pub statistic: f64,
    pub z_value: Option<f64>,
    pub p_two_tailed: f64,
    pub effect_size_r: Option<f64>,
    pub df: Option<u32>,
    pub group_summaries: Vec<GroupSummary>,
}

impl TestResult {
    /// `**` below .01, `*` below .05.
    pub fn stars(&self) -> &'static str {
        significance_stars(self.p_two_tailed)
    }

    pub fn relabel(mut self, labels: &[&str]) -> Self {
        for (g, l) in self.group_summaries.iter_mut().zip(labels) {
            g.label = (*l).to_string();
        }
        self
    }
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub median: f64,
    /// Q3 − Q1 with linearly interpolated quantiles.
    pub iqr: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 when `n < 2` (see `sd_defined`).
    pub sd: f64,
    pub sd_defined: bool,
}

/// Linearly interpolated quantile of an already sorted sample (the common
/// "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(sample: &[f64]) -> f64 {
    sample.iter().sum::<f64>() / sample.len() as f64
}

/// Sample variance with the `n − 1` denominator.
pub fn variance(sample: &[f64]) -> f64 {
    let m = mean(sample);
    sample.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (sample.len() as f64 - 1.0)
}

/// Panics on an empty sample.
pub fn summarize(sample: &[f64]) -> SummaryStats {
    assert!(
        !sample.is_empty(),
        "summarize requires at least one observation"
    );
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let sd_defined = n >= 2;
    SummaryStats {
        n,
        median: quantile_sorted(&sorted, 0.5),
        iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        mean: mean(&sorted),
        sd: if sd_defined {
            variance(&sorted).sqrt()
        } else {
            0.0
        },
        sd_defined,
    }
}

/// Skewness/kurtosis screen used to annotate report tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeScreen {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub non_normal: bool,
}

/// Flags a sample as non-normal when |skewness| > 2 or excess kurtosis > 7.
pub fn shape_screen(sample: &[f64]) -> Option<ShapeScreen> {
    if sample.len() < 4 {
        return None;
    }
    let n = sample.len() as f64;
    let m = mean(sample);
    let m2 = sample.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return None;
    }
    let m3 = sample.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = sample.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    Some(ShapeScreen {
        skewness,
        excess_kurtosis,
        non_normal: skewness.abs() > 2.0 || excess_kurtosis > 7.0,
    })
}

fn check_finite(sample: &[f64]) -> Result<(), StatsError> {
    if sample.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}
