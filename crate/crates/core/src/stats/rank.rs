use serde::{Deserialize, Serialize};

use super::dist::normal_two_tailed;
use super::{check_finite, GroupSummary, StatsError, TestResult};

const MIN_PAIRS: usize = 5;
const MIN_GROUP: usize = 3;

/// How zero paired differences enter the signed-rank test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMethod {
    /// Drop zero differences before ranking.
    #[default]
    Wilcox,
    /// Rank zeros with the rest, then leave their ranks out of both sums.
    Pratt,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOptions {
    pub zero_method: ZeroMethod,
    /// Shift the statistic half a unit toward its mean before standardizing.
    pub continuity_correction: bool,
    /// Total observation count for the effect size; defaults to `2 * pairs`.
    pub effect_n: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyOptions {
    pub continuity_correction: bool,
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Σ (t³ − t) over groups of tied values.
pub fn tie_term(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        sum += t * t * t - t;
        i = j;
    }
    sum
}

fn standardize(stat: f64, mean: f64, sd: f64, continuity: bool) -> f64 {
    let mut d = stat - mean;
    if continuity {
        d = if d < 0.0 {
            (d + 0.5).min(0.0)
        } else {
            (d - 0.5).max(0.0)
        };
    }
    if sd > 0.0 {
        d / sd
    } else {
        0.0
    }
}

/// `r = |z| / sqrt(n_total)`, capped at 1.
pub fn rank_effect_size(z: f64, n_total: usize) -> f64 {
    (z.abs() / (n_total as f64).sqrt()).min(1.0)
}

/// Normal approximation for a signed-rank statistic `w = min(W+, W−)` over
/// `m` ranked differences with tie term `ties`. Returns `(z, p)`.
pub fn wilcoxon_from_w(w: f64, m: usize, ties: f64, continuity: bool) -> (f64, f64) {
    let m = m as f64;
    let mean = m * (m + 1.0) / 4.0;
    let var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - ties / 48.0;
    let z = standardize(w, mean, var.max(0.0).sqrt(), continuity);
    (z, normal_two_tailed(z))
}

/// Related-samples signed-rank test on `d = y − x`.
///
/// `statistic` is `W = min(W+, W−)`, so the reported `z` is never positive.
pub fn wilcoxon_signed_rank(
    x: &[f64],
    y: &[f64],
    opts: &WilcoxonOptions,
) -> Result<TestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    check_finite(x)?;
    check_finite(y)?;
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
    let nonzero = diffs.iter().filter(|d| **d != 0.0).count();
    if !diffs.is_empty() && nonzero == 0 {
        return Err(StatsError::AllZeroDifferences);
    }
    if nonzero < MIN_PAIRS {
        return Err(StatsError::TooFewPairs {
            needed: MIN_PAIRS,
            got: nonzero,
        });
    }

    let ranked: Vec<f64> = match opts.zero_method {
        ZeroMethod::Wilcox => diffs.iter().copied().filter(|d| *d != 0.0).collect(),
        ZeroMethod::Pratt => diffs.clone(),
    };
    let abs: Vec<f64> = ranked.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let (mut w_plus, mut w_minus) = (0.0, 0.0);
    for (d, r) in ranked.iter().zip(&ranks) {
        if *d > 0.0 {
            w_plus += r;
        } else if *d < 0.0 {
            w_minus += r;
        }
    }
    let w = w_plus.min(w_minus);
    let ties = tie_term(&abs);

    let (z, p) = match opts.zero_method {
        ZeroMethod::Wilcox => wilcoxon_from_w(w, ranked.len(), ties, opts.continuity_correction),
        ZeroMethod::Pratt => {
            let n = ranked.len() as f64;
            let n0 = (ranked.len() - nonzero) as f64;
            let mean = (n * (n + 1.0) - n0 * (n0 + 1.0)) / 4.0;
            let var = (n * (n + 1.0) * (2.0 * n + 1.0) - n0 * (n0 + 1.0) * (2.0 * n0 + 1.0)) / 24.0
                - ties / 48.0;
            let z = standardize(w, mean, var.max(0.0).sqrt(), opts.continuity_correction);
            (z, normal_two_tailed(z))
        }
    };

    let effect_n = opts.effect_n.unwrap_or(x.len() + y.len());
    Ok(TestResult {
        test_name: "wilcoxon_signed_rank".into(),
        statistic: w,
        z_value: Some(z),
        p_two_tailed: p,
        effect_size_r: Some(rank_effect_size(z, effect_n)),
        df: None,
        group_summaries: vec![GroupSummary::of("x", x), GroupSummary::of("y", y)],
    })
}

/// Normal approximation for `U` given group sizes and the pooled tie term.
/// Returns `(z, p, r)` with `r = |z| / sqrt(n1 + n2)`.
pub fn mann_whitney_from_u(
    u: f64,
    n1: usize,
    n2: usize,
    ties: f64,
    continuity: bool,
) -> (f64, f64, f64) {
    let (a, b) = (n1 as f64, n2 as f64);
    let n = a + b;
    let mean = a * b / 2.0;
    let var = a * b / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let z = standardize(u, mean, var.max(0.0).sqrt(), continuity);
    (z, normal_two_tailed(z), rank_effect_size(z, n1 + n2))
}

/// Two independent samples; `statistic` is `min(U_a, U_b)`.
pub fn mann_whitney_u(
    a: &[f64],
    b: &[f64],
    opts: &MannWhitneyOptions,
) -> Result<TestResult, StatsError> {
    for s in [a, b] {
        if s.len() < MIN_GROUP {
            return Err(StatsError::EmptySample {
                needed: MIN_GROUP,
                got: s.len(),
            });
        }
        check_finite(s)?;
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled);
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();
    let u_a = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let u_b = n1 * n2 - u_a;
    let u = u_a.min(u_b);
    let (z, p, r) = mann_whitney_from_u(
        u,
        a.len(),
        b.len(),
        tie_term(&pooled),
        opts.continuity_correction,
    );
    Ok(TestResult {
        test_name: "mann_whitney_u".into(),
        statistic: u,
        z_value: Some(z),
        p_two_tailed: p,
        effect_size_r: Some(r),
        df: None,
        group_summaries: vec![GroupSummary::of("a", a), GroupSummary::of("b", b)],
    })
}
