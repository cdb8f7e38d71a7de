use super::dist::student_t_two_tailed;
use super::{check_finite, mean, variance, GroupSummary, StatsError, TestResult};

/// Two-tailed p-value of a sample correlation `r` over `n` pairs (t test, df = n − 2).
pub fn pearson_p_value(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r * (df / denom).sqrt();
    student_t_two_tailed(t, df)
}

/// Pearson product-moment correlation; `statistic` holds `r`.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::EmptySample {
            needed: 3,
            got: x.len(),
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(TestResult {
        test_name: "pearson_r".into(),
        statistic: r,
        z_value: None,
        p_two_tailed: pearson_p_value(r, x.len()),
        effect_size_r: Some(r.abs()),
        df: Some(x.len() as u32 - 2),
        group_summaries: vec![GroupSummary::of("x", x), GroupSummary::of("y", y)],
    })
}

/// Student's two-sample t test with pooled variance; `statistic` is `t`.
pub fn independent_t_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::EmptySample {
                needed: 2,
                got: s.len(),
            });
        }
        check_finite(s)?;
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let df = n1 + n2 - 2.0;
    let pooled = ((n1 - 1.0) * variance(a) + (n2 - 1.0) * variance(b)) / df;
    if pooled == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let t = (mean(a) - mean(b)) / (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    Ok(TestResult {
        test_name: "independent_t_test".into(),
        statistic: t,
        z_value: None,
        p_two_tailed: student_t_two_tailed(t, df),
        effect_size_r: None,
        df: Some(df as u32),
        group_summaries: vec![GroupSummary::of("a", a), GroupSummary::of("b", b)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let r = pearson_r(&x, &y).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-15);
        assert_eq!(r.p_two_tailed, 0.0);
    }

    #[test]
    fn hand_correlation() {
        // deviations x: -1.5,-.5,.5,1.5; y: -1.5,.5,-.5,1.5 -> sxy = 4, sxx = syy = 5
        let r = pearson_r(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r.statistic - 0.8).abs() < 1e-15);
        assert_eq!(r.df, Some(2));
    }

    #[test]
    fn zero_variance_rejected() {
        assert_eq!(
            pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            StatsError::ZeroVariance("x")
        );
    }

    #[test]
    fn t_test_identical_samples() {
        let a = [1.0, 4.0, 2.0, 8.0];
        let r = independent_t_test(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_two_tailed - 1.0).abs() < 1e-15);
    }

    #[test]
    fn t_test_hand_example() {
        // means 2 and 3, both variances 1, pooled 1 -> t = -1 / sqrt(2/3)
        let r = independent_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.statistic + (1.5_f64).sqrt()).abs() < 1e-14);
        assert_eq!(r.df, Some(4));
    }

    #[test]
    fn t_test_degenerate() {
        assert_eq!(
            independent_t_test(&[2.0, 2.0], &[3.0, 3.0]).unwrap_err(),
            StatsError::DegenerateVariance
        );
    }
}
