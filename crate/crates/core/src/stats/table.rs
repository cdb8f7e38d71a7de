use super::dist::chi_square_sf;
use super::{StatsError, TestResult};

/// Pearson χ² test of independence on an r×c table of counts, no continuity
/// correction.
pub fn chi_square_independence(table: &[Vec<f64>]) -> Result<TestResult, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::BadTable);
    }
    if table.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(StatsError::NonFinite);
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    if let Some(i) = row_sums.iter().position(|s| *s == 0.0) {
        return Err(StatsError::ZeroMarginal(format!("row {i}")));
    }
    if let Some(j) = col_sums.iter().position(|s| *s == 0.0) {
        return Err(StatsError::ZeroMarginal(format!("column {j}")));
    }
    let total: f64 = row_sums.iter().sum();
    let mut chi2 = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, observed) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / total;
            chi2 += (observed - expected).powi(2) / expected;
        }
    }
    let df = ((rows - 1) * (cols - 1)) as u32;
    Ok(TestResult {
        test_name: "chi_square_independence".into(),
        statistic: chi2,
        z_value: None,
        p_two_tailed: chi_square_sf(chi2, df as f64),
        effect_size_r: None,
        df: Some(df),
        group_summaries: Vec::new(),
    })
}
