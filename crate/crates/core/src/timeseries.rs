//! Centered moving-average trend and additive seasonal decomposition.

use std::io::Write;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{fmt_num, DailySeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeseriesError {
    #[error("moving-average window must be odd (got {0})")]
    EvenWindow(usize),
    #[error("window {window} larger than series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("series of length {len} is shorter than two periods ({needed})")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("period must be at least 2")]
    BadPeriod,
}

/// Centered arithmetic mean over an odd `window`; the first and last
/// `window / 2` positions are undefined.
pub fn moving_average_trend(
    values: &[f64],
    window: usize,
) -> Result<Vec<Option<f64>>, TimeseriesError> {
    if window.is_multiple_of(2) {
        return Err(TimeseriesError::EvenWindow(window));
    }
    if window > values.len() {
        return Err(TimeseriesError::WindowTooLarge {
            window,
            len: values.len(),
        });
    }
    let half = window / 2;
    Ok((0..values.len())
        .map(|i| {
            (i >= half && i + half < values.len())
                .then(|| values[i - half..=i + half].iter().sum::<f64>() / window as f64)
        })
        .collect())
}

/// 2×m moving average for an even period: `period + 1` points with half
/// weight on both ends.
fn centered_even_trend(values: &[f64], period: usize) -> Vec<Option<f64>> {
    let half = period / 2;
    (0..values.len())
        .map(|i| {
            (i >= half && i + half < values.len()).then(|| {
                let inner: f64 = values[i - half + 1..i + half].iter().sum();
                (inner + 0.5 * (values[i - half] + values[i + half])) / period as f64
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub observed: Vec<f64>,
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<Option<f64>>,
    pub period: usize,
    /// One value per phase; phase 0 is the first observation.
    pub seasonal_indices: Vec<f64>,
    /// Weekday of the first observation, when the series is dated.
    pub first_weekday: Option<Weekday>,
    pub dates: Option<Vec<NaiveDate>>,
}

impl DecompositionResult {
    /// Seasonal indices keyed Monday..Sunday. Only for dated weekly series.
    pub fn by_weekday(&self) -> Option<[f64; 7]> {
        let first = self.first_weekday?;
        if self.period != 7 {
            return None;
        }
        let offset = first.num_days_from_monday() as usize;
        let mut out = [0.0; 7];
        for (phase, v) in self.seasonal_indices.iter().enumerate() {
            out[(offset + phase) % 7] = *v;
        }
        Some(out)
    }

    /// Decomposition CSV: `date,observed,trend,seasonal,residual`, empty
    /// cells where the trend is undefined. Without dates the first column is
    /// the zero-based position.
    pub fn write_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["date", "observed", "trend", "seasonal", "residual"])?;
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        for i in 0..self.observed.len() {
            let key = match &self.dates {
                Some(d) => d[i].to_string(),
                None => i.to_string(),
            };
            w.write_record([
                key,
                fmt_num(self.observed[i]),
                opt(self.trend[i]),
                fmt_num(self.seasonal[i]),
                opt(self.residual[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Additive decomposition `observed = trend + seasonal + residual`.
///
/// The seasonal index of each phase is the mean of the detrended values at
/// that phase (positions with a defined trend only), re-centered to sum to 0.
pub fn decompose_additive(
    values: &[f64],
    period: usize,
) -> Result<DecompositionResult, TimeseriesError> {
    if period < 2 {
        return Err(TimeseriesError::BadPeriod);
    }
    if values.len() < 2 * period {
        return Err(TimeseriesError::SeriesTooShort {
            len: values.len(),
            needed: 2 * period,
        });
    }
    let trend = if period % 2 == 1 {
        moving_average_trend(values, period)?
    } else {
        centered_even_trend(values, period)
    };

    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (i, t) in trend.iter().enumerate() {
        if let Some(t) = t {
            sums[i % period] += values[i] - t;
            counts[i % period] += 1;
        }
    }
    let raw: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| s / *c as f64)
        .collect();
    let level = raw.iter().sum::<f64>() / period as f64;
    let seasonal_indices: Vec<f64> = raw.iter().map(|v| v - level).collect();

    let seasonal: Vec<f64> = (0..values.len())
        .map(|i| seasonal_indices[i % period])
        .collect();
    let residual = trend
        .iter()
        .enumerate()
        .map(|(i, t)| t.map(|t| values[i] - t - seasonal[i]))
        .collect();
    Ok(DecompositionResult {
        observed: values.to_vec(),
        trend,
        seasonal,
        residual,
        period,
        seasonal_indices,
        first_weekday: None,
        dates: None,
    })
}

/// Decomposes the `chars` values of a daily series.
pub fn seasonal_decompose_additive(
    series: &DailySeries,
    period: usize,
) -> Result<DecompositionResult, TimeseriesError> {
    let mut result = decompose_additive(&series.chars(), period)?;
    result.first_weekday = series.first_date().map(|d| d.weekday());
    result.dates = Some(series.values.iter().map(|v| v.date).collect());
    Ok(result)
}
