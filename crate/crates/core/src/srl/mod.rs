//! Self-regulated learning questionnaire: dimension scores, reliability and
//! the two-group split into high and low SRL students.
//!
//! Item layout (1-based): goal setting 1–4, persistence 5–14, effort 15–16,
//! self-efficacy 17–25.

mod kmeans;

use std::io::{Read, Write};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{chi_square_independence, StatsError, TestResult};

pub use kmeans::{kmeans, KMeansFit, KMeansOptions};

pub const ITEM_COUNT: usize = 25;

/// Item ranges per dimension in `[gs, p, e, se]` order.
pub const DIMENSION_ITEMS: [RangeInclusive<usize>; 4] = [1..=4, 5..=14, 15..=16, 17..=25];
pub const DIMENSION_KEYS: [&str; 4] = ["gs", "p", "e", "se"];

#[derive(Debug, Error)]
pub enum SrlError {
    #[error("line {line}: expected {expected} item columns, found {got}")]
    WrongArity {
        line: u64,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("student {student}: item {index} outside the scale")]
    OutOfScaleItem { student: String, index: usize },
    #[error("item matrix has zero total variance or fewer than 2 items/respondents")]
    DegenerateVariance,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all points are identical")]
    AllPointsIdentical,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertScale {
    pub min: i32,
    pub max: i32,
}

impl Default for LikertScale {
    fn default() -> Self {
        LikertScale { min: 1, max: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlResponse {
    pub student_id: String,
    /// Exactly [`ITEM_COUNT`] answers, item 1 first.
    pub items: Vec<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrlScores {
    pub goal_setting: f64,
    pub persistence: f64,
    pub effort: f64,
    pub self_efficacy: f64,
}

impl SrlScores {
    /// `[gs, p, e, se]`
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.goal_setting,
            self.persistence,
            self.effort,
            self.self_efficacy,
        ]
    }

    pub fn overall(&self) -> f64 {
        self.as_array().iter().sum::<f64>() / 4.0
    }
}

pub fn score_questionnaire(resp: &SrlResponse, scale: LikertScale) -> Result<SrlScores, SrlError> {
    if resp.items.len() != ITEM_COUNT {
        return Err(SrlError::WrongArity {
            line: 0,
            expected: ITEM_COUNT,
            got: resp.items.len(),
        });
    }
    if let Some(i) = resp
        .items
        .iter()
        .position(|v| *v < scale.min || *v > scale.max)
    {
        return Err(SrlError::OutOfScaleItem {
            student: resp.student_id.clone(),
            index: i + 1,
        });
    }
    let dim = |r: &RangeInclusive<usize>| {
        let items = &resp.items[r.start() - 1..*r.end()];
        items.iter().map(|v| *v as f64).sum::<f64>() / items.len() as f64
    };
    Ok(SrlScores {
        goal_setting: dim(&DIMENSION_ITEMS[0]),
        persistence: dim(&DIMENSION_ITEMS[1]),
        effort: dim(&DIMENSION_ITEMS[2]),
        self_efficacy: dim(&DIMENSION_ITEMS[3]),
    })
}

/// Reads `student_id,q1..q25`. Any other column count is rejected.
pub fn parse_questionnaire<R: Read>(source: R) -> Result<Vec<SrlResponse>, SrlError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.len() != ITEM_COUNT + 1 {
        return Err(SrlError::WrongArity {
            line: 1,
            expected: ITEM_COUNT,
            got: headers.len().saturating_sub(1),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != ITEM_COUNT + 1 {
            return Err(SrlError::WrongArity {
                line,
                expected: ITEM_COUNT,
                got: rec.len() - 1,
            });
        }
        let items = rec
            .iter()
            .skip(1)
            .map(|f| f.parse::<i32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SrlError::Malformed {
                line,
                reason: e.to_string(),
            })?;
        out.push(SrlResponse {
            student_id: rec[0].to_string(),
            items,
        });
    }
    Ok(out)
}

pub fn write_questionnaire<W: Write>(responses: &[SrlResponse], sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["student_id".to_string()];
    header.extend((1..=ITEM_COUNT).map(|i| format!("q{i}")));
    w.write_record(&header)?;
    for r in responses {
        let mut rec = vec![r.student_id.clone()];
        rec.extend(r.items.iter().map(i32::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Cronbach's α over a respondents × items matrix, `n − 1` variances.
pub fn cronbach_alpha(matrix: &[Vec<f64>]) -> Result<f64, SrlError> {
    let k = matrix.first().map_or(0, Vec::len);
    if matrix.len() < 2 || k < 2 || matrix.iter().any(|r| r.len() != k) {
        return Err(SrlError::DegenerateVariance);
    }
    let item_var: f64 = (0..k)
        .map(|j| sample_variance(&matrix.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = matrix.iter().map(|r| r.iter().sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var == 0.0 {
        return Err(SrlError::DegenerateVariance);
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

/// α for each dimension in `[gs, p, e, se]` order.
pub fn dimension_alphas(responses: &[SrlResponse]) -> Result<[f64; 4], SrlError> {
    let mut out = [0.0; 4];
    for (slot, range) in out.iter_mut().zip(DIMENSION_ITEMS.iter()) {
        let m: Vec<Vec<f64>> = responses
            .iter()
            .map(|r| {
                r.items[range.start() - 1..*range.end()]
                    .iter()
                    .map(|v| *v as f64)
                    .collect()
            })
            .collect();
        *slot = cronbach_alpha(&m)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SrlLevel {
    HighSRL,
    LowSRL,
}

impl SrlLevel {
    pub fn key(self) -> &'static str {
        match self {
            SrlLevel::HighSRL => "high",
            SrlLevel::LowSRL => "low",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "highsrl" => Some(SrlLevel::HighSRL),
            "low" | "lowsrl" => Some(SrlLevel::LowSRL),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub student_id: String,
    pub cluster: SrlLevel,
    /// Euclidean distance to the own centroid in the clustering space.
    pub centroid_distance: f64,
    pub scores: SrlScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    /// Mean point-to-own-centroid distance. Reported as a non-negative
    /// number; some tools print the negated value.
    pub avg_within_centroid_distance: f64,
    pub sse: f64,
    pub iterations: usize,
    pub restart: usize,
    pub standardized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    pub assignments: Vec<ClusterAssignment>,
    pub diagnostics: ClusterDiagnostics,
}

/// Splits students into high/low SRL with k = 2. The cluster whose members
/// have the larger mean overall score is labelled high.
pub fn kmeans_2(
    students: &[(String, SrlScores)],
    opts: &KMeansOptions,
) -> Result<ClusterOutcome, SrlError> {
    let points: Vec<Vec<f64>> = students
        .iter()
        .map(|(_, s)| s.as_array().to_vec())
        .collect();
    let fit = kmeans(&points, 2, opts)?;

    let mut overall = [0.0; 2];
    let mut sizes = [0usize; 2];
    for ((_, s), &l) in students.iter().zip(&fit.labels) {
        overall[l] += s.overall();
        sizes[l] += 1;
    }
    let high = if overall[0] / sizes[0] as f64 >= overall[1] / sizes[1] as f64 {
        0
    } else {
        1
    };

    let assignments: Vec<ClusterAssignment> = students
        .iter()
        .zip(&fit.labels)
        .zip(&fit.distances)
        .map(|(((id, s), &l), &d)| ClusterAssignment {
            student_id: id.clone(),
            cluster: if l == high {
                SrlLevel::HighSRL
            } else {
                SrlLevel::LowSRL
            },
            centroid_distance: d,
            scores: *s,
        })
        .collect();
    let avg = fit.distances.iter().sum::<f64>() / fit.distances.len() as f64;
    Ok(ClusterOutcome {
        assignments,
        diagnostics: ClusterDiagnostics {
            avg_within_centroid_distance: avg,
            sse: fit.sse,
            iterations: fit.iterations,
            restart: fit.restart,
            standardized: opts.standardize,
        },
    })
}

/// χ² on the cohort × SRL-level table.
pub fn cluster_proportion_test(
    control: &[ClusterAssignment],
    intervention: &[ClusterAssignment],
) -> Result<TestResult, SrlError> {
    if control.is_empty() || intervention.is_empty() {
        return Err(SrlError::TooFewPoints { needed: 1, got: 0 });
    }
    let row = |a: &[ClusterAssignment]| {
        let high = a.iter().filter(|c| c.cluster == SrlLevel::HighSRL).count() as f64;
        vec![high, a.len() as f64 - high]
    };
    Ok(chi_square_independence(&[row(control), row(intervention)])?)
}

/// `student_id,cluster,gs,p,e,se`
pub fn write_clusters_csv<W: Write>(assignments: &[ClusterAssignment], sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["student_id", "cluster", "gs", "p", "e", "se"])?;
    for a in assignments {
        let mut rec = vec![a.student_id.clone(), a.cluster.key().to_string()];
        rec.extend(a.scores.as_array().iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_clusters_csv<R: Read>(source: R) -> Result<Vec<(String, SrlLevel)>, SrlError> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let level = rec
            .get(1)
            .and_then(SrlLevel::parse)
            .ok_or_else(|| SrlError::Malformed {
                line,
                reason: "bad cluster label".into(),
            })?;
        out.push((rec[0].to_string(), level));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(items: Vec<i32>) -> SrlResponse {
        SrlResponse {
            student_id: "s".into(),
            items,
        }
    }

    #[test]
    fn constant_answers() {
        let s = score_questionnaire(&resp(vec![5; 25]), LikertScale::default()).unwrap();
        assert_eq!(s.as_array(), [5.0; 4]);
    }

    #[test]
    fn goal_setting_mean() {
        let mut items = vec![3; 25];
        items[..4].copy_from_slice(&[1, 2, 3, 4]);
        let s = score_questionnaire(&resp(items), LikertScale::default()).unwrap();
        assert_eq!(s.goal_setting, 2.5);
        assert_eq!(s.persistence, 3.0);
    }

    #[test]
    fn out_of_scale() {
        let mut items = vec![3; 25];
        items[16] = 6;
        let err = score_questionnaire(&resp(items), LikertScale::default()).unwrap_err();
        assert!(matches!(err, SrlError::OutOfScaleItem { index: 17, .. }));
        // a 0-6 scale accepts it
        let mut items = vec![3; 25];
        items[16] = 6;
        assert!(score_questionnaire(&resp(items), LikertScale { min: 0, max: 6 }).is_ok());
    }

    #[test]
    fn parse_rejects_extra_item() {
        let mut header = String::from("student_id");
        for i in 1..=26 {
            header.push_str(&format!(",q{i}"));
        }
        let row = format!("s1{}", ",3".repeat(26));
        let err = parse_questionnaire(format!("{header}\n{row}\n").as_bytes()).unwrap_err();
        assert!(matches!(err, SrlError::WrongArity { got: 26, .. }));
    }

    #[test]
    fn questionnaire_round_trip() {
        let rs = vec![resp((0..25).map(|i| 1 + i % 5).collect())];
        let mut buf = Vec::new();
        write_questionnaire(&rs, &mut buf).unwrap();
        assert_eq!(parse_questionnaire(buf.as_slice()).unwrap(), rs);
    }

    #[test]
    fn alpha_perfect_consistency() {
        let m: Vec<Vec<f64>> = [1.0, 3.0, 4.0, 2.0].iter().map(|v| vec![*v; 3]).collect();
        assert!((cronbach_alpha(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_uncorrelated_items() {
        // item columns (1,-1,1,-1) and (1,1,-1,-1): equal variance, zero covariance
        let m = vec![
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, -1.0],
        ];
        assert!(cronbach_alpha(&m).unwrap().abs() < 1e-12);
    }

    #[test]
    fn alpha_hand_matrix() {
        // rows: (2,3,3) (4,4,5) (3,3,4) (5,4,5)
        // item variances: 5/3, 1/3, 11/12 -> 35/12; totals 8,13,10,14 -> 91/12
        // alpha = 3/2 * (1 - 35/91) = 12/13
        let m = vec![
            vec![2.0, 3.0, 3.0],
            vec![4.0, 4.0, 5.0],
            vec![3.0, 3.0, 4.0],
            vec![5.0, 4.0, 5.0],
        ];
        assert!((cronbach_alpha(&m).unwrap() - 12.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_degenerate() {
        assert!(matches!(
            cronbach_alpha(&[vec![1.0, 1.0], vec![1.0, 1.0]]),
            Err(SrlError::DegenerateVariance)
        ));
        assert!(matches!(
            cronbach_alpha(&[vec![1.0, 2.0]]),
            Err(SrlError::DegenerateVariance)
        ));
    }

    fn scores(v: f64) -> SrlScores {
        SrlScores {
            goal_setting: v,
            persistence: v,
            effort: v,
            self_efficacy: v,
        }
    }

    #[test]
    fn separated_blobs() {
        let mut students = Vec::new();
        for i in 0..6 {
            let j = (i as f64) * 0.05;
            students.push((format!("lo{i}"), scores(1.0 + j)));
            students.push((format!("hi{i}"), scores(5.0 - j)));
        }
        let out = kmeans_2(&students, &KMeansOptions::default()).unwrap();
        for a in &out.assignments {
            let want = if a.student_id.starts_with("hi") {
                SrlLevel::HighSRL
            } else {
                SrlLevel::LowSRL
            };
            assert_eq!(a.cluster, want, "{}", a.student_id);
        }
        assert!(out.diagnostics.avg_within_centroid_distance >= 0.0);
    }

    #[test]
    fn proportion_test_cases() {
        let make = |high: usize, low: usize| -> Vec<ClusterAssignment> {
            (0..high + low)
                .map(|i| ClusterAssignment {
                    student_id: i.to_string(),
                    cluster: if i < high {
                        SrlLevel::HighSRL
                    } else {
                        SrlLevel::LowSRL
                    },
                    centroid_distance: 0.0,
                    scores: scores(3.0),
                })
                .collect()
        };
        let r = cluster_proportion_test(&make(20, 10), &make(40, 20)).unwrap();
        assert!(r.statistic.abs() < 1e-12 && (r.p_two_tailed - 1.0).abs() < 1e-12);
        // all expected counts 15
        let r = cluster_proportion_test(&make(30, 0), &make(0, 30)).unwrap();
        assert!((r.statistic - 60.0).abs() < 1e-12);
    }

    #[test]
    fn clusters_csv() {
        let a = vec![ClusterAssignment {
            student_id: "s1".into(),
            cluster: SrlLevel::HighSRL,
            centroid_distance: 0.3,
            scores: SrlScores {
                goal_setting: 4.5,
                persistence: 4.0,
                effort: 5.0,
                self_efficacy: 3.5,
            },
        }];
        let mut buf = Vec::new();
        write_clusters_csv(&a, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "student_id,cluster,gs,p,e,se\ns1,high,4.5,4,5,3.5\n"
        );
        assert_eq!(
            read_clusters_csv(buf.as_slice()).unwrap(),
            vec![("s1".to_string(), SrlLevel::HighSRL)]
        );
    }
}
