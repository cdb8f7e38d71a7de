//! Cohort and cluster comparisons: editing-frequency tables, within- and
//! between-cohort rank tests, feature correlations, t tests and figures.
//!
//! Within-group comparisons pair day `i` of the first half with day `i` of
//! the second half; with seven-day weeks both days fall on the same weekday.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{
    cohort_daily_average, fmt_num, student_features, weekly_edit_categories, CalendarError,
    DailySeries, SemesterCalendar, SeriesOptions, StudentFeatures, Window, FEATURE_NAMES,
};
use crate::par::Exec;
use crate::simcohort::{generate_cohort, SimError, SimOptions, SimProfile};
use crate::srl::{kmeans_2, score_questionnaire, KMeansOptions, LikertScale, SrlError, SrlLevel};
use crate::stats::{
    chi_square_independence, independent_t_test, mann_whitney_u, pearson_r, wilcoxon_signed_rank,
    GroupSummary, MannWhitneyOptions, StatsError, TestResult, WilcoxonOptions,
};
use crate::study::CohortData;
use crate::svg::{Line, LineChart};
use crate::timeseries::{decompose_additive, TimeseriesError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("group `{0}` has no students")]
    EmptyGroup(String),
    #[error("student ids of features and scores do not match ({0})")]
    MismatchedIds(String),
    #[error("student `{0}` appears more than once")]
    DuplicateStudent(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
    #[error("{0}")]
    Srl(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl From<SrlError> for ReportError {
    fn from(e: SrlError) -> Self {
        ReportError::Srl(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    Cohort,
    Cluster,
}

/// Whether zero-valued days stay in rank-test samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroDays {
    #[default]
    Include,
    Exclude,
}

/// What one observation of a rank test is.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleUnit {
    /// One value per day: the group's mean characters on that day.
    #[default]
    DailyCohortAverage,
    /// One value per student: their mean characters per day in the window.
    StudentAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub zero_days: ZeroDays,
    pub sample_unit: SampleUnit,
    /// Decompose each half on its own rather than the whole semester.
    pub decompose_per_half: bool,
    pub period: usize,
    pub wilcoxon: WilcoxonOptions,
    pub mann_whitney: MannWhitneyOptions,
    pub series: SeriesOptions,
    pub kmeans: KMeansOptions,
    /// Answer range of the questionnaire items.
    #[serde(default)]
    pub likert: LikertScale,
    #[serde(skip, default)]
    pub exec: Exec,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            zero_days: ZeroDays::Include,
            sample_unit: SampleUnit::DailyCohortAverage,
            decompose_per_half: true,
            period: 7,
            wilcoxon: WilcoxonOptions::default(),
            mann_whitney: MannWhitneyOptions::default(),
            series: SeriesOptions::default(),
            kmeans: KMeansOptions::default(),
            likert: LikertScale::default(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentRecord {
    pub student_id: String,
    /// Whole-calendar daily series.
    pub series: DailySeries,
    pub cluster: Option<SrlLevel>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortGroup {
    pub name: String,
    pub students: Vec<StudentRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortStudy {
    pub calendar: SemesterCalendar,
    pub control: CohortGroup,
    pub intervention: CohortGroup,
    pub notices: Vec<String>,
}

/// A set of students analysed together, e.g. one cohort or one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Group<'a> {
    pub label: String,
    pub students: Vec<&'a StudentRecord>,
}

impl CohortStudy {
    pub fn new(
        calendar: SemesterCalendar,
        control: CohortGroup,
        intervention: CohortGroup,
    ) -> Result<Self, ReportError> {
        let mut seen = BTreeSet::new();
        for s in control.students.iter().chain(&intervention.students) {
            if !seen.insert(s.student_id.as_str()) {
                return Err(ReportError::DuplicateStudent(s.student_id.clone()));
            }
        }
        Ok(CohortStudy {
            calendar,
            control,
            intervention,
            notices: Vec::new(),
        })
    }

    /// Builds series from logs and attaches clusters and scores. Clusters are
    /// read from the data when present, otherwise computed from each cohort's
    /// questionnaire with k-means, one cohort at a time.
    pub fn from_data(
        calendar: SemesterCalendar,
        control: &CohortData,
        intervention: &CohortData,
        opts: &ReportOptions,
    ) -> Result<Self, ReportError> {
        let mut notices = Vec::new();
        let mut clusters: BTreeMap<String, SrlLevel> = BTreeMap::new();
        for data in [control, intervention] {
            if let Some(given) = &data.clusters {
                clusters.extend(given.iter().cloned());
            } else if let Some(responses) = &data.srl {
                let scored = responses
                    .iter()
                    .map(|r| Ok((r.student_id.clone(), score_questionnaire(r, opts.likert)?)))
                    .collect::<Result<Vec<_>, SrlError>>()?;
                let outcome = kmeans_2(&scored, &opts.kmeans)?;
                clusters.extend(
                    outcome
                        .assignments
                        .into_iter()
                        .map(|a| (a.student_id, a.cluster)),
                );
            } else {
                notices.push(format!("{}: no questionnaire or cluster data", data.name));
            }
        }

        let build = |data: &CohortData, notices: &mut Vec<String>| {
            let scores: BTreeMap<&str, f64> = data
                .scores
                .iter()
                .flatten()
                .map(|(id, s)| (id.as_str(), *s))
                .collect();
            let built = crate::calendar::build_cohort_series(
                &data.logs,
                &calendar,
                &opts.series,
                opts.exec,
            );
            let students = data
                .logs
                .iter()
                .zip(built)
                .map(|(log, b)| {
                    if let Some(w) = b.warning {
                        notices.push(format!(
                            "{}: {} events outside the calendar ignored",
                            log.student_id, w.count
                        ));
                    }
                    StudentRecord {
                        student_id: log.student_id.clone(),
                        series: b.series,
                        cluster: clusters.get(&log.student_id).copied(),
                        score: scores.get(log.student_id.as_str()).copied(),
                    }
                })
                .collect();
            CohortGroup {
                name: data.name.clone(),
                students,
            }
        };
        let c = build(control, &mut notices);
        let i = build(intervention, &mut notices);
        let mut study = CohortStudy::new(calendar, c, i)?;
        study.notices = notices;
        Ok(study)
    }

    pub fn is_empty(&self) -> bool {
        self.control.students.is_empty() && self.intervention.students.is_empty()
    }

    pub fn has_clusters(&self) -> bool {
        let all = self
            .control
            .students
            .iter()
            .chain(&self.intervention.students);
        !self.is_empty() && all.clone().all(|s| s.cluster.is_some())
    }

    fn cohorts(&self) -> [&CohortGroup; 2] {
        [&self.control, &self.intervention]
    }

    pub fn groups(&self, grouping: Grouping) -> Vec<Group<'_>> {
        match grouping {
            Grouping::Cohort => self
                .cohorts()
                .iter()
                .map(|c| Group {
                    label: c.name.clone(),
                    students: c.students.iter().collect(),
                })
                .collect(),
            Grouping::Cluster => self
                .cohorts()
                .iter()
                .flat_map(|c| {
                    [SrlLevel::HighSRL, SrlLevel::LowSRL].map(|level| Group {
                        label: format!("{}/{}", c.name, level.key()),
                        students: c
                            .students
                            .iter()
                            .filter(|s| s.cluster == Some(level))
                            .collect(),
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub group: String,
    pub period: Window,
    pub student_weeks: usize,
    /// Percent of student-weeks with no edit, one edit day, two or more.
    pub percent: [f64; 3],
    pub counts: [usize; 3],
}

pub fn editing_frequency_table(
    study: &CohortStudy,
    grouping: Grouping,
) -> Result<Vec<FrequencyRow>, ReportError> {
    let mut rows = Vec::new();
    for g in study.groups(grouping) {
        if g.students.is_empty() {
            return Err(ReportError::EmptyGroup(g.label));
        }
        for period in [Window::H1, Window::H2] {
            let mut counts = [0usize; 3];
            for s in &g.students {
                for w in weekly_edit_categories(&s.series, &study.calendar, period) {
                    counts[w.category.index()] += 1;
                }
            }
            let total: usize = counts.iter().sum();
            let percent = counts.map(|c| 100.0 * c as f64 / total as f64);
            rows.push(FrequencyRow {
                group: g.label.clone(),
                period,
                student_weeks: total,
                percent,
                counts,
            });
        }
    }
    Ok(rows)
}

/// Samples of the comparison metric (characters per day) for a group.
pub fn metric_sample(
    students: &[&StudentRecord],
    cal: &SemesterCalendar,
    window: Window,
    unit: SampleUnit,
    label: &str,
) -> Result<Vec<f64>, ReportError> {
    if students.is_empty() {
        return Err(ReportError::EmptyGroup(label.to_string()));
    }
    Ok(match unit {
        SampleUnit::DailyCohortAverage => {
            let series: Vec<DailySeries> = students.iter().map(|s| s.series.clone()).collect();
            cohort_daily_average(&series, cal, window, label)?.chars()
        }
        SampleUnit::StudentAverage => students
            .iter()
            .map(|s| student_features(&s.series, cal, window).avg_str_count_per_day)
            .collect(),
    })
}

/// Wilcoxon signed-rank test of the first half against the second half.
pub fn within_group_comparison(
    group: &Group<'_>,
    cal: &SemesterCalendar,
    opts: &ReportOptions,
) -> Result<TestResult, ReportError> {
    let mut h1 = metric_sample(
        &group.students,
        cal,
        Window::H1,
        opts.sample_unit,
        &group.label,
    )?;
    let mut h2 = metric_sample(
        &group.students,
        cal,
        Window::H2,
        opts.sample_unit,
        &group.label,
    )?;
    if opts.zero_days == ZeroDays::Exclude {
        let keep: Vec<usize> = (0..h1.len().min(h2.len()))
            .filter(|i| h1[*i] != 0.0 && h2[*i] != 0.0)
            .collect();
        h1 = keep.iter().map(|i| h1[*i]).collect();
        h2 = keep.iter().map(|i| h2[*i]).collect();
    }
    Ok(wilcoxon_signed_rank(&h1, &h2, &opts.wilcoxon)?.relabel(&["H1", "H2"]))
}

pub fn within_cohort_comparison(
    study: &CohortStudy,
    intervention: bool,
    opts: &ReportOptions,
) -> Result<TestResult, ReportError> {
    let groups = study.groups(Grouping::Cohort);
    within_group_comparison(&groups[usize::from(intervention)], &study.calendar, opts)
}

/// Mann-Whitney U test of control against intervention within a period.
pub fn between_cohort_comparison(
    study: &CohortStudy,
    period: Window,
    opts: &ReportOptions,
) -> Result<TestResult, ReportError> {
    let groups = study.groups(Grouping::Cohort);
    let mut samples = Vec::new();
    for g in &groups {
        let mut s = metric_sample(
            &g.students,
            &study.calendar,
            period,
            opts.sample_unit,
            &g.label,
        )?;
        if opts.zero_days == ZeroDays::Exclude {
            s.retain(|v| *v != 0.0);
        }
        samples.push(s);
    }
    Ok(
        mann_whitney_u(&samples[0], &samples[1], &opts.mann_whitney)?
            .relabel(&[&groups[0].label, &groups[1].label]),
    )
}

/// Pearson correlation of each feature with the score, matched by id.
pub fn feature_correlation_report(
    features: &[(String, StudentFeatures)],
    scores: &[(String, f64)],
) -> Result<Vec<(&'static str, TestResult)>, ReportError> {
    let by_id: BTreeMap<&str, f64> = scores.iter().map(|(id, s)| (id.as_str(), *s)).collect();
    let feature_ids: BTreeSet<&str> = features.iter().map(|(id, _)| id.as_str()).collect();
    if by_id.len() != scores.len() || feature_ids.len() != features.len() {
        return Err(ReportError::MismatchedIds("duplicate ids".into()));
    }
    if let Some(missing) = feature_ids.iter().find(|id| !by_id.contains_key(*id)) {
        return Err(ReportError::MismatchedIds(format!(
            "no score for `{missing}`"
        )));
    }
    if let Some(extra) = by_id.keys().find(|id| !feature_ids.contains(*id)) {
        return Err(ReportError::MismatchedIds(format!(
            "no features for `{extra}`"
        )));
    }
    let y: Vec<f64> = features.iter().map(|(id, _)| by_id[id.as_str()]).collect();
    FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let x: Vec<f64> = features.iter().map(|(_, f)| f.as_array()[j]).collect();
            Ok((*name, pearson_r(&x, &y)?))
        })
        .collect()
}

pub const COMPARED_FEATURES: [(&str, usize); 3] = [
    ("TotalRev", 0),
    ("TotalActiveDay", 3),
    ("TotalActiveWeek", 6),
];

/// One row of the feature comparison. The summaries are always present; the
/// test fails on its own, e.g. when a feature does not vary at all.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureComparison {
    pub feature: &'static str,
    pub control: GroupSummary,
    pub intervention: GroupSummary,
    pub test: Result<TestResult, ReportError>,
}

/// Pooled t tests of control against intervention for three features.
pub fn feature_mean_comparison(
    study: &CohortStudy,
    period: Window,
) -> Result<Vec<FeatureComparison>, ReportError> {
    let cal = &study.calendar;
    let feats = |c: &CohortGroup| -> Result<Vec<[f64; 7]>, ReportError> {
        if c.students.is_empty() {
            return Err(ReportError::EmptyGroup(c.name.clone()));
        }
        Ok(c.students
            .iter()
            .map(|s| student_features(&s.series, cal, period).as_array())
            .collect())
    };
    let a = feats(&study.control)?;
    let b = feats(&study.intervention)?;
    let labels = [
        study.control.name.as_str(),
        study.intervention.name.as_str(),
    ];
    Ok(COMPARED_FEATURES
        .iter()
        .map(|(name, j)| {
            let x: Vec<f64> = a.iter().map(|f| f[*j]).collect();
            let y: Vec<f64> = b.iter().map(|f| f[*j]).collect();
            FeatureComparison {
                feature: name,
                control: GroupSummary::of(labels[0], &x),
                intervention: GroupSummary::of(labels[1], &y),
                test: independent_t_test(&x, &y)
                    .map(|t| t.relabel(&labels))
                    .map_err(ReportError::from),
            }
        })
        .collect())
}

/// Monday-first seasonal indices of each half of a daily series.
pub fn half_seasonality(
    series: &DailySeries,
    cal: &SemesterCalendar,
    period: usize,
    per_half: bool,
) -> Result<[Vec<f64>; 2], ReportError> {
    let phase_offset = |first: usize| first % period;
    if per_half {
        let mut out = [Vec::new(), Vec::new()];
        for (k, w) in [Window::H1, Window::H2].into_iter().enumerate() {
            let values = series.window(cal, w).chars();
            let d = decompose_additive(&values, period)?;
            let off = phase_offset(cal.days(w).start);
            out[k] = (0..period)
                .map(|p| d.seasonal_indices[(p + period - off) % period])
                .collect();
        }
        return Ok(out);
    }
    // whole-semester trend, per-half phase means of the detrended values
    let values = series.chars();
    let d = decompose_additive(&values, period)?;
    let mut out = [Vec::new(), Vec::new()];
    for (k, w) in [Window::H1, Window::H2].into_iter().enumerate() {
        let mut sums = vec![0.0; period];
        let mut counts = vec![0usize; period];
        for i in cal.days(w) {
            if let Some(t) = d.trend[i] {
                sums[i % period] += values[i] - t;
                counts[i % period] += 1;
            }
        }
        let raw: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
            .collect();
        let level = raw.iter().sum::<f64>() / period as f64;
        out[k] = raw.iter().map(|v| v - level).collect();
    }
    Ok(out)
}

/// A rendered output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
const COHORT_COLORS: [&str; 2] = ["blue", "red"];
const CLUSTER_COLORS: [&str; 4] = ["blue", "cyan", "red", "orange"];

fn group_average(g: &Group<'_>, cal: &SemesterCalendar) -> Result<DailySeries, ReportError> {
    if g.students.is_empty() {
        return Err(ReportError::EmptyGroup(g.label.clone()));
    }
    let series: Vec<DailySeries> = g.students.iter().map(|s| s.series.clone()).collect();
    Ok(cohort_daily_average(&series, cal, Window::Full, &g.label)?)
}

fn daily_csv(labels: &[String], averages: &[DailySeries]) -> String {
    let mut s = String::from("date");
    for l in labels {
        let _ = write!(s, ",{l}");
    }
    s.push('\n');
    for i in 0..averages[0].len() {
        let _ = write!(s, "{}", averages[0].values[i].date);
        for a in averages {
            let _ = write!(s, ",{}", fmt_num(a.values[i].chars));
        }
        s.push('\n');
    }
    s
}

fn daily_figures(
    prefix: &str,
    title: &str,
    groups: &[Group<'_>],
    colors: &[&str],
    cal: &SemesterCalendar,
    out: &mut Vec<Artifact>,
) -> Result<Vec<DailySeries>, ReportError> {
    let averages = groups
        .iter()
        .map(|g| group_average(g, cal))
        .collect::<Result<Vec<_>, _>>()?;
    for w in [Window::H1, Window::H2] {
        let range = cal.days(w);
        let first_week = *cal.weeks_in(w).start();
        let mut chart = LineChart::new(
            format!("{title}, {}", w.label()),
            "Day",
            "Characters per day",
        );
        for ((g, a), c) in groups.iter().zip(&averages).zip(colors) {
            chart = chart.line(Line::new(
                g.label.clone(),
                *c,
                a.chars()[range.clone()].to_vec(),
            ));
        }
        let chart = chart.weekly_axis(range.len(), first_week);
        out.push(Artifact {
            name: format!("{prefix}_{}.svg", w.label().to_lowercase()),
            contents: chart.render(),
        });
    }
    let labels: Vec<String> = groups.iter().map(|g| g.label.clone()).collect();
    out.push(Artifact {
        name: format!("{prefix}_daily.csv"),
        contents: daily_csv(&labels, &averages),
    });
    Ok(averages)
}

fn seasonality_figures(
    prefix: &str,
    labels: &[String],
    averages: &[DailySeries],
    cal: &SemesterCalendar,
    opts: &ReportOptions,
    out: &mut Vec<Artifact>,
) -> Result<(), ReportError> {
    let mut csv = String::from("group,window");
    let phases: Vec<String> = if opts.period == 7 {
        WEEKDAYS.iter().map(|d| d.to_string()).collect()
    } else {
        (0..opts.period).map(|p| format!("phase{p}")).collect()
    };
    for p in &phases {
        let _ = write!(csv, ",{}", p.to_lowercase());
    }
    csv.push('\n');
    for (label, a) in labels.iter().zip(averages) {
        let [h1, h2] = half_seasonality(a, cal, opts.period, opts.decompose_per_half)?;
        let chart = LineChart::new(
            format!("Weekly seasonality, {label}"),
            "Day of week",
            "Seasonal component",
        )
        .line(Line::new("H1", "blue", h1.clone()))
        .line(Line::new("H2", "red", h2.clone()))
        .categories(&phases);
        let file = label.replace('/', "_");
        out.push(Artifact {
            name: format!("{prefix}_{file}.svg"),
            contents: chart.render(),
        });
        for (w, v) in [("H1", &h1), ("H2", &h2)] {
            let _ = write!(csv, "{label},{w}");
            for x in v.iter() {
                let _ = write!(csv, ",{}", fmt_num(*x));
            }
            csv.push('\n');
        }
    }
    out.push(Artifact {
        name: format!("{prefix}_seasonality.csv"),
        contents: csv,
    });
    Ok(())
}

/// Daily-average plots per half and seasonality overlays, for cohorts
/// (fig2, fig3) and, when clusters are known, for clusters (fig4, fig5).
/// An empty study yields no artifacts.
pub fn export_figures(
    study: &CohortStudy,
    opts: &ReportOptions,
) -> Result<Vec<Artifact>, ReportError> {
    let mut out = Vec::new();
    if study.is_empty() {
        return Ok(out);
    }
    let cal = &study.calendar;
    let cohorts = study.groups(Grouping::Cohort);
    let avgs = daily_figures(
        "fig2",
        "Mean characters per day by cohort",
        &cohorts,
        &COHORT_COLORS,
        cal,
        &mut out,
    )?;
    let labels: Vec<String> = cohorts.iter().map(|g| g.label.clone()).collect();
    seasonality_figures("fig3", &labels, &avgs, cal, opts, &mut out)?;
    if study.has_clusters() {
        let clusters: Vec<Group<'_>> = study
            .groups(Grouping::Cluster)
            .into_iter()
            .filter(|g| !g.students.is_empty())
            .collect();
        let colors: Vec<&str> = study
            .groups(Grouping::Cluster)
            .iter()
            .zip(CLUSTER_COLORS)
            .filter(|(g, _)| !g.students.is_empty())
            .map(|(_, c)| c)
            .collect();
        let avgs = daily_figures(
            "fig4",
            "Mean characters per day by cluster",
            &clusters,
            &colors,
            cal,
            &mut out,
        )?;
        let labels: Vec<String> = clusters.iter().map(|g| g.label.clone()).collect();
        seasonality_figures("fig5", &labels, &avgs, cal, opts, &mut out)?;
    }
    Ok(out)
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt4(v: Option<f64>) -> String {
    v.map(f4).unwrap_or_default()
}

fn summary_cells(g: &GroupSummary) -> String {
    format!("{},{},{},{}", g.n, g.inactive_days, f4(g.median), f4(g.iqr))
}

fn rank_row(label: &str, r: &Result<TestResult, ReportError>) -> String {
    match r {
        Ok(t) => format!(
            "{label},{},{},{},{},{},{},{},\n",
            summary_cells(&t.group_summaries[0]),
            summary_cells(&t.group_summaries[1]),
            f4(t.statistic),
            opt4(t.z_value),
            f4(t.p_two_tailed),
            opt4(t.effect_size_r),
            t.stars()
        ),
        Err(ReportError::Stats(StatsError::AllZeroDifferences)) => {
            format!("{label},,,,,,,,,,,,,,no change\n")
        }
        Err(e) => format!("{label},,,,,,,,,,,,,,{}\n", e.to_string().replace(',', ";")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub control: String,
    pub intervention: String,
    pub control_n: usize,
    pub intervention_n: usize,
    pub options: ReportOptions,
    pub cluster_proportions: Option<TestResult>,
    pub within_cohort: Vec<(String, Option<TestResult>)>,
    pub between_cohort: Vec<(String, Option<TestResult>)>,
    pub notices: Vec<String>,
}

/// Every table, figure and the JSON summary for a study.
pub fn build_report(
    study: &CohortStudy,
    opts: &ReportOptions,
) -> Result<Vec<Artifact>, ReportError> {
    let mut notices = study.notices.clone();
    if study.is_empty() {
        notices.push("study has no students: nothing to report".into());
    }
    let mut out = Vec::new();
    let cal = &study.calendar;

    if !study.is_empty() {
        let mut t1 = String::from(
            "grouping,group,period,student_weeks,no_edit_pct,once_pct,twice_or_more_pct\n",
        );
        let mut groupings = vec![Grouping::Cohort];
        if study.has_clusters() {
            groupings.push(Grouping::Cluster);
        }
        for grouping in groupings {
            match editing_frequency_table(study, grouping) {
                Ok(rows) => {
                    for r in rows {
                        let _ = writeln!(
                            t1,
                            "{},{},{},{},{:.2},{:.2},{:.2}",
                            if grouping == Grouping::Cohort {
                                "cohort"
                            } else {
                                "cluster"
                            },
                            r.group,
                            r.period.label(),
                            r.student_weeks,
                            r.percent[0],
                            r.percent[1],
                            r.percent[2]
                        );
                    }
                }
                Err(e) => notices.push(format!("table1: {e}")),
            }
        }
        out.push(Artifact {
            name: "table1.csv".into(),
            contents: t1,
        });
    }

    let header = "group,h1_n,h1_inactive_days,h1_median,h1_iqr,h2_n,h2_inactive_days,h2_median,h2_iqr,w,z,p,effect_size_r,sig,note\n";
    let mut within = Vec::new();
    let mut t2 = header.to_string();
    for g in study.groups(Grouping::Cohort) {
        let r = within_group_comparison(&g, cal, opts);
        t2.push_str(&rank_row(&g.label, &r));
        within.push((g.label.clone(), r.ok()));
    }
    out.push(Artifact {
        name: "table2.csv".into(),
        contents: t2,
    });

    let mut between = Vec::new();
    let mut t3 = String::from(
        "period,control_n,control_inactive_days,control_median,control_iqr,intervention_n,intervention_inactive_days,intervention_median,intervention_iqr,u,z,p,effect_size_r,sig,note\n",
    );
    for period in [Window::H1, Window::H2] {
        let r = between_cohort_comparison(study, period, opts);
        t3.push_str(&rank_row(period.label(), &r));
        between.push((period.label().to_string(), r.ok()));
    }
    out.push(Artifact {
        name: "table3.csv".into(),
        contents: t3,
    });

    let mut t4 = header.to_string();
    if study.has_clusters() {
        for g in study.groups(Grouping::Cluster) {
            let r = within_group_comparison(&g, cal, opts);
            t4.push_str(&rank_row(&g.label, &r));
            within.push((g.label.clone(), r.ok()));
        }
    }
    out.push(Artifact {
        name: "table4.csv".into(),
        contents: t4,
    });

    let mut t5 = String::from("feature,r,p,n,sig\n");
    let all: Vec<&StudentRecord> = study
        .control
        .students
        .iter()
        .chain(&study.intervention.students)
        .collect();
    let scored: Vec<&StudentRecord> = all.iter().copied().filter(|s| s.score.is_some()).collect();
    if scored.len() >= 3 {
        let features: Vec<(String, StudentFeatures)> = scored
            .iter()
            .map(|s| {
                (
                    s.student_id.clone(),
                    student_features(&s.series, cal, Window::Full),
                )
            })
            .collect();
        let scores: Vec<(String, f64)> = scored
            .iter()
            .map(|s| (s.student_id.clone(), s.score.unwrap()))
            .collect();
        match feature_correlation_report(&features, &scores) {
            Ok(rows) => {
                for (name, t) in rows {
                    let _ = writeln!(
                        t5,
                        "{name},{},{},{},{}",
                        f4(t.statistic),
                        f4(t.p_two_tailed),
                        scored.len(),
                        t.stars()
                    );
                }
            }
            Err(e) => notices.push(format!("table5: {e}")),
        }
        if scored.len() < all.len() {
            notices.push(format!(
                "table5: {} students without a score left out",
                all.len() - scored.len()
            ));
        }
    } else {
        notices.push("table5: fewer than three scored students".into());
    }
    out.push(Artifact {
        name: "table5.csv".into(),
        contents: t5,
    });

    let mut t6 = String::from(
        "period,feature,control_mean,control_sd,intervention_mean,intervention_sd,t,df,p,sig,note\n",
    );
    for period in [Window::H1, Window::H2] {
        match feature_mean_comparison(study, period) {
            Ok(rows) => {
                for row in rows {
                    let (a, b) = (&row.control, &row.intervention);
                    let test = match &row.test {
                        Ok(t) => format!(
                            "{},{},{},{},",
                            f4(t.statistic),
                            t.df.map(|d| d.to_string()).unwrap_or_default(),
                            f4(t.p_two_tailed),
                            t.stars()
                        ),
                        Err(e) => format!(",,,,{}", e.to_string().replace(',', ";")),
                    };
                    let _ = writeln!(
                        t6,
                        "{},{},{},{},{},{},{test}",
                        period.label(),
                        row.feature,
                        f4(a.mean),
                        f4(a.sd),
                        f4(b.mean),
                        f4(b.sd),
                    );
                }
            }
            Err(e) => notices.push(format!("table6 {}: {e}", period.label())),
        }
    }
    out.push(Artifact {
        name: "table6.csv".into(),
        contents: t6,
    });

    out.extend(export_figures(study, opts)?);

    // raw per-student features so every table cell can be recomputed
    if !study.is_empty() {
        let mut f = String::from("student_id,cohort,cluster,window");
        for n in FEATURE_NAMES {
            let _ = write!(f, ",{n}");
        }
        f.push('\n');
        for c in study.cohorts() {
            for s in &c.students {
                for w in [Window::H1, Window::H2, Window::Full] {
                    let feats = student_features(&s.series, cal, w).as_array();
                    let _ = write!(
                        f,
                        "{},{},{},{}",
                        s.student_id,
                        c.name,
                        s.cluster.map(|l| l.key()).unwrap_or(""),
                        w.label()
                    );
                    for v in feats {
                        let _ = write!(f, ",{}", fmt_num(v));
                    }
                    f.push('\n');
                }
            }
        }
        out.push(Artifact {
            name: "features.csv".into(),
            contents: f,
        });
    }

    let cluster_proportions = if study.has_clusters() {
        let row = |c: &CohortGroup| {
            let high = c
                .students
                .iter()
                .filter(|s| s.cluster == Some(SrlLevel::HighSRL))
                .count() as f64;
            vec![high, c.students.len() as f64 - high]
        };
        match chi_square_independence(&[row(&study.control), row(&study.intervention)]) {
            Ok(t) => Some(t),
            Err(e) => {
                notices.push(format!("cluster proportions: {e}"));
                None
            }
        }
    } else {
        None
    };
    let summary = Summary {
        control: study.control.name.clone(),
        intervention: study.intervention.name.clone(),
        control_n: study.control.students.len(),
        intervention_n: study.intervention.students.len(),
        options: *opts,
        cluster_proportions,
        within_cohort: within,
        between_cohort: between,
        notices,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    out.push(Artifact {
        name: "summary.json".into(),
        contents: json,
    });
    Ok(out)
}

/// Builds a study straight from simulated cohorts.
pub fn simulated_study(
    cal: &SemesterCalendar,
    control: &[(usize, SimProfile)],
    intervention: &[(usize, SimProfile)],
    seed: u64,
    sim: &SimOptions,
    opts: &ReportOptions,
) -> Result<CohortStudy, ReportError> {
    let to_data =
        |name: &str, profiles: &[(usize, SimProfile)]| -> Result<CohortData, ReportError> {
            let c = generate_cohort(name, profiles, cal, seed, sim)?;
            Ok(CohortData {
                name: name.into(),
                logs: c.logs,
                srl: Some(c.srl),
                clusters: None,
                scores: Some(c.scores),
            })
        };
    let c = to_data("control", control)?;
    let i = to_data("intervention", intervention)?;
    CohortStudy::from_data(cal.clone(), &c, &i, opts)
}

/// Within-cohort test p-values of one simulated cohort over many seeds.
pub fn within_cohort_p_values(
    cal: &SemesterCalendar,
    profiles: &[(usize, SimProfile)],
    seeds: std::ops::Range<u64>,
    opts: &ReportOptions,
) -> Result<Vec<f64>, ReportError> {
    let seeds: Vec<u64> = seeds.collect();
    let inner = ReportOptions {
        exec: Exec::Sequential,
        ..*opts
    };
    let sim = SimOptions {
        exec: Exec::Sequential,
        ..SimOptions::default()
    };
    let results = opts.exec.try_map(&seeds, |seed| {
        let c = generate_cohort("sim", profiles, cal, *seed, &sim)?;
        let series =
            crate::calendar::build_cohort_series(&c.logs, cal, &inner.series, Exec::Sequential);
        let students: Vec<StudentRecord> = c
            .logs
            .iter()
            .zip(series)
            .map(|(l, b)| StudentRecord {
                student_id: l.student_id.clone(),
                series: b.series,
                cluster: None,
                score: None,
            })
            .collect();
        let group = Group {
            label: "sim".into(),
            students: students.iter().collect(),
        };
        match within_group_comparison(&group, cal, &inner) {
            Ok(t) => Ok(t.p_two_tailed),
            Err(ReportError::Stats(StatsError::AllZeroDifferences)) => Ok(1.0),
            Err(e) => Err(e),
        }
    })?;
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub runs: usize,
    pub rejections: usize,
    pub rate: f64,
}

/// Share of seeds whose within-cohort test rejects at `alpha`.
pub fn rejection_rate(p_values: &[f64], alpha: f64) -> Calibration {
    let rejections = p_values.iter().filter(|p| **p < alpha).count();
    Calibration {
        runs: p_values.len(),
        rejections,
        rate: rejections as f64 / p_values.len().max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::SeriesOwner;
    use chrono::NaiveDate;

    fn cal() -> SemesterCalendar {
        SemesterCalendar::ten_week(NaiveDate::from_ymd_opt(2021, 9, 27).unwrap()).unwrap()
    }

    fn student(id: &str, f: impl Fn(usize) -> f64, cluster: Option<SrlLevel>) -> StudentRecord {
        let mut s = DailySeries::zeros(SeriesOwner::Student(id.into()), &cal());
        for (d, v) in s.values.iter_mut().enumerate() {
            v.chars = f(d);
            v.revisions = if v.chars > 0.0 { 1.0 } else { 0.0 };
        }
        StudentRecord {
            student_id: id.into(),
            series: s,
            cluster,
            score: None,
        }
    }

    fn study(control: Vec<StudentRecord>, intervention: Vec<StudentRecord>) -> CohortStudy {
        CohortStudy::new(
            cal(),
            CohortGroup {
                name: "control".into(),
                students: control,
            },
            CohortGroup {
                name: "intervention".into(),
                students: intervention,
            },
        )
        .unwrap()
    }

    #[test]
    fn once_a_week_is_all_once() {
        let s = study(
            vec![student("a", |d| if d % 7 == 2 { 10.0 } else { 0.0 }, None)],
            vec![student("b", |_| 0.0, None)],
        );
        let rows = editing_frequency_table(&s, Grouping::Cohort).unwrap();
        assert_eq!(rows[0].percent, [0.0, 100.0, 0.0]);
        assert_eq!(rows[2].percent, [100.0, 0.0, 0.0]);
        for r in rows {
            assert!((r.percent.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_group_rejected() {
        let s = study(
            vec![student("a", |_| 1.0, Some(SrlLevel::HighSRL))],
            vec![student("b", |_| 1.0, Some(SrlLevel::HighSRL))],
        );
        assert_eq!(
            editing_frequency_table(&s, Grouping::Cluster).unwrap_err(),
            ReportError::EmptyGroup("control/low".into())
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = CohortStudy::new(
            cal(),
            CohortGroup {
                name: "c".into(),
                students: vec![student("a", |_| 0.0, None)],
            },
            CohortGroup {
                name: "i".into(),
                students: vec![student("a", |_| 0.0, None)],
            },
        );
        assert_eq!(r.unwrap_err(), ReportError::DuplicateStudent("a".into()));
    }

    #[test]
    fn identical_halves_no_change() {
        let s = study(
            vec![student("a", |d| (d % 35) as f64, None)],
            vec![student("b", |d| d as f64, None)],
        );
        let err = within_cohort_comparison(&s, false, &ReportOptions::default()).unwrap_err();
        assert_eq!(err, ReportError::Stats(StatsError::AllZeroDifferences));
        let rows = build_report(&s, &ReportOptions::default()).unwrap();
        let t2 = &rows
            .iter()
            .find(|a| a.name == "table2.csv")
            .unwrap()
            .contents;
        assert!(t2.lines().nth(1).unwrap().ends_with("no change"));
    }

    #[test]
    fn disjoint_cohorts_give_zero_u() {
        let s = study(
            vec![student("a", |d| 1.0 + d as f64, None)],
            vec![student("b", |d| 1000.0 + d as f64, None)],
        );
        let t = between_cohort_comparison(&s, Window::H1, &ReportOptions::default()).unwrap();
        assert_eq!(t.statistic, 0.0);
    }

    #[test]
    fn swapping_cohorts_keeps_magnitudes() {
        let a = vec![
            student("a", |d| ((d * 37) % 11) as f64, None),
            student("a2", |d| (d % 5) as f64, None),
        ];
        let b = vec![
            student("b", |d| ((d * 13) % 17) as f64 + 2.0, None),
            student(
                "b2",
                |d| if d / 7 % 3 == 0 { (d % 4) as f64 } else { 0.0 },
                None,
            ),
        ];
        let s1 = study(a.clone(), b.clone());
        let s2 = study(b, a);
        let o = ReportOptions::default();
        for w in [Window::H1, Window::H2] {
            let t1 = between_cohort_comparison(&s1, w, &o).unwrap();
            let t2 = between_cohort_comparison(&s2, w, &o).unwrap();
            assert!((t1.z_value.unwrap().abs() - t2.z_value.unwrap().abs()).abs() < 1e-12);
            assert!((t1.p_two_tailed - t2.p_two_tailed).abs() < 1e-12);
        }
        let f1 = feature_mean_comparison(&s1, Window::H2).unwrap();
        let f2 = feature_mean_comparison(&s2, Window::H2).unwrap();
        for (x, y) in f1.iter().zip(&f2) {
            let (x, y) = (x.test.as_ref().unwrap(), y.test.as_ref().unwrap());
            assert!((x.statistic + y.statistic).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_cohorts_t_zero() {
        let s = study(
            vec![
                student("a", |d| d as f64, None),
                student("c", |d| if d % 21 < 7 { 1.0 } else { 0.0 }, None),
            ],
            vec![
                student("b", |d| d as f64, None),
                student("e", |d| if d % 21 < 7 { 1.0 } else { 0.0 }, None),
            ],
        );
        for row in feature_mean_comparison(&s, Window::H1).unwrap() {
            assert_eq!(row.test.unwrap().statistic, 0.0);
        }
    }

    #[test]
    fn correlation_ids_must_match() {
        let f = student_features(&student("a", |_| 1.0, None).series, &cal(), Window::Full);
        let features = vec![
            ("a".to_string(), f),
            ("b".to_string(), f),
            ("c".to_string(), f),
        ];
        let scores = vec![
            ("a".to_string(), 1.0),
            ("b".to_string(), 2.0),
            ("x".to_string(), 3.0),
        ];
        assert!(matches!(
            feature_correlation_report(&features, &scores),
            Err(ReportError::MismatchedIds(_))
        ));
    }

    #[test]
    fn correlation_with_copy_is_one() {
        // student i is active in the first i + 1 weeks
        let features: Vec<(String, StudentFeatures)> = (0..8)
            .map(|i| {
                let s = student(
                    &format!("s{i}"),
                    |d| if d / 7 <= i { 5.0 } else { 0.0 },
                    None,
                );
                (
                    s.student_id.clone(),
                    student_features(&s.series, &cal(), Window::Full),
                )
            })
            .collect();
        let scores: Vec<(String, f64)> = features
            .iter()
            .map(|(id, f)| (id.clone(), f.total_active_week as f64))
            .collect();
        let out = feature_correlation_report(&features, &scores).unwrap();
        let (name, t) = &out[6];
        assert_eq!(*name, "TotalActiveWeek");
        assert!((t.statistic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_study_has_no_figures() {
        let s = study(Vec::new(), Vec::new());
        assert!(export_figures(&s, &ReportOptions::default())
            .unwrap()
            .is_empty());
        let all = build_report(&s, &ReportOptions::default()).unwrap();
        let summary = &all
            .iter()
            .find(|a| a.name == "summary.json")
            .unwrap()
            .contents;
        assert!(summary.contains("nothing to report"));
    }

    #[test]
    fn seasonality_keys_by_weekday() {
        // Sunday spike every week
        let rec = student("a", |d| if d % 7 == 6 { 100.0 } else { 10.0 }, None);
        for per_half in [true, false] {
            let [h1, h2] = half_seasonality(&rec.series, &cal(), 7, per_half).unwrap();
            for v in [h1, h2] {
                let argmax = (0..7).max_by(|a, b| v[*a].total_cmp(&v[*b])).unwrap();
                assert_eq!(argmax, 6);
                assert!(v.iter().sum::<f64>().abs() < 1e-9);
            }
        }
    }
}
