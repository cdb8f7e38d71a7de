//! Semester calendar, per-day engagement series and the per-student features.

use std::io::Write;

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Exec;
use crate::revlog::{counted_chars, CountMode, RevisionLog};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalendarError {
    #[error("calendar start {0} is not a Monday")]
    NotMonday(NaiveDate),
    #[error("intervention week {week} outside [2, {weeks}]")]
    BadInterventionWeek { week: u32, weeks: u32 },
    #[error("calendar needs at least two weeks")]
    TooShort,
    #[error("utc offset of {0} minutes is out of range")]
    BadOffset(i32),
    #[error("cohort has no students")]
    EmptyCohort,
    #[error("series do not share the same days")]
    MisalignedSeries,
}

/// Maps timestamps onto (week, weekday, half) for one teaching period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemesterCalendar {
    /// Monday of week 1.
    pub start_monday: NaiveDate,
    pub weeks: u32,
    /// First week of the second half.
    pub intervention_week: u32,
    /// Local zone as minutes east of UTC; day boundaries are local midnights.
    #[serde(default)]
    pub utc_offset_minutes: i32,
    #[serde(default = "default_lecture_day")]
    pub lecture_weekday: Weekday,
}

fn default_lecture_day() -> Weekday {
    Weekday::Tue
}

impl SemesterCalendar {
    pub fn new(
        start_monday: NaiveDate,
        weeks: u32,
        intervention_week: u32,
    ) -> Result<Self, CalendarError> {
        let cal = SemesterCalendar {
            start_monday,
            weeks,
            intervention_week,
            utc_offset_minutes: 0,
            lecture_weekday: Weekday::Tue,
        };
        cal.validate()?;
        Ok(cal)
    }

    /// Ten weeks, second half from week 6.
    pub fn ten_week(start_monday: NaiveDate) -> Result<Self, CalendarError> {
        Self::new(start_monday, 10, 6)
    }

    pub fn with_utc_offset(mut self, minutes: i32) -> Result<Self, CalendarError> {
        self.utc_offset_minutes = minutes;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CalendarError> {
        if self.start_monday.weekday() != Weekday::Mon {
            return Err(CalendarError::NotMonday(self.start_monday));
        }
        if self.weeks < 2 {
            return Err(CalendarError::TooShort);
        }
        if self.intervention_week < 2 || self.intervention_week > self.weeks {
            return Err(CalendarError::BadInterventionWeek {
                week: self.intervention_week,
                weeks: self.weeks,
            });
        }
        if FixedOffset::east_opt(self.utc_offset_minutes * 60).is_none() {
            return Err(CalendarError::BadOffset(self.utc_offset_minutes));
        }
        Ok(())
    }

    pub fn tz(&self) -> FixedOffset {
        FixedOffset::east_opt(self.utc_offset_minutes * 60).expect("validated offset")
    }

    pub fn num_days(&self) -> usize {
        self.weeks as usize * 7
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_monday + Duration::days(day as i64)
    }

    /// Zero-based day index of a timestamp, if it falls inside the calendar.
    pub fn day_index(&self, ts: &DateTime<FixedOffset>) -> Option<usize> {
        let local = ts.with_timezone(&self.tz()).date_naive();
        let d = (local - self.start_monday).num_days();
        (d >= 0 && (d as usize) < self.num_days()).then_some(d as usize)
    }

    /// One-based week number of a day index.
    pub fn week_of(&self, day: usize) -> u32 {
        (day / 7) as u32 + 1
    }

    /// Zero-based day range covered by a window.
    pub fn days(&self, window: Window) -> std::ops::Range<usize> {
        let split = (self.intervention_week as usize - 1) * 7;
        match window {
            Window::H1 => 0..split,
            Window::H2 => split..self.num_days(),
            Window::Full => 0..self.num_days(),
        }
    }

    /// One-based inclusive week range covered by a window.
    pub fn weeks_in(&self, window: Window) -> std::ops::RangeInclusive<u32> {
        match window {
            Window::H1 => 1..=self.intervention_week - 1,
            Window::H2 => self.intervention_week..=self.weeks,
            Window::Full => 1..=self.weeks,
        }
    }
}

/// Assessment period: before the intervention, after it, or the whole calendar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Window {
    H1,
    H2,
    Full,
}

impl Window {
    pub fn label(self) -> &'static str {
        match self {
            Window::H1 => "H1",
            Window::H2 => "H2",
            Window::Full => "full",
        }
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "h1" => Ok(Window::H1),
            "h2" => Ok(Window::H2),
            "full" => Ok(Window::Full),
            other => Err(format!(
                "unknown window `{other}` (expected h1, h2 or full)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesOwner {
    Student(String),
    CohortAverage(String),
}

impl SeriesOwner {
    pub fn name(&self) -> &str {
        match self {
            SeriesOwner::Student(s) | SeriesOwner::CohortAverage(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayValue {
    pub date: NaiveDate,
    pub chars: f64,
    pub revisions: f64,
}

impl DayValue {
    pub fn is_active(&self) -> bool {
        self.chars + self.revisions > 0.0
    }
}

/// Per-day engagement values over a contiguous run of days, zero-filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub owner: SeriesOwner,
    pub values: Vec<DayValue>,
}

impl DailySeries {
    pub fn zeros(owner: SeriesOwner, cal: &SemesterCalendar) -> Self {
        let values = (0..cal.num_days())
            .map(|d| DayValue {
                date: cal.date(d),
                chars: 0.0,
                revisions: 0.0,
            })
            .collect();
        DailySeries { owner, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn chars(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.chars).collect()
    }

    pub fn revisions(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.revisions).collect()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.values.first().map(|v| v.date)
    }

    /// The days of this series that fall inside `window`.
    pub fn window(&self, cal: &SemesterCalendar, window: Window) -> DailySeries {
        let range = cal.days(window);
        let values = self
            .values
            .iter()
            .filter(|v| {
                let d = (v.date - cal.start_monday).num_days();
                d >= range.start as i64 && d < range.end as i64
            })
            .copied()
            .collect();
        DailySeries {
            owner: self.owner.clone(),
            values,
        }
    }

    /// Writes `date,chars,revisions` rows.
    pub fn write_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["date", "chars", "revisions"])?;
        for v in &self.values {
            w.write_record([v.date.to_string(), fmt_num(v.chars), fmt_num(v.revisions)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip formatting, without a trailing `.0` on integers.
pub(crate) fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub count_mode: CountMode,
}

/// Events that fell outside the calendar; reported, never silently dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventOutOfCalendar {
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBuild {
    pub series: DailySeries,
    pub warning: Option<EventOutOfCalendar>,
}

pub fn build_daily_series(
    log: &RevisionLog,
    cal: &SemesterCalendar,
    opts: &SeriesOptions,
) -> SeriesBuild {
    let mut series = DailySeries::zeros(SeriesOwner::Student(log.student_id.clone()), cal);
    let mut outside = 0;
    for e in &log.events {
        match cal.day_index(&e.timestamp) {
            Some(d) => {
                let v = &mut series.values[d];
                v.chars += counted_chars(e, opts.count_mode) as f64;
                v.revisions += 1.0;
            }
            None => outside += 1,
        }
    }
    SeriesBuild {
        series,
        warning: (outside > 0).then_some(EventOutOfCalendar { count: outside }),
    }
}

/// Builds every student's series with the given strategy, preserving order.
pub fn build_cohort_series(
    logs: &[RevisionLog],
    cal: &SemesterCalendar,
    opts: &SeriesOptions,
    exec: Exec,
) -> Vec<SeriesBuild> {
    exec.map(logs, |log| build_daily_series(log, cal, opts))
}

/// Per-day mean over all students in the window. Inactive students count in
/// the denominator.
pub fn cohort_daily_average(
    series_set: &[DailySeries],
    cal: &SemesterCalendar,
    window: Window,
    cohort: &str,
) -> Result<DailySeries, CalendarError> {
    let first = series_set.first().ok_or(CalendarError::EmptyCohort)?;
    if series_set
        .iter()
        .any(|s| s.len() != first.len() || s.first_date() != first.first_date())
    {
        return Err(CalendarError::MisalignedSeries);
    }
    let windowed: Vec<DailySeries> = series_set.iter().map(|s| s.window(cal, window)).collect();
    let n = windowed.len() as f64;
    let values = (0..windowed[0].len())
        .map(|i| {
            let (c, r) = windowed.iter().fold((0.0, 0.0), |(c, r), s| {
                (c + s.values[i].chars, r + s.values[i].revisions)
            });
            DayValue {
                date: windowed[0].values[i].date,
                chars: c / n,
                revisions: r / n,
            }
        })
        .collect();
    Ok(DailySeries {
        owner: SeriesOwner::CohortAverage(cohort.to_string()),
        values,
    })
}

pub const FEATURE_NAMES: [&str; 7] = [
    "TotalRev",
    "AvgStrCountPerDay",
    "AvgRevPerDay",
    "TotalActiveDay",
    "AvgStrCountPerWeek",
    "AvgRevPerWeek",
    "TotalActiveWeek",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentFeatures {
    pub total_rev: f64,
    pub avg_str_count_per_day: f64,
    pub avg_rev_per_day: f64,
    pub total_active_day: u32,
    pub avg_str_count_per_week: f64,
    pub avg_rev_per_week: f64,
    pub total_active_week: u32,
    pub window: Window,
}

impl StudentFeatures {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.total_rev,
            self.avg_str_count_per_day,
            self.avg_rev_per_day,
            self.total_active_day as f64,
            self.avg_str_count_per_week,
            self.avg_rev_per_week,
            self.total_active_week as f64,
        ]
    }
}

/// Averages divide by every day (week) of the window, not only active ones.
pub fn student_features(
    series: &DailySeries,
    cal: &SemesterCalendar,
    window: Window,
) -> StudentFeatures {
    let days = cal.days(window);
    let weeks = cal.weeks_in(window);
    let n_days = days.len() as f64;
    let n_weeks = (weeks.end() - weeks.start() + 1) as f64;
    let mut total_chars = 0.0;
    let mut total_rev = 0.0;
    let mut active_days = 0u32;
    let mut active_weeks = std::collections::BTreeSet::new();
    for v in series.window(cal, window).values {
        total_chars += v.chars;
        total_rev += v.revisions;
        if v.is_active() {
            active_days += 1;
            active_weeks.insert((v.date - cal.start_monday).num_days() / 7);
        }
    }
    StudentFeatures {
        total_rev,
        avg_str_count_per_day: total_chars / n_days,
        avg_rev_per_day: total_rev / n_days,
        total_active_day: active_days,
        avg_str_count_per_week: total_chars / n_weeks,
        avg_rev_per_week: total_rev / n_weeks,
        total_active_week: active_weeks.len() as u32,
        window,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditCategory {
    NoEdit,
    Once,
    TwiceOrMore,
}

impl EditCategory {
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => EditCategory::NoEdit,
            1 => EditCategory::Once,
            _ => EditCategory::TwiceOrMore,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeeklyEditCategory {
    pub week: u32,
    pub category: EditCategory,
}

/// Categorizes each week of the window by its number of active days.
pub fn weekly_edit_categories(
    series: &DailySeries,
    cal: &SemesterCalendar,
    window: Window,
) -> Vec<WeeklyEditCategory> {
    let mut counts = vec![0usize; cal.weeks as usize];
    for v in &series.values {
        let d = (v.date - cal.start_monday).num_days();
        if d >= 0 && (d as usize) < cal.num_days() && v.is_active() {
            counts[d as usize / 7] += 1;
        }
    }
    cal.weeks_in(window)
        .map(|w| WeeklyEditCategory {
            week: w,
            category: EditCategory::from_count(counts[w as usize - 1]),
        })
        .collect()
}

/// Categorizes weeks by number of writing sessions instead of active days. A
/// session ends after `idle_gap_minutes` without an event.
pub fn weekly_session_categories(
    log: &RevisionLog,
    cal: &SemesterCalendar,
    window: Window,
    idle_gap_minutes: i64,
) -> Vec<WeeklyEditCategory> {
    let mut counts = vec![0usize; cal.weeks as usize];
    let mut last: Option<DateTime<FixedOffset>> = None;
    for e in &log.events {
        let Some(day) = cal.day_index(&e.timestamp) else {
            continue;
        };
        let new_session = match last {
            Some(prev) => {
                (e.timestamp - prev).num_minutes() > idle_gap_minutes
                    || cal.day_index(&prev).map(|d| d / 7) != Some(day / 7)
            }
            None => true,
        };
        if new_session {
            counts[day / 7] += 1;
        }
        last = Some(e.timestamp);
    }
    cal.weeks_in(window)
        .map(|w| WeeklyEditCategory {
            week: w,
            category: EditCategory::from_count(counts[w as usize - 1]),
        })
        .collect()
}

/// Writes one row per (student, window): `student_id,window` followed by the
/// seven feature columns.
pub fn write_features_csv<W: Write>(
    rows: &[(String, StudentFeatures)],
    sink: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["student_id", "window"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for (id, f) in rows {
        let mut rec = vec![id.clone(), f.window.label().to_string()];
        rec.extend(f.as_array().iter().map(|v| fmt_num(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
