#![allow(dead_code)]

use chrono::NaiveDate;
use writelog::calendar::{DailySeries, SemesterCalendar, SeriesOwner, Window};
use writelog::feedback::{FeedbackInput, PatternThresholds};

pub fn calendar() -> SemesterCalendar {
    SemesterCalendar::ten_week(NaiveDate::from_ymd_opt(2021, 9, 27).unwrap()).unwrap()
}

pub fn series(
    owner: SeriesOwner,
    cal: &SemesterCalendar,
    window: Window,
    f: impl Fn(usize) -> f64,
) -> DailySeries {
    let mut s = DailySeries::zeros(owner, cal).window(cal, window);
    for (i, v) in s.values.iter_mut().enumerate() {
        v.chars = f(i);
        v.revisions = (v.chars / 40.0).ceil();
    }
    s
}

/// A late starter who writes mostly in week 5, in a cohort that is ahead of
/// last year's.
pub fn feedback_fixture() -> FeedbackInput {
    let cal = calendar();
    let student = series(
        SeriesOwner::Student("s042".into()),
        &cal,
        Window::Full,
        |d| match d {
            16 => 120.0,
            24 => 310.0,
            29 => 1480.0,
            31 => 990.0,
            33 => 2210.0,
            _ => 0.0,
        },
    );
    let cohort = series(
        SeriesOwner::CohortAverage("2021".into()),
        &cal,
        Window::H1,
        |d| [700.0, 820.0, 1400.0, 450.0, 900.0, 1500.0, 1520.92][d % 7] + 10.0 * (d / 7) as f64,
    );
    let reference = series(
        SeriesOwner::CohortAverage("2020".into()),
        &cal,
        Window::H1,
        |d| [500.0, 480.0, 560.0, 300.0, 640.0, 900.0, 1480.0][d % 7] + 5.0 * (d / 7) as f64,
    );
    FeedbackInput::new(
        "s042",
        &student,
        &cohort,
        &reference,
        &cal,
        &PatternThresholds::default(),
    )
    .unwrap()
}
