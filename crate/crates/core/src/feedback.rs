//! Personalized engagement feedback: a short email built from a slot
//! template, plus a chart comparing the student's daily edits with the
//! current and the previous cohort over the first half of the semester.
//!
//! The email has a goal, a progress and a next-steps section. Grades are
//! never part of the input, so they cannot leak into the text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{DailySeries, SemesterCalendar, StudentFeatures, Window};
use crate::svg::{Line, LineChart};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeedbackError {
    #[error("template slot `{0}` has no binding")]
    UnboundSlot(String),
    #[error("series are not aligned on the same {0} days")]
    Misaligned(usize),
}

pub const SLOTS: [&str; 5] = [
    "active_weeks",
    "dominant_week_clause",
    "late_start_clause",
    "cohort_comparison_clause",
    "chart_ref",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternThresholds {
    /// A week is dominant when it holds more than this share of the characters.
    pub dominant_share: f64,
    /// First active week at or after which the start counts as late.
    pub late_start_week: u32,
}

impl Default for PatternThresholds {
    fn default() -> Self {
        PatternThresholds {
            dominant_share: 0.5,
            late_start_week: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSummary {
    pub active_weeks: u32,
    pub dominant_week: Option<u32>,
    pub late_start: bool,
    pub first_active_week: Option<u32>,
    pub cohort_ahead: bool,
    pub weeks_in_window: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackInput {
    pub student_id: String,
    pub student_series_h1: DailySeries,
    pub cohort_series_h1: DailySeries,
    pub reference_cohort_series_h1: DailySeries,
    pub features_h1: StudentFeatures,
    pub pattern: PatternSummary,
    /// Week number of the first day in the series.
    pub first_week: u32,
}

impl FeedbackInput {
    pub fn new(
        student_id: impl Into<String>,
        student: &DailySeries,
        cohort: &DailySeries,
        reference: &DailySeries,
        cal: &SemesterCalendar,
        thresholds: &PatternThresholds,
    ) -> Result<Self, FeedbackError> {
        let student = student.window(cal, Window::H1);
        let days = cal.days(Window::H1).len();
        for s in [&student, cohort, reference] {
            if s.len() != days || s.first_date() != Some(cal.start_monday) {
                return Err(FeedbackError::Misaligned(days));
            }
        }
        let features = crate::calendar::student_features(&student, cal, Window::H1);
        let pattern = classify_pattern(&features, &student, cohort, reference, cal, thresholds);
        Ok(FeedbackInput {
            student_id: student_id.into(),
            student_series_h1: student,
            cohort_series_h1: cohort.clone(),
            reference_cohort_series_h1: reference.clone(),
            features_h1: features,
            pattern,
            first_week: 1,
        })
    }
}

fn mean_chars(s: &DailySeries) -> f64 {
    if s.is_empty() {
        0.0
    } else {
        s.values.iter().map(|v| v.chars).sum::<f64>() / s.len() as f64
    }
}

pub fn classify_pattern(
    features: &StudentFeatures,
    series: &DailySeries,
    cohort: &DailySeries,
    reference: &DailySeries,
    cal: &SemesterCalendar,
    thresholds: &PatternThresholds,
) -> PatternSummary {
    let weeks = cal.weeks_in(Window::H1);
    let mut per_week: BTreeMap<u32, f64> = weeks.clone().map(|w| (w, 0.0)).collect();
    let mut first_active = None;
    for v in &series.values {
        let week = ((v.date - cal.start_monday).num_days() / 7) as u32 + 1;
        if let Some(total) = per_week.get_mut(&week) {
            *total += v.chars;
            if v.is_active() && first_active.is_none() {
                first_active = Some(week);
            }
        }
    }
    let total: f64 = per_week.values().sum();
    let dominant_week = (total > 0.0)
        .then(|| {
            per_week
                .iter()
                .find(|(_, c)| **c > thresholds.dominant_share * total)
                .map(|(w, _)| *w)
        })
        .flatten();
    PatternSummary {
        active_weeks: features.total_active_week,
        dominant_week,
        late_start: first_active.is_some_and(|w| w >= thresholds.late_start_week),
        first_active_week: first_active,
        cohort_ahead: mean_chars(cohort) > mean_chars(reference),
        weeks_in_window: weeks.end() - weeks.start() + 1,
    }
}

pub const DEFAULT_TEMPLATE: &str = "\
Hi,

This note looks at when and how often you have been working on your \
reflective journal, using the edit history of your document. It is separate \
from the comments on the content of your entries.

What we are aiming for
The aim for the journal is a steady habit: short entries added week by week, \
each one building on the last, rather than one long push near a hand-in date. \
People who plan their study this way usually find the entries easier to write \
and more useful to look back on.

How you are doing
{{chart_ref}} {{cohort_comparison_clause}}
Counting the first five weeks, you were active for {{active_weeks}}. \
{{late_start_clause}} {{dominant_week_clause}}

Next steps
Pick one day a week to open the journal, for instance the evening after the \
seminar, and add a few lines even in busy weeks. Short, regular entries tend \
to be worth more than occasional long ones.

Nothing in this note affects your marks; the numbers are only here to help \
you think about your own routine.

Kind regards
";

fn bind(slot: &str, input: &FeedbackInput) -> Option<String> {
    let p = &input.pattern;
    Some(match slot {
        "student_id" => input.student_id.clone(),
        "active_weeks" => match p.active_weeks {
            1 => "1 week".to_string(),
            n => format!("{n} weeks"),
        },
        "dominant_week_clause" => match p.dominant_week {
            Some(w) => format!("More than half of the characters you have edited so far fall in Week {w}."),
            None => String::new(),
        },
        "late_start_clause" => {
            if p.late_start {
                let w = p.first_active_week.unwrap_or(p.weeks_in_window);
                format!("Your first edits appeared in Week {w}.")
            } else if p.active_weeks == p.weeks_in_window {
                "You added to the journal in every one of these weeks, which is exactly the habit we hope to see."
                    .to_string()
            } else if p.active_weeks == 0 {
                "There are no edits in your document yet.".to_string()
            } else {
                String::new()
            }
        }
        "cohort_comparison_clause" => if p.cohort_ahead {
            "As a group, this year's students have edited more in these weeks than last year's did."
        } else {
            "As a group, this year's students have edited less in these weeks than last year's did."
        }
        .to_string(),
        "chart_ref" => format!(
            "In the attached chart ({}.svg) your daily character count is the red line; blue is last year's cohort and green is your current cohort.",
            input.student_id
        ),
        _ => return None,
    })
}

/// Fills `{{slot}}` markers. Unknown slots are an error; an unterminated
/// `{{` is kept as text. Empty clauses leave no doubled spaces behind.
pub fn render_feedback_email(
    input: &FeedbackInput,
    template: &str,
) -> Result<String, FeedbackError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let Some(len) = rest[start + 2..].find("}}") else {
            break;
        };
        out.push_str(&rest[..start]);
        let name = rest[start + 2..start + 2 + len].trim();
        let value =
            bind(name, input).ok_or_else(|| FeedbackError::UnboundSlot(name.to_string()))?;
        out.push_str(&value);
        rest = &rest[start + 2 + len + 2..];
    }
    out.push_str(rest);
    Ok(tidy(&out))
}

fn tidy(text: &str) -> String {
    text.lines()
        .map(|l| {
            l.split(' ')
                .filter(|w| !w.is_empty())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
        + if text.ends_with('\n') { "\n" } else { "" }
}

/// Red: student, blue: last year's cohort, green: this year's cohort.
pub fn render_comparison_chart(input: &FeedbackInput) -> String {
    let days = input.student_series_h1.len();
    LineChart::new(
        "Characters edited per day, first five weeks",
        "Day",
        "Characters per day",
    )
    .line(Line::new("You", "red", input.student_series_h1.chars()))
    .line(Line::new(
        "Last year's cohort",
        "blue",
        input.reference_cohort_series_h1.chars(),
    ))
    .line(Line::new(
        "This year's cohort",
        "green",
        input.cohort_series_h1.chars(),
    ))
    .weekly_axis(days, input.first_week)
    .render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::{DailySeries, SeriesOwner};
    use chrono::NaiveDate;

    fn cal() -> SemesterCalendar {
        SemesterCalendar::ten_week(NaiveDate::from_ymd_opt(2021, 9, 27).unwrap()).unwrap()
    }

    fn series(owner: SeriesOwner, f: impl Fn(usize) -> f64) -> DailySeries {
        let c = cal();
        let mut s = DailySeries::zeros(owner, &c).window(&c, Window::H1);
        for (i, v) in s.values.iter_mut().enumerate() {
            v.chars = f(i);
            v.revisions = if v.chars > 0.0 { 1.0 } else { 0.0 };
        }
        s
    }

    fn input_for(student: impl Fn(usize) -> f64, cohort: f64, reference: f64) -> FeedbackInput {
        let s = series(SeriesOwner::Student("s1".into()), student);
        let c = series(SeriesOwner::CohortAverage("now".into()), |_| cohort);
        let r = series(SeriesOwner::CohortAverage("before".into()), |_| reference);
        FeedbackInput::new("s1", &s, &c, &r, &cal(), &PatternThresholds::default()).unwrap()
    }

    #[test]
    fn late_concentrated_writer() {
        // active on one day in week 4 and three days in week 5
        let input = input_for(
            |d| match d {
                22 => 50.0,
                28 | 30 | 33 => 400.0,
                _ => 0.0,
            },
            1041.56,
            709.0,
        );
        let p = input.pattern;
        assert_eq!(p.dominant_week, Some(5));
        assert!(p.late_start);
        assert!(p.cohort_ahead);
        assert_eq!(p.active_weeks, 2);
    }

    #[test]
    fn uniform_writer() {
        let input = input_for(|_| 100.0, 1.0, 2.0);
        assert_eq!(input.pattern.dominant_week, None);
        assert_eq!(input.pattern.active_weeks, 5);
        assert!(!input.pattern.late_start);
        assert!(!input.pattern.cohort_ahead);
        let text = render_feedback_email(&input, DEFAULT_TEMPLATE).unwrap();
        assert!(text.contains("active for 5 weeks"));
        assert!(text.contains("every one of these weeks"));
        assert!(!text.contains("More than half"));
    }

    #[test]
    fn three_active_weeks_email() {
        let input = input_for(
            |d| match d {
                15 => 20.0,
                22 => 30.0,
                29 | 31 => 900.0,
                _ => 0.0,
            },
            2.0,
            1.0,
        );
        assert_eq!(input.pattern.active_weeks, 3);
        let text = render_feedback_email(&input, DEFAULT_TEMPLATE).unwrap();
        assert!(text.contains("active for 3 weeks"), "{text}");
        assert!(text.contains("Week 5"));
        assert!(text.contains("What we are aiming for"));
        assert!(text.contains("Next steps"));
        assert!(text.contains("Nothing in this note affects your marks"));
        assert!(!text.contains("  "));
        assert_eq!(
            text,
            render_feedback_email(&input, DEFAULT_TEMPLATE).unwrap()
        );
    }

    #[test]
    fn unknown_slot() {
        let input = input_for(|_| 0.0, 1.0, 1.0);
        assert_eq!(
            render_feedback_email(&input, "Hi {{grade}}").unwrap_err(),
            FeedbackError::UnboundSlot("grade".into())
        );
        assert_eq!(
            render_feedback_email(&input, "open {{ brace").unwrap(),
            "open {{ brace"
        );
    }

    #[test]
    fn misaligned_series_rejected() {
        let s = series(SeriesOwner::Student("s".into()), |_| 0.0);
        let mut short = s.clone();
        short.values.pop();
        assert!(
            FeedbackInput::new("s", &s, &short, &s, &cal(), &PatternThresholds::default()).is_err()
        );
    }

    #[test]
    fn chart_zero_and_spike() {
        let flat = render_comparison_chart(&input_for(|_| 0.0, 0.0, 0.0));
        let doc = roxmltree::Document::parse(&flat).unwrap();
        let lines: Vec<_> = doc
            .descendants()
            .filter(|n| n.has_tag_name("polyline"))
            .collect();
        assert_eq!(lines.len(), 3);
        for l in &lines {
            let ys: Vec<&str> = l
                .attribute("points")
                .unwrap()
                .split(' ')
                .map(|p| p.split(',').nth(1).unwrap())
                .collect();
            assert_eq!(ys.len(), 35);
            assert!(ys.iter().all(|y| *y == ys[0]));
        }
        assert_eq!(lines[0].attribute("stroke"), Some("red"));
        assert_eq!(lines[1].attribute("stroke"), Some("blue"));
        assert_eq!(lines[2].attribute("stroke"), Some("green"));

        let spike = render_comparison_chart(&input_for(
            |d| if d == 17 { 500.0 } else { 0.0 },
            10.0,
            10.0,
        ));
        let doc = roxmltree::Document::parse(&spike).unwrap();
        let student = doc
            .descendants()
            .find(|n| n.has_tag_name("polyline"))
            .unwrap();
        let ys: Vec<f64> = student
            .attribute("points")
            .unwrap()
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        let top = (0..ys.len())
            .min_by(|a, b| ys[*a].total_cmp(&ys[*b]))
            .unwrap();
        assert_eq!(top, 17);
    }
}
