mod common;

use proptest::prelude::*;
use writelog::calendar::{SeriesOwner, Window};
use writelog::feedback::{
    render_comparison_chart, render_feedback_email, FeedbackInput, PatternThresholds,
    DEFAULT_TEMPLATE,
};

fn days() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(
        prop_oneof![2 => Just(0u32), 3 => (1u32..400).prop_map(|v| v * 5)],
        35,
    )
}

fn input(student: &[u32], cohort: &[u32], reference: &[u32], scale: f64) -> FeedbackInput {
    let cal = common::calendar();
    let s = common::series(SeriesOwner::Student("s9".into()), &cal, Window::H1, |i| {
        scale * student[i] as f64
    });
    let c = common::series(
        SeriesOwner::CohortAverage("now".into()),
        &cal,
        Window::H1,
        |i| scale * cohort[i] as f64,
    );
    let r = common::series(
        SeriesOwner::CohortAverage("ref".into()),
        &cal,
        Window::H1,
        |i| scale * reference[i] as f64,
    );
    FeedbackInput::new("s9", &s, &c, &r, &cal, &PatternThresholds::default()).unwrap()
}

/// Pixel y coordinates of every polyline, keyed by series label.
fn polylines(svg: &str) -> Vec<(String, Vec<f64>)> {
    let doc = roxmltree::Document::parse(svg).expect("chart is well-formed XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    doc.descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .map(|n| {
            let ys = n
                .attribute("points")
                .unwrap()
                .split_whitespace()
                .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
                .collect();
            (n.attribute("data-series").unwrap().to_string(), ys)
        })
        .collect()
}

fn highest_point(ys: &[f64]) -> usize {
    (0..ys.len())
        .min_by(|a, b| ys[*a].total_cmp(&ys[*b]))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn email_is_a_pure_function(student in days(), cohort in days(), reference in days()) {
        let a = input(&student, &cohort, &reference, 1.0);
        let b = input(&student, &cohort, &reference, 1.0);
        prop_assert_eq!(&a, &b);
        let text = render_feedback_email(&a, DEFAULT_TEMPLATE).unwrap();
        prop_assert_eq!(&text, &render_feedback_email(&b, DEFAULT_TEMPLATE).unwrap());
        prop_assert_eq!(render_comparison_chart(&a), render_comparison_chart(&b));
        let n = a.pattern.active_weeks;
        let phrase = if n == 1 { "active for 1 week.".to_string() } else { format!("active for {n} weeks.") };
        prop_assert!(text.contains(&phrase));
        prop_assert!(!text.contains("{{"));
    }

    #[test]
    fn chart_is_valid_svg_with_one_point_per_day(student in days(), cohort in days(), reference in days()) {
        let lines = polylines(&render_comparison_chart(&input(&student, &cohort, &reference, 1.0)));
        prop_assert_eq!(lines.len(), 3);
        for (_, ys) in &lines {
            prop_assert_eq!(ys.len(), 35);
        }
    }

    #[test]
    fn doubling_keeps_each_series_peak(student in days(), cohort in days(), reference in days()) {
        let once = polylines(&render_comparison_chart(&input(&student, &cohort, &reference, 1.0)));
        let twice = polylines(&render_comparison_chart(&input(&student, &cohort, &reference, 2.0)));
        for ((label, a), (_, b)) in once.iter().zip(&twice) {
            prop_assert_eq!(highest_point(a), highest_point(b), "series {}", label);
        }
    }
}
