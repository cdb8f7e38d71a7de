mod common;

use proptest::prelude::*;
use writelog::calendar::{SeriesOwner, Window};
use writelog::timeseries::{decompose_additive, seasonal_decompose_additive};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|a, b| v[*a].total_cmp(&v[*b])).unwrap()
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|a, b| v[*a].total_cmp(&v[*b])).unwrap()
}

/// Smallest gap between the extreme value and its runner-up.
fn margin(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    (s[n - 1] - s[n - 2]).min(s[1] - s[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn components_reconstruct_observed(
        (period, values) in (2usize..11).prop_flat_map(|p| (Just(p), prop::collection::vec(-1e3f64..1e3, 2 * p..140))),
    ) {
        let d = decompose_additive(&values, period).unwrap();
        for i in 0..values.len() {
            if let (Some(t), Some(r)) = (d.trend[i], d.residual[i]) {
                prop_assert!(close(d.observed[i] - t - d.seasonal[i] - r, 0.0, 1e-9));
            } else {
                prop_assert!(d.trend[i].is_none() && d.residual[i].is_none());
            }
        }
        prop_assert!(close(d.seasonal_indices.iter().sum::<f64>(), 0.0, 1e-9));
    }

    #[test]
    fn prepending_a_zero_week_shifts_components(values in prop::collection::vec(0f64..1e3, 28..100)) {
        let old = decompose_additive(&values, 7).unwrap();
        let mut padded = vec![0.0; 7];
        padded.extend_from_slice(&values);
        let new = decompose_additive(&padded, 7).unwrap();
        for (i, t) in old.trend.iter().enumerate() {
            if let Some(t) = t {
                prop_assert!(close(new.trend[i + 7].unwrap(), *t, 1e-9));
            }
        }
        // Each phase gains exactly one detrended value, so a phase mean moves
        // by at most 2A/(c+1) and the re-centered index by twice that.
        let detrended_max = (0..padded.len())
            .filter_map(|i| new.trend[i].map(|t| (padded[i] - t).abs()))
            .fold(0.0, f64::max);
        let min_count = (0..7).map(|p| (p..values.len()).step_by(7).filter(|i| old.trend[*i].is_some()).count()).min().unwrap();
        let tol = 4.0 * detrended_max / (min_count as f64 + 1.0) + 1e-9;
        for p in 0..7 {
            prop_assert!(close(new.seasonal_indices[p], old.seasonal_indices[p], tol));
        }
        for (i, r) in old.residual.iter().enumerate() {
            if let Some(r) = r {
                prop_assert!(close(new.residual[i + 7].unwrap(), *r, tol));
            }
        }
    }

    #[test]
    fn adding_a_constant_only_moves_the_trend(values in prop::collection::vec(0f64..1e3, 14..100), c in -1e4f64..1e4) {
        let d = decompose_additive(&values, 7).unwrap();
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        let e = decompose_additive(&shifted, 7).unwrap();
        for (a, b) in d.trend.iter().zip(&e.trend) {
            if let (Some(a), Some(b)) = (a, b) {
                prop_assert!(close(*b, a + c, 1e-8));
            }
        }
        for (a, b) in d.seasonal_indices.iter().zip(&e.seasonal_indices) {
            prop_assert!(close(*a, *b, 1e-8));
        }
    }

    #[test]
    fn weekday_extremes_survive_positive_scaling(days in prop::collection::vec(0u32..3_000, 70), k in 0.01f64..100.0) {
        let cal = common::calendar();
        let s = common::series(SeriesOwner::Student("s".into()), &cal, Window::Full, |i| days[i] as f64);
        let scaled = common::series(SeriesOwner::Student("s".into()), &cal, Window::Full, |i| k * days[i] as f64);
        let a = seasonal_decompose_additive(&s, 7).unwrap().by_weekday().unwrap();
        let b = seasonal_decompose_additive(&scaled, 7).unwrap().by_weekday().unwrap();
        prop_assume!(margin(&a) > 1e-6);
        prop_assert_eq!(argmax(&a), argmax(&b));
        prop_assert_eq!(argmin(&a), argmin(&b));
    }
}
