use std::collections::BTreeMap;

use proptest::prelude::*;
use writelog::srl::{cronbach_alpha, kmeans, kmeans_2, KMeansOptions, SrlLevel, SrlScores};

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (4usize..20, 2usize..9).prop_flat_map(|(n, k)| {
        prop::collection::vec(prop::collection::vec((1i32..=5).prop_map(f64::from), k), n)
    })
}

/// Two tight groups of questionnaire scores, far apart on every dimension.
fn separated() -> impl Strategy<Value = Vec<(String, SrlScores)>> {
    (3usize..10, 3usize..10).prop_flat_map(|(a, b)| {
        let noise = || prop::collection::vec(-0.4f64..0.4, 4);
        (
            prop::collection::vec(noise(), a),
            prop::collection::vec(noise(), b),
        )
            .prop_map(|(hi, lo)| {
                let mk = |centre: f64, d: &Vec<f64>| SrlScores {
                    goal_setting: centre + d[0],
                    persistence: centre + d[1],
                    effort: centre + d[2],
                    self_efficacy: centre + d[3],
                };
                hi.iter()
                    .map(|d| mk(4.2, d))
                    .chain(lo.iter().map(|d| mk(2.0, d)))
                    .enumerate()
                    .map(|(i, s)| (format!("s{i:02}"), s))
                    .collect()
            })
    })
}

fn labels(students: &[(String, SrlScores)], seed: u64) -> BTreeMap<String, SrlLevel> {
    let opts = KMeansOptions {
        seed,
        ..Default::default()
    };
    kmeans_2(students, &opts)
        .unwrap()
        .assignments
        .into_iter()
        .map(|a| (a.student_id, a.cluster))
        .collect()
}

fn brute_force_sse(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let dim = points[0].len();
    let sse_of = |idx: &[usize]| -> f64 {
        let c: Vec<f64> = (0..dim)
            .map(|j| idx.iter().map(|&i| points[i][j]).sum::<f64>() / idx.len() as f64)
            .collect();
        idx.iter()
            .map(|&i| (0..dim).map(|j| (points[i][j] - c[j]).powi(2)).sum::<f64>())
            .sum()
    };
    (1u32..(1 << (n - 1)))
        .map(|mask| {
            let a: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let b: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
            sse_of(&a) + sse_of(&b)
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn alpha_ignores_shift_and_scale(m in matrix(), c in -10f64..10.0, k in 0.1f64..10.0) {
        let Ok(alpha) = cronbach_alpha(&m) else { return Ok(()) };
        let shifted: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v + c).collect()).collect();
        let scaled: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v * k).collect()).collect();
        prop_assert!((cronbach_alpha(&shifted).unwrap() - alpha).abs() < 1e-9);
        prop_assert!((cronbach_alpha(&scaled).unwrap() - alpha).abs() < 1e-9);
    }

    #[test]
    fn clusters_ignore_input_order(students in separated(), seed in 0u64..1_000, rot in 0usize..20) {
        let base = labels(&students, seed);
        let mut reordered = students.clone();
        let k = rot % reordered.len();
        reordered.rotate_left(k);
        reordered.reverse();
        prop_assert_eq!(labels(&reordered, seed), base.clone());
        for (id, s) in &students {
            let want = if s.overall() > 3.1 { SrlLevel::HighSRL } else { SrlLevel::LowSRL };
            prop_assert_eq!(base[id], want);
        }
    }

    #[test]
    fn clusters_ignore_affine_rescaling(
        students in separated(),
        scale in prop::array::uniform4(0.2f64..5.0),
        shift in prop::array::uniform4(-3f64..3.0),
    ) {
        let moved: Vec<(String, SrlScores)> = students
            .iter()
            .map(|(id, s)| {
                let v = s.as_array();
                let f = |j: usize| v[j] * scale[j] + shift[j];
                (id.clone(), SrlScores { goal_setting: f(0), persistence: f(1), effort: f(2), self_efficacy: f(3) })
            })
            .collect();
        prop_assert_eq!(labels(&moved, 3), labels(&students, 3));
    }

    #[test]
    fn small_instances_reach_optimal_sse(
        points in (3usize..=12, 1usize..=4).prop_flat_map(|(n, d)| {
            prop::collection::vec(prop::collection::vec((0u32..20).prop_map(|v| v as f64 / 4.0), d), n)
        }),
        seed in any::<u64>(),
    ) {
        prop_assume!(points.iter().any(|p| p != &points[0]));
        let fit = kmeans(&points, 2, &KMeansOptions { seed, standardize: false, ..Default::default() }).unwrap();
        let best = brute_force_sse(&points);
        prop_assert!(fit.sse <= best + 1e-9 * (1.0 + best), "sse {} optimum {}", fit.sse, best);
    }
}
