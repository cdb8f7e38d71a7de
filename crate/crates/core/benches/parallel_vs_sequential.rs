use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use writelog::calendar::{build_cohort_series, SemesterCalendar, SeriesOptions};
use writelog::report::{within_cohort_p_values, ReportOptions};
use writelog::simcohort::{generate_cohort, SimOptions, StudyDesign};
use writelog::srl::{kmeans, KMeansOptions};
use writelog::Exec;

const STRATEGIES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn calendar() -> SemesterCalendar {
    SemesterCalendar::ten_week(NaiveDate::from_ymd_opt(2021, 9, 27).unwrap()).unwrap()
}

fn simulation(c: &mut Criterion) {
    let cal = calendar();
    let design = StudyDesign::standard(1.3);
    let mut g = c.benchmark_group("simulate_cohort");
    for (name, exec) in STRATEGIES {
        let opts = SimOptions {
            exec,
            ..SimOptions::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                generate_cohort("i", &design.intervention, &cal, black_box(7), &opts).unwrap()
            })
        });
    }
    g.finish();
}

fn series(c: &mut Criterion) {
    let cal = calendar();
    let design = StudyDesign::standard(1.3);
    let logs = generate_cohort("i", &design.intervention, &cal, 7, &SimOptions::default())
        .unwrap()
        .logs;
    let mut g = c.benchmark_group("build_cohort_series");
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_cohort_series(black_box(&logs), &cal, &SeriesOptions::default(), exec))
        });
    }
    g.finish();
}

fn clustering(c: &mut Criterion) {
    // deterministic spread of 200 points in four dimensions
    let points: Vec<Vec<f64>> = (0..200u64)
        .map(|i| {
            (0..4u64)
                .map(|d| ((i * 7919 + d * 104_729) % 1_000) as f64 / 250.0 + (i % 2) as f64)
                .collect()
        })
        .collect();
    let mut g = c.benchmark_group("kmeans_restarts");
    for (name, exec) in STRATEGIES {
        let opts = KMeansOptions {
            restarts: 64,
            exec,
            ..KMeansOptions::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kmeans(black_box(&points), 2, &opts).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let cal = calendar();
    let design = StudyDesign::standard(1.0);
    let mut g = c.benchmark_group("within_cohort_p_values");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        let opts = ReportOptions {
            exec,
            ..ReportOptions::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| within_cohort_p_values(&cal, &design.control, 0..16, &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, simulation, series, clustering, monte_carlo);
criterion_main!(benches);
