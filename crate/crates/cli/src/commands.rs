use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;
use writelog::calendar::{
    build_cohort_series, cohort_daily_average, student_features, write_features_csv, DailySeries,
    SemesterCalendar, SeriesBuild, SeriesOptions, Window,
};
use writelog::feedback::{
    render_comparison_chart, render_feedback_email, FeedbackInput, PatternThresholds,
    DEFAULT_TEMPLATE,
};
use writelog::report::{
    between_cohort_comparison, build_report, within_cohort_comparison, CohortStudy, ReportOptions,
};
use writelog::revlog::{parse_revision_log_with, ParseOptions, RevisionLog};
use writelog::simcohort::{generate_cohort, SimOptions, StudyDesign};
use writelog::srl::{
    cluster_proportion_test, dimension_alphas, kmeans_2, parse_questionnaire, score_questionnaire,
    write_clusters_csv, ClusterOutcome, KMeansOptions, LikertScale,
};
use writelog::stats::{MannWhitneyOptions, TestResult, WilcoxonOptions};
use writelog::study::{read_cohort, read_logs_dir, read_manifest, write_json, CohortData};
use writelog::study::{write_simulated_study, StudyManifest};
use writelog::timeseries::seasonal_decompose_additive;
use writelog::Exec;

use crate::config::{pick, RunConfig};
use crate::{CalendarArgs, Cli, ClusterArgs, Command, Failure, IoArgs, SeriesArgs, TestArgs};

const STANDARD_PERIOD: usize = 7;
const DEFAULT_START: (i32, u32, u32) = (2021, 9, 27);

pub fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let exec = if cli.sequential || cfg.sequential == Some(true) {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let ctx = Ctx { cfg, exec };
    match cli.command {
        Command::Ingest {
            io,
            calendar,
            series,
        } => ctx.ingest(&io, &calendar, &series),
        Command::Features {
            io,
            calendar,
            series,
        } => ctx.features(&io, &calendar, &series),
        Command::Decompose {
            io,
            calendar,
            series,
            period,
            window,
        } => ctx.decompose(&io, &calendar, &series, period, window.into()),
        Command::Cluster { io, clustering } => ctx.cluster(&io, &clustering),
        Command::Compare {
            io,
            calendar,
            series,
            tests,
        } => ctx.compare(&io, &calendar, &series, &tests),
        Command::Feedback {
            io,
            calendar,
            series,
            students,
            template,
            dominant_share,
            late_start_week,
        } => {
            let thresholds = PatternThresholds {
                dominant_share: pick(
                    dominant_share,
                    ctx.cfg.dominant_share,
                    PatternThresholds::default().dominant_share,
                ),
                late_start_week: pick(
                    late_start_week,
                    ctx.cfg.late_start_week,
                    PatternThresholds::default().late_start_week,
                ),
            };
            let template = template.or_else(|| ctx.cfg.template.clone());
            ctx.feedback(
                &io,
                &calendar,
                &series,
                &students,
                template.as_deref(),
                &thresholds,
            )
        }
        Command::Report {
            io,
            calendar,
            series,
            tests,
            clustering,
            period,
            decompose_per_half,
        } => ctx.report(
            &io,
            &calendar,
            &series,
            &tests,
            &clustering,
            period,
            decompose_per_half,
        ),
        Command::Simulate {
            out,
            calendar,
            seed,
            effect,
        } => ctx.simulate(out, &calendar, seed, effect),
    }
}

/// Where the logs of a command come from.
enum Source {
    Study(PathBuf),
    LogsDir(PathBuf),
    LogFile(PathBuf),
}

/// Logs of one cohort; unnamed for plain log directories and files.
struct LogGroup {
    name: Option<String>,
    logs: Vec<RevisionLog>,
}

struct Ctx {
    cfg: RunConfig,
    exec: Exec,
}

impl Ctx {
    fn paths(&self, io: &IoArgs) -> Result<(Source, PathBuf), Failure> {
        let input = io
            .input
            .clone()
            .or_else(|| self.cfg.input.clone())
            .ok_or_else(|| Failure::Usage("--in is required".into()))?;
        let out = self.out_dir(io.out.clone())?;
        if !input.exists() {
            return Err(Failure::Usage(format!(
                "input {} does not exist",
                input.display()
            )));
        }
        let (abs_in, abs_out) = (absolute(&input)?, absolute(&out)?);
        if abs_out == abs_in || (input.is_dir() && abs_out.starts_with(&abs_in)) {
            return Err(Failure::Usage(format!(
                "output directory {} must lie outside the input {}",
                out.display(),
                input.display()
            )));
        }
        let source = if input.is_file() {
            Source::LogFile(input)
        } else if input.join("study.json").is_file() {
            Source::Study(input)
        } else {
            Source::LogsDir(input)
        };
        Ok((source, out))
    }

    fn out_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf, Failure> {
        let out = flag
            .or_else(|| self.cfg.out.clone())
            .ok_or_else(|| Failure::Usage("--out is required".into()))?;
        if out.exists() && !out.is_dir() {
            return Err(Failure::Usage(format!(
                "output {} is not a directory",
                out.display()
            )));
        }
        Ok(out)
    }

    fn calendar(
        &self,
        args: &CalendarArgs,
        base: Option<&SemesterCalendar>,
        fallback_start: Option<NaiveDate>,
    ) -> Result<SemesterCalendar, Failure> {
        let c = &self.cfg.calendar;
        let start = args
            .start_monday
            .or(c.start_monday)
            .or(base.map(|b| b.start_monday))
            .or(fallback_start)
            .ok_or_else(|| {
                Failure::Usage("--start-monday is required unless --in is a study directory".into())
            })?;
        let cal = SemesterCalendar {
            start_monday: start,
            weeks: pick(args.weeks, c.weeks, base.map_or(10, |b| b.weeks)),
            intervention_week: pick(
                args.intervention_week,
                c.intervention_week,
                base.map_or(6, |b| b.intervention_week),
            ),
            utc_offset_minutes: pick(
                args.utc_offset_minutes,
                c.utc_offset_minutes,
                base.map_or(0, |b| b.utc_offset_minutes),
            ),
            lecture_weekday: pick(
                args.lecture_weekday,
                c.lecture_weekday,
                base.map_or(chrono::Weekday::Tue, |b| b.lecture_weekday),
            ),
        };
        cal.validate()
            .map_err(|e| Failure::Usage(format!("calendar: {e}")))?;
        Ok(cal)
    }

    fn series_options(&self, args: &SeriesArgs) -> SeriesOptions {
        SeriesOptions {
            count_mode: pick(
                args.count_mode.map(Into::into),
                self.cfg.count_mode,
                Default::default(),
            ),
        }
    }

    /// Daily series of every log; events outside the calendar are reported.
    fn build(
        &self,
        logs: &[RevisionLog],
        cal: &SemesterCalendar,
        opts: &SeriesOptions,
    ) -> Vec<SeriesBuild> {
        let builds = build_cohort_series(logs, cal, opts, self.exec);
        for (log, b) in logs.iter().zip(&builds) {
            if let Some(w) = b.warning {
                eprintln!(
                    "warning: {}: {} events fall outside the calendar",
                    log.student_id, w.count
                );
            }
        }
        builds
    }

    fn load_logs(
        &self,
        source: &Source,
        args: &CalendarArgs,
    ) -> Result<(SemesterCalendar, Vec<LogGroup>), Failure> {
        match source {
            Source::Study(dir) => {
                let manifest = read_manifest(dir)?;
                let cal = self.calendar(args, Some(&manifest.calendar), None)?;
                let mut groups = Vec::new();
                for name in [&manifest.control, &manifest.intervention] {
                    groups.push(LogGroup {
                        name: Some(name.clone()),
                        logs: read_logs_dir(&dir.join(name).join("logs"), &cal)?,
                    });
                }
                Ok((cal, groups))
            }
            Source::LogsDir(dir) => {
                let cal = self.calendar(args, None, None)?;
                let logs = read_logs_dir(dir, &cal)?;
                Ok((cal, vec![LogGroup { name: None, logs }]))
            }
            Source::LogFile(path) => {
                let cal = self.calendar(args, None, None)?;
                let id = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                let file = fs::File::open(path)
                    .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
                let opts = ParseOptions {
                    tz: cal.tz(),
                    document_id: None,
                };
                let log = parse_revision_log_with(file, &id, &opts)
                    .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
                Ok((
                    cal,
                    vec![LogGroup {
                        name: None,
                        logs: vec![log],
                    }],
                ))
            }
        }
    }

    fn study_data(
        &self,
        source: &Source,
        args: &CalendarArgs,
    ) -> Result<(SemesterCalendar, CohortData, CohortData), Failure> {
        let Source::Study(dir) = source else {
            return Err(Failure::Usage(
                "--in must be a study directory containing study.json".into(),
            ));
        };
        let manifest = read_manifest(dir)?;
        let cal = self.calendar(args, Some(&manifest.calendar), None)?;
        let control = read_cohort(dir, &manifest.control, &cal)?;
        let intervention = read_cohort(dir, &manifest.intervention, &cal)?;
        Ok((cal, control, intervention))
    }

    fn report_options(
        &self,
        series: &SeriesArgs,
        tests: &TestArgs,
        clustering: Option<&ClusterArgs>,
    ) -> Result<ReportOptions, Failure> {
        let d = ReportOptions::default();
        let cfg = &self.cfg;
        let continuity = pick(
            tests.continuity_correction,
            cfg.continuity_correction,
            false,
        );
        let mut opts = ReportOptions {
            zero_days: pick(tests.zero_days.map(Into::into), cfg.zero_days, d.zero_days),
            sample_unit: pick(
                tests.sample_unit.map(Into::into),
                cfg.sample_unit,
                d.sample_unit,
            ),
            wilcoxon: WilcoxonOptions {
                zero_method: pick(
                    tests.zero_method.map(Into::into),
                    cfg.zero_method,
                    d.wilcoxon.zero_method,
                ),
                continuity_correction: continuity,
                effect_n: None,
            },
            mann_whitney: MannWhitneyOptions {
                continuity_correction: continuity,
            },
            series: self.series_options(series),
            exec: self.exec,
            ..d
        };
        opts.kmeans.exec = self.exec;
        if let Some(c) = clustering {
            opts.kmeans = self.kmeans_options(c)?;
            opts.likert = self.likert(c)?;
        }
        Ok(opts)
    }

    fn kmeans_options(&self, args: &ClusterArgs) -> Result<KMeansOptions, Failure> {
        let d = KMeansOptions::default();
        let cfg = &self.cfg;
        let opts = KMeansOptions {
            seed: pick(args.seed, cfg.seed, d.seed),
            restarts: pick(args.restarts, cfg.restarts, d.restarts),
            max_iter: pick(args.max_iter, cfg.max_iter, d.max_iter),
            standardize: pick(args.standardize, cfg.standardize, d.standardize),
            exec: self.exec,
        };
        if opts.restarts == 0 || opts.max_iter == 0 {
            return Err(Failure::Usage(
                "--restarts and --max-iter must be at least 1".into(),
            ));
        }
        Ok(opts)
    }

    fn likert(&self, args: &ClusterArgs) -> Result<LikertScale, Failure> {
        let d = LikertScale::default();
        let scale = LikertScale {
            min: pick(args.likert_min, self.cfg.likert_min, d.min),
            max: pick(args.likert_max, self.cfg.likert_max, d.max),
        };
        if scale.min >= scale.max {
            return Err(Failure::Usage(format!(
                "likert range [{}, {}] is empty",
                scale.min, scale.max
            )));
        }
        Ok(scale)
    }

    fn period(&self, flag: Option<u64>) -> Result<usize, Failure> {
        let period = flag
            .map(|p| p as usize)
            .or(self.cfg.period)
            .unwrap_or(STANDARD_PERIOD);
        if period < 2 {
            return Err(Failure::Usage(format!(
                "period {period} must be at least 2"
            )));
        }
        if period != STANDARD_PERIOD {
            eprintln!(
                "note: the standard analysis uses a fixed seasonal period of {STANDARD_PERIOD} days; \
                 using the requested period of {period} days"
            );
        }
        Ok(period)
    }

    fn ingest(&self, io: &IoArgs, args: &CalendarArgs, series: &SeriesArgs) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Entry {
            cohort: Option<String>,
            student_id: String,
            events: usize,
            days: usize,
            out_of_calendar: usize,
        }
        let (source, out) = self.paths(io)?;
        let (cal, groups) = self.load_logs(&source, args)?;
        let opts = self.series_options(series);
        let mut entries = Vec::new();
        for g in &groups {
            let dir = group_dir(&out, g)?;
            for (log, build) in g.logs.iter().zip(self.build(&g.logs, &cal, &opts)) {
                write_with(&dir.join(format!("{}.csv", log.student_id)), |w| {
                    build.series.write_csv(w)
                })?;
                let dropped = build.warning.map_or(0, |w| w.count);
                entries.push(Entry {
                    cohort: g.name.clone(),
                    student_id: log.student_id.clone(),
                    events: log.events.len(),
                    days: build.series.len(),
                    out_of_calendar: dropped,
                });
            }
        }
        write_json(&out.join("ingest.json"), &entries)?;
        Ok(())
    }

    fn features(
        &self,
        io: &IoArgs,
        args: &CalendarArgs,
        series: &SeriesArgs,
    ) -> Result<(), Failure> {
        let (source, out) = self.paths(io)?;
        let (cal, groups) = self.load_logs(&source, args)?;
        let opts = self.series_options(series);
        for g in &groups {
            let dir = group_dir(&out, g)?;
            let mut rows = Vec::new();
            for (log, build) in g.logs.iter().zip(self.build(&g.logs, &cal, &opts)) {
                for window in [Window::H1, Window::H2, Window::Full] {
                    rows.push((
                        log.student_id.clone(),
                        student_features(&build.series, &cal, window),
                    ));
                }
            }
            write_with(&dir.join("features.csv"), |w| write_features_csv(&rows, w))?;
        }
        Ok(())
    }

    fn decompose(
        &self,
        io: &IoArgs,
        args: &CalendarArgs,
        series: &SeriesArgs,
        period: Option<u64>,
        window: Window,
    ) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Seasonality {
            series: String,
            window: &'static str,
            period: usize,
            seasonal_indices: Vec<f64>,
            by_weekday: Option<BTreeMap<u32, f64>>,
        }
        let (source, out) = self.paths(io)?;
        let period = self.period(period)?;
        let single = matches!(source, Source::LogFile(_));
        let (cal, groups) = self.load_logs(&source, args)?;
        let opts = self.series_options(series);
        for g in &groups {
            let dir = group_dir(&out, g)?;
            let all: Vec<DailySeries> = self
                .build(&g.logs, &cal, &opts)
                .into_iter()
                .map(|b| b.series)
                .collect();
            let target = if single {
                all[0].window(&cal, window)
            } else {
                let name = g.name.as_deref().unwrap_or("cohort");
                cohort_daily_average(&all, &cal, window, name)?
            };
            let result = seasonal_decompose_additive(&target, period)?;
            write_with(&dir.join("decomposition.csv"), |w| result.write_csv(w))?;
            // Monday = 1 .. Sunday = 7
            let by_weekday = result.by_weekday().map(|v| {
                v.iter()
                    .enumerate()
                    .map(|(i, x)| (i as u32 + 1, *x))
                    .collect()
            });
            write_json(
                &dir.join("seasonal.json"),
                &Seasonality {
                    series: target.owner.name().to_string(),
                    window: window.label(),
                    period,
                    seasonal_indices: result.seasonal_indices.clone(),
                    by_weekday,
                },
            )?;
        }
        Ok(())
    }

    fn cluster(&self, io: &IoArgs, args: &ClusterArgs) -> Result<(), Failure> {
        let (source, out) = self.paths(io)?;
        let opts = self.kmeans_options(args)?;
        let scale = self.likert(args)?;
        match source {
            Source::LogFile(path) => {
                fs::create_dir_all(&out)?;
                self.cluster_file(&path, &out, &opts, scale)?;
            }
            Source::Study(dir) => {
                let manifest = read_manifest(&dir)?;
                let mut outcomes = Vec::new();
                for name in [&manifest.control, &manifest.intervention] {
                    let sub = out.join(name);
                    fs::create_dir_all(&sub)?;
                    outcomes.push(self.cluster_file(
                        &dir.join(name).join("srl.csv"),
                        &sub,
                        &opts,
                        scale,
                    )?);
                }
                let test =
                    cluster_proportion_test(&outcomes[0].assignments, &outcomes[1].assignments)?
                        .relabel(&[&manifest.control, &manifest.intervention]);
                write_json(&out.join("proportions.json"), &test)?;
            }
            Source::LogsDir(_) => {
                return Err(Failure::Usage(
                    "--in must be a questionnaire CSV or a study directory".into(),
                ))
            }
        }
        Ok(())
    }

    fn cluster_file(
        &self,
        path: &Path,
        out: &Path,
        opts: &KMeansOptions,
        scale: LikertScale,
    ) -> Result<ClusterOutcome, Failure> {
        #[derive(Serialize)]
        struct Summary<'a> {
            students: usize,
            high: usize,
            low: usize,
            /// Goal setting, persistence, effort, self-efficacy.
            alphas: Option<[f64; 4]>,
            diagnostics: &'a writelog::srl::ClusterDiagnostics,
        }
        let located = |e: &dyn std::fmt::Display| Failure::Data(format!("{}: {e}", path.display()));
        let file = fs::File::open(path).map_err(|e| located(&e))?;
        let responses = parse_questionnaire(file).map_err(|e| located(&e))?;
        let scored = responses
            .iter()
            .map(|r| Ok((r.student_id.clone(), score_questionnaire(r, scale)?)))
            .collect::<Result<Vec<_>, writelog::srl::SrlError>>()
            .map_err(|e| located(&e))?;
        let outcome = kmeans_2(&scored, opts).map_err(|e| located(&e))?;
        let alphas = match dimension_alphas(&responses) {
            Ok(a) => Some(a),
            Err(e) => {
                eprintln!("note: {}: reliability not computed: {e}", path.display());
                None
            }
        };
        write_with(&out.join("clusters.csv"), |w| {
            write_clusters_csv(&outcome.assignments, w)
        })?;
        let high = outcome
            .assignments
            .iter()
            .filter(|a| a.cluster == writelog::srl::SrlLevel::HighSRL)
            .count();
        write_json(
            &out.join("clusters.json"),
            &Summary {
                students: outcome.assignments.len(),
                high,
                low: outcome.assignments.len() - high,
                alphas,
                diagnostics: &outcome.diagnostics,
            },
        )?;
        Ok(outcome)
    }

    fn compare(
        &self,
        io: &IoArgs,
        args: &CalendarArgs,
        series: &SeriesArgs,
        tests: &TestArgs,
    ) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Within {
            cohort: String,
            result: TestResult,
        }
        #[derive(Serialize)]
        struct Between {
            period: &'static str,
            result: TestResult,
        }
        #[derive(Serialize)]
        struct Comparison {
            options: ReportOptions,
            within: Vec<Within>,
            between: Vec<Between>,
        }
        let (source, out) = self.paths(io)?;
        let opts = self.report_options(series, tests, None)?;
        let (cal, control, intervention) = self.study_data(&source, args)?;
        let study = CohortStudy::from_data(cal, &control, &intervention, &opts)?;
        let mut within = Vec::new();
        for (flag, name) in [(false, &control.name), (true, &intervention.name)] {
            within.push(Within {
                cohort: name.clone(),
                result: within_cohort_comparison(&study, flag, &opts)?,
            });
        }
        let mut between = Vec::new();
        for period in [Window::H1, Window::H2, Window::Full] {
            between.push(Between {
                period: period.label(),
                result: between_cohort_comparison(&study, period, &opts)?,
            });
        }
        fs::create_dir_all(&out)?;
        write_json(
            &out.join("comparison.json"),
            &Comparison {
                options: opts,
                within,
                between,
            },
        )?;
        Ok(())
    }

    fn feedback(
        &self,
        io: &IoArgs,
        args: &CalendarArgs,
        series: &SeriesArgs,
        students: &[String],
        template: Option<&Path>,
        thresholds: &PatternThresholds,
    ) -> Result<(), Failure> {
        if !(thresholds.dominant_share > 0.0 && thresholds.dominant_share < 1.0) {
            return Err(Failure::Usage(
                "--dominant-share must lie strictly between 0 and 1".into(),
            ));
        }
        let (source, out) = self.paths(io)?;
        let template = match template {
            Some(p) => fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
            None => DEFAULT_TEMPLATE.to_string(),
        };
        let (cal, control, intervention) = self.study_data(&source, args)?;
        let opts = self.series_options(series);
        let build = |c: &CohortData| -> Vec<DailySeries> {
            self.build(&c.logs, &cal, &opts)
                .into_iter()
                .map(|b| b.series)
                .collect()
        };
        let current = build(&intervention);
        let reference = cohort_daily_average(&build(&control), &cal, Window::H1, &control.name)?;
        let cohort = cohort_daily_average(&current, &cal, Window::H1, &intervention.name)?;
        let ids: Vec<&str> = intervention
            .logs
            .iter()
            .map(|l| l.student_id.as_str())
            .collect();
        if let Some(missing) = students.iter().find(|s| !ids.contains(&s.as_str())) {
            return Err(Failure::Data(format!(
                "student `{missing}` is not in cohort `{}`",
                intervention.name
            )));
        }
        fs::create_dir_all(&out)?;
        for (id, s) in ids.iter().zip(&current) {
            if !students.is_empty() && !students.iter().any(|x| x == id) {
                continue;
            }
            let input = FeedbackInput::new(*id, s, &cohort, &reference, &cal, thresholds)?;
            let email = render_feedback_email(&input, &template)?;
            write_text(&out.join(format!("{id}.txt")), &email)?;
            write_text(
                &out.join(format!("{id}.svg")),
                &render_comparison_chart(&input),
            )?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        io: &IoArgs,
        args: &CalendarArgs,
        series: &SeriesArgs,
        tests: &TestArgs,
        clustering: &ClusterArgs,
        period: Option<u64>,
        per_half: Option<bool>,
    ) -> Result<(), Failure> {
        let (source, out) = self.paths(io)?;
        let mut opts = self.report_options(series, tests, Some(clustering))?;
        opts.period = self.period(period)?;
        opts.decompose_per_half = pick(
            per_half,
            self.cfg.decompose_per_half,
            opts.decompose_per_half,
        );
        let (cal, control, intervention) = self.study_data(&source, args)?;
        let study = CohortStudy::from_data(cal, &control, &intervention, &opts)?;
        for n in &study.notices {
            eprintln!("note: {n}");
        }
        let artifacts = build_report(&study, &opts)?;
        fs::create_dir_all(&out)?;
        for a in &artifacts {
            write_text(&out.join(&a.name), &a.contents)?;
        }
        Ok(())
    }

    fn simulate(
        &self,
        out: Option<PathBuf>,
        args: &CalendarArgs,
        seed: Option<u64>,
        effect: Option<f64>,
    ) -> Result<(), Failure> {
        let out = self.out_dir(out)?;
        let (y, m, d) = DEFAULT_START;
        let cal = self.calendar(args, None, NaiveDate::from_ymd_opt(y, m, d))?;
        let seed = pick(seed, self.cfg.seed, 0);
        let effect = pick(effect, self.cfg.effect, 1.3);
        if !(effect.is_finite() && effect > 0.0) {
            return Err(Failure::Usage(format!("effect {effect} must be positive")));
        }
        let design = StudyDesign::standard(effect);
        let sim = SimOptions {
            exec: self.exec,
            ..SimOptions::default()
        };
        let control = generate_cohort("control", &design.control, &cal, seed, &sim)?;
        let intervention = generate_cohort("intervention", &design.intervention, &cal, seed, &sim)?;
        let manifest = StudyManifest {
            calendar: cal,
            control: "control".into(),
            intervention: "intervention".into(),
            seed: Some(seed),
        };
        write_simulated_study(&out, &manifest, &control, &intervention)?;
        Ok(())
    }
}

fn absolute(p: &Path) -> Result<PathBuf, Failure> {
    let abs = match p.canonicalize() {
        Ok(c) => c,
        Err(_) => {
            std::path::absolute(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
    };
    Ok(abs)
}

fn group_dir(out: &Path, g: &LogGroup) -> Result<PathBuf, Failure> {
    let dir = match &g.name {
        Some(n) => out.join(n),
        None => out.to_path_buf(),
    };
    fs::create_dir_all(&dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_with<E: std::fmt::Display>(
    path: &Path,
    f: impl FnOnce(BufWriter<fs::File>) -> Result<(), E>,
) -> Result<(), Failure> {
    let file =
        fs::File::create(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    f(BufWriter::new(file)).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}
