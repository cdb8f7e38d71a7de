//! Synthetic revision logs with known ground truth.
//!
//! Each student draws, per calendar day, whether they are active and how many
//! characters they edit. Volumes are log-normal, scaled by a weekday weight
//! and, from the intervention week onward, by the profile's multiplier. The
//! day's volume is split exactly across a handful of insert/delete events, so
//! the realized per-day character counts in the ground truth equal what the
//! series builder recovers from the logs.
//!
//! Every student owns a ChaCha8 stream derived from the seed, so generation
//! is identical whether students are simulated serially or in parallel.

use chrono::{Duration, NaiveTime, TimeZone};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{SemesterCalendar, Window};
use crate::par::Exec;
use crate::revlog::{EditKind, RevisionEvent, RevisionLog};
use crate::srl::{SrlLevel, SrlResponse, ITEM_COUNT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("cohort needs at least one student")]
    EmptyCohort,
    #[error("{0} must lie in [0, 1]")]
    BadProbability(&'static str),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("post-intervention multiplier must be non-negative")]
    NegativeMultiplier,
    #[error("activity hours must satisfy 0 <= start < end <= 24")]
    BadHours,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeeklyPattern {
    UnimodalSunday,
    BimodalWedSat,
    Uniform,
}

impl WeeklyPattern {
    /// Monday-first multipliers on the daily volume; each set averages to 1.
    pub fn weights(self) -> [f64; 7] {
        match self {
            WeeklyPattern::UnimodalSunday => [0.6, 0.6, 0.7, 0.5, 0.8, 1.1, 2.7],
            WeeklyPattern::BimodalWedSat => [0.6, 1.0, 1.7, 0.5, 0.7, 1.7, 0.8],
            WeeklyPattern::Uniform => [1.0; 7],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalParams {
    pub fn mean(&self) -> f64 {
        (self.mu + self.sigma * self.sigma / 2.0).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    pub weekly_pattern: WeeklyPattern,
    /// Characters edited on an active day before weekday scaling.
    pub daily_volume: LogNormalParams,
    /// Probability that a given day has no edits.
    pub inactive_prob: f64,
    pub srl_level: SrlLevel,
    /// Volume multiplier from the intervention week (plus delay) onward.
    pub post_intervention_multiplier: f64,
    pub response_delay_days: u32,
}

impl SimProfile {
    pub fn new(weekly_pattern: WeeklyPattern, srl_level: SrlLevel) -> Self {
        SimProfile {
            weekly_pattern,
            daily_volume: LogNormalParams {
                mu: 5.5,
                sigma: 0.6,
            },
            inactive_prob: 0.4,
            srl_level,
            post_intervention_multiplier: 1.0,
            response_delay_days: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.inactive_prob) {
            return Err(SimError::BadProbability("inactive_prob"));
        }
        if !self.daily_volume.mu.is_finite()
            || !self.daily_volume.sigma.is_finite()
            || self.daily_volume.sigma < 0.0
        {
            return Err(SimError::NonFinite("daily_volume"));
        }
        if !self.post_intervention_multiplier.is_finite() {
            return Err(SimError::NonFinite("post_intervention_multiplier"));
        }
        if self.post_intervention_multiplier < 0.0 {
            return Err(SimError::NegativeMultiplier);
        }
        Ok(())
    }

    /// Expected characters on calendar day `day`.
    pub fn expected_chars(&self, cal: &SemesterCalendar, day: usize) -> f64 {
        let w = self.weekly_pattern.weights()[day % 7];
        (1.0 - self.inactive_prob) * w * self.multiplier_on(cal, day) * self.daily_volume.mean()
    }

    fn multiplier_on(&self, cal: &SemesterCalendar, day: usize) -> f64 {
        let from = cal.days(Window::H2).start + self.response_delay_days as usize;
        if day >= from {
            self.post_intervention_multiplier
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub deletion_fraction: f64,
    /// Local hours between which edits are placed.
    pub day_start_hour: u32,
    pub day_end_hour: u32,
    /// Target correlation between reflective score and active weeks.
    pub score_correlation: f64,
    #[serde(skip, default)]
    pub exec: Exec,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            deletion_fraction: 0.15,
            day_start_hour: 8,
            day_end_hour: 23,
            score_correlation: 0.45,
            exec: Exec::default(),
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.deletion_fraction) {
            return Err(SimError::BadProbability("deletion_fraction"));
        }
        if !(-1.0..=1.0).contains(&self.score_correlation) {
            return Err(SimError::BadProbability("score_correlation"));
        }
        if self.day_start_hour >= self.day_end_hour || self.day_end_hour > 24 {
            return Err(SimError::BadHours);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentTruth {
    pub student_id: String,
    pub profile: SimProfile,
    /// Characters edited per calendar day (inserted plus deleted).
    pub daily_chars: Vec<u64>,
    pub daily_events: Vec<u32>,
    pub reflective_score: f64,
}

impl StudentTruth {
    pub fn active_weeks(&self, cal: &SemesterCalendar, window: Window) -> u32 {
        cal.weeks_in(window)
            .filter(|w| {
                let d = (*w as usize - 1) * 7;
                self.daily_events[d..d + 7].iter().any(|e| *e > 0)
            })
            .count() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortTruth {
    pub cohort: String,
    pub seed: u64,
    pub profiles: Vec<(usize, SimProfile)>,
    pub students: Vec<StudentTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimCohort {
    pub logs: Vec<RevisionLog>,
    pub srl: Vec<SrlResponse>,
    pub scores: Vec<(String, f64)>,
    pub truth: CohortTruth,
}

const TEXT: &str = "today i went over the lecture notes again and tried to connect them with \
what we did in the seminar, which helped me see where my own approach could change. ";

const STREAM_LOGS: u64 = 0;
const STREAM_SRL: u64 = 1 << 32;
const STREAM_SCORES: u64 = 2 << 32;

fn cohort_seed(seed: u64, cohort: &str) -> u64 {
    // FNV-1a over the cohort name, mixed into the seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in cohort.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

fn rng_for(seed: u64, cohort: &str, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cohort_seed(seed, cohort));
    rng.set_stream(stream);
    rng
}

fn split_volume(total: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let parts = (1 + rng.random_range(0..4u64)).min(total);
    let mut cuts: Vec<u64> = (1..parts).map(|_| rng.random_range(1..total)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

fn simulate_student(
    student_id: &str,
    profile: &SimProfile,
    cal: &SemesterCalendar,
    opts: &SimOptions,
    rng: &mut ChaCha8Rng,
) -> (RevisionLog, Vec<u64>, Vec<u32>) {
    let volume = LogNormal::new(profile.daily_volume.mu, profile.daily_volume.sigma)
        .expect("validated profile");
    let weights = profile.weekly_pattern.weights();
    let tz = cal.tz();
    let text: Vec<char> = TEXT.chars().collect();
    let window_secs = (opts.day_end_hour - opts.day_start_hour) * 3600;

    let mut events = Vec::new();
    let mut daily_chars = vec![0u64; cal.num_days()];
    let mut daily_events = vec![0u32; cal.num_days()];
    let mut doc_len = 0u64;
    let mut revision = 0u64;
    for day in 0..cal.num_days() {
        // draw both values every day so streams stay aligned across profiles
        let active = !rng.random_bool(profile.inactive_prob);
        let raw = volume.sample(rng);
        let chars = (raw * weights[day % 7] * profile.multiplier_on(cal, day)).round() as u64;
        if !active || chars == 0 {
            continue;
        }
        let parts = split_volume(chars, rng);
        let mut secs: Vec<u32> = parts
            .iter()
            .map(|_| rng.random_range(0..window_secs))
            .collect();
        secs.sort_unstable();
        let midnight = cal.date(day).and_time(NaiveTime::MIN);
        for (size, sec) in parts.iter().zip(secs) {
            let local = midnight + Duration::seconds((opts.day_start_hour * 3600 + sec) as i64);
            let timestamp = tz
                .from_local_datetime(&local)
                .single()
                .expect("fixed offset");
            revision += 1;
            let delete = doc_len >= *size && rng.random_bool(opts.deletion_fraction);
            let event = if delete {
                let start = rng.random_range(0..=doc_len - size);
                doc_len -= size;
                RevisionEvent {
                    kind: EditKind::Deletion,
                    start_index: start,
                    end_index: start + size,
                    payload: String::new(),
                    revision,
                    user_id: student_id.to_string(),
                    timestamp,
                }
            } else {
                let start = rng.random_range(0..=doc_len);
                let offset = rng.random_range(0..text.len());
                let payload: String = text
                    .iter()
                    .cycle()
                    .skip(offset)
                    .take(*size as usize)
                    .collect();
                doc_len += size;
                RevisionEvent {
                    kind: EditKind::Insertion,
                    start_index: start,
                    end_index: start + size,
                    payload,
                    revision,
                    user_id: student_id.to_string(),
                    timestamp,
                }
            };
            events.push(event);
        }
        daily_chars[day] = chars;
        daily_events[day] = parts.len() as u32;
    }
    let log = RevisionLog {
        document_id: format!("doc-{student_id}"),
        student_id: student_id.to_string(),
        events,
    };
    (log, daily_chars, daily_events)
}

fn simulate_srl(student_id: &str, level: SrlLevel, rng: &mut ChaCha8Rng) -> SrlResponse {
    let centre = match level {
        SrlLevel::HighSRL => 4.0,
        SrlLevel::LowSRL => 2.8,
    };
    let trait_level: f64 = Normal::new(centre, 0.3).expect("finite").sample(rng);
    let noise = Normal::<f64>::new(0.0, 0.7).expect("finite");
    let items = (0..ITEM_COUNT)
        .map(|_| (trait_level + noise.sample(rng)).round().clamp(1.0, 5.0) as i32)
        .collect();
    SrlResponse {
        student_id: student_id.to_string(),
        items,
    }
}

/// Reflective scores on a 0–100 scale whose correlation with full-semester
/// active weeks is `rho` in expectation.
fn simulate_scores(
    truths: &[StudentTruth],
    cal: &SemesterCalendar,
    rho: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let weeks: Vec<f64> = truths
        .iter()
        .map(|t| t.active_weeks(cal, Window::Full) as f64)
        .collect();
    let n = weeks.len() as f64;
    let mean = weeks.iter().sum::<f64>() / n;
    let sd = (weeks.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n).sqrt();
    let normal = Normal::new(0.0, 1.0).expect("finite");
    weeks
        .iter()
        .map(|w| {
            let z = if sd > 0.0 { (w - mean) / sd } else { 0.0 };
            let e: f64 = normal.sample(rng);
            let s: f64 = 65.0 + 10.0 * (rho * z + (1.0 - rho * rho).sqrt() * e);
            (s.clamp(0.0, 100.0) * 100.0).round() / 100.0
        })
        .collect()
}

/// Generates `count` students per profile. Student ids are
/// `<cohort>-<nnn>`, numbered in profile order.
pub fn generate_cohort(
    cohort: &str,
    profiles: &[(usize, SimProfile)],
    cal: &SemesterCalendar,
    seed: u64,
    opts: &SimOptions,
) -> Result<SimCohort, SimError> {
    opts.validate()?;
    for (_, p) in profiles {
        p.validate()?;
    }
    let roster: Vec<(String, SimProfile)> = profiles
        .iter()
        .flat_map(|(count, p)| std::iter::repeat_n(*p, *count))
        .enumerate()
        .map(|(i, p)| (format!("{cohort}-{:03}", i + 1), p))
        .collect();
    if roster.is_empty() {
        return Err(SimError::EmptyCohort);
    }

    let simulated = opts.exec.map_range(roster.len(), |i| {
        let (id, profile) = &roster[i];
        let mut rng = rng_for(seed, cohort, STREAM_LOGS + i as u64);
        let (log, chars, events) = simulate_student(id, profile, cal, opts, &mut rng);
        let mut rng = rng_for(seed, cohort, STREAM_SRL + i as u64);
        let srl = simulate_srl(id, profile.srl_level, &mut rng);
        (log, chars, events, srl)
    });

    let mut logs = Vec::with_capacity(roster.len());
    let mut srl = Vec::with_capacity(roster.len());
    let mut students = Vec::with_capacity(roster.len());
    for ((id, profile), (log, daily_chars, daily_events, response)) in roster.iter().zip(simulated)
    {
        logs.push(log);
        srl.push(response);
        students.push(StudentTruth {
            student_id: id.clone(),
            profile: *profile,
            daily_chars,
            daily_events,
            reflective_score: 0.0,
        });
    }
    let mut rng = rng_for(seed, cohort, STREAM_SCORES);
    let scores = simulate_scores(&students, cal, opts.score_correlation, &mut rng);
    for (s, v) in students.iter_mut().zip(&scores) {
        s.reflective_score = *v;
    }
    let scores = students
        .iter()
        .map(|s| (s.student_id.clone(), s.reflective_score))
        .collect();
    Ok(SimCohort {
        logs,
        srl,
        scores,
        truth: CohortTruth {
            cohort: cohort.to_string(),
            seed,
            profiles: profiles.to_vec(),
            students,
        },
    })
}

/// Profiles for a two-cohort study: a Sunday-peaking control with no
/// intervention effect and a Wednesday/Saturday intervention cohort whose
/// volume rises by `effect` in the second half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub control: Vec<(usize, SimProfile)>,
    pub intervention: Vec<(usize, SimProfile)>,
}

impl StudyDesign {
    pub fn standard(effect: f64) -> Self {
        let control = |level, n, inactive| {
            (
                n,
                SimProfile {
                    inactive_prob: inactive,
                    ..SimProfile::new(WeeklyPattern::UnimodalSunday, level)
                },
            )
        };
        let intervention = |level, n, inactive| {
            (
                n,
                SimProfile {
                    inactive_prob: inactive,
                    post_intervention_multiplier: effect,
                    ..SimProfile::new(WeeklyPattern::BimodalWedSat, level)
                },
            )
        };
        StudyDesign {
            control: vec![
                control(SrlLevel::HighSRL, 25, 0.35),
                control(SrlLevel::LowSRL, 15, 0.5),
            ],
            intervention: vec![
                intervention(SrlLevel::HighSRL, 27, 0.35),
                intervention(SrlLevel::LowSRL, 14, 0.5),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::{build_daily_series, SeriesOptions};
    use chrono::NaiveDate;

    fn cal() -> SemesterCalendar {
        SemesterCalendar::ten_week(NaiveDate::from_ymd_opt(2021, 9, 27).unwrap()).unwrap()
    }

    #[test]
    fn weights_average_to_one() {
        for p in [
            WeeklyPattern::UnimodalSunday,
            WeeklyPattern::BimodalWedSat,
            WeeklyPattern::Uniform,
        ] {
            assert!((p.weights().iter().sum::<f64>() - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for total in 1..200 {
            let parts = split_volume(total, &mut rng);
            assert_eq!(parts.iter().sum::<u64>(), total);
            assert!(parts.iter().all(|p| *p > 0));
        }
    }

    #[test]
    fn truth_matches_logs() {
        let profiles = [(
            5,
            SimProfile::new(WeeklyPattern::BimodalWedSat, SrlLevel::LowSRL),
        )];
        let c = generate_cohort("c", &profiles, &cal(), 3, &SimOptions::default()).unwrap();
        for (log, truth) in c.logs.iter().zip(&c.truth.students) {
            let s = build_daily_series(log, &cal(), &SeriesOptions::default());
            assert!(s.warning.is_none());
            let chars: Vec<u64> = s.series.chars().iter().map(|v| *v as u64).collect();
            assert_eq!(chars, truth.daily_chars);
            for e in &log.events {
                e.validate().unwrap();
            }
        }
    }

    #[test]
    fn parallel_equals_serial() {
        let profiles = [(
            6,
            SimProfile::new(WeeklyPattern::UnimodalSunday, SrlLevel::HighSRL),
        )];
        let a = generate_cohort(
            "x",
            &profiles,
            &cal(),
            11,
            &SimOptions {
                exec: Exec::Sequential,
                ..Default::default()
            },
        )
        .unwrap();
        let b = generate_cohort(
            "x",
            &profiles,
            &cal(),
            11,
            &SimOptions {
                exec: Exec::Parallel,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_profiles() {
        let mut p = SimProfile::new(WeeklyPattern::Uniform, SrlLevel::HighSRL);
        p.inactive_prob = 1.5;
        assert_eq!(p.validate(), Err(SimError::BadProbability("inactive_prob")));
        p.inactive_prob = 0.5;
        p.post_intervention_multiplier = -1.0;
        assert_eq!(p.validate(), Err(SimError::NegativeMultiplier));
        assert_eq!(
            generate_cohort("c", &[], &cal(), 0, &SimOptions::default()).unwrap_err(),
            SimError::EmptyCohort
        );
    }

    #[test]
    fn deterministic_profiles() {
        let always = SimProfile {
            inactive_prob: 0.0,
            ..SimProfile::new(WeeklyPattern::Uniform, SrlLevel::HighSRL)
        };
        let never = SimProfile {
            inactive_prob: 1.0,
            ..always
        };
        let c = generate_cohort(
            "d",
            &[(2, always), (2, never)],
            &cal(),
            5,
            &SimOptions::default(),
        )
        .unwrap();
        assert!(c.truth.students[0].daily_events.iter().all(|e| *e > 0));
        assert!(c.truth.students[3].daily_events.iter().all(|e| *e == 0));
        assert!(c.logs[3].events.is_empty());
    }
}
