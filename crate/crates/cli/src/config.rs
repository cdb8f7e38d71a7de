//! JSON run configuration.
//!
//! Every value is resolved with one rule: a command-line flag wins over the
//! config file, which wins over the built-in default (or, for the calendar of
//! a study directory, over its `study.json`).

use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Weekday};
use serde::Deserialize;
use writelog::report::{SampleUnit, ZeroDays};
use writelog::revlog::CountMode;
use writelog::stats::ZeroMethod;

use crate::Failure;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarConfig {
    pub start_monday: Option<NaiveDate>,
    pub weeks: Option<u32>,
    pub intervention_week: Option<u32>,
    pub utc_offset_minutes: Option<i32>,
    pub lecture_weekday: Option<Weekday>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub calendar: CalendarConfig,
    pub count_mode: Option<CountMode>,
    pub period: Option<usize>,
    pub decompose_per_half: Option<bool>,
    pub zero_days: Option<ZeroDays>,
    pub sample_unit: Option<SampleUnit>,
    pub zero_method: Option<ZeroMethod>,
    pub continuity_correction: Option<bool>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub max_iter: Option<usize>,
    pub standardize: Option<bool>,
    pub likert_min: Option<i32>,
    pub likert_max: Option<i32>,
    pub effect: Option<f64>,
    pub template: Option<PathBuf>,
    pub dominant_share: Option<f64>,
    pub late_start_week: Option<u32>,
    pub sequential: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

/// Flag, then config, then default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}
