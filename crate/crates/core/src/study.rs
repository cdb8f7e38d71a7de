//! On-disk layout of a two-cohort study.
//!
//! ```text
//! <dir>/study.json                 calendar and cohort names
//! <dir>/<cohort>/logs/<id>.csv     one revision log per student
//! <dir>/<cohort>/srl.csv           questionnaire responses (optional)
//! <dir>/<cohort>/clusters.csv      SRL cluster assignments (optional)
//! <dir>/<cohort>/scores.csv        student_id,score (optional)
//! <dir>/ground_truth.json          written by the simulator only
//! ```

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::SemesterCalendar;
use crate::revlog::{
    parse_revision_log_with, write_revision_log, ParseOptions, RevisionLog, RevlogError,
};
use crate::simcohort::{CohortTruth, SimCohort};
use crate::srl::{
    parse_questionnaire, read_clusters_csv, write_questionnaire, SrlError, SrlLevel, SrlResponse,
};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Revlog { path: PathBuf, source: RevlogError },
    #[error("{path}: {source}")]
    Srl { path: PathBuf, source: SrlError },
    #[error("{path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("calendar: {0}")]
    Calendar(#[from] crate::calendar::CalendarError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub calendar: SemesterCalendar,
    pub control: String,
    pub intervention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortData {
    pub name: String,
    pub logs: Vec<RevisionLog>,
    pub srl: Option<Vec<SrlResponse>>,
    pub clusters: Option<Vec<(String, SrlLevel)>>,
    pub scores: Option<Vec<(String, f64)>>,
}

pub fn read_manifest(dir: &Path) -> Result<StudyManifest, StudyError> {
    let path = dir.join("study.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: StudyManifest =
        serde_json::from_str(&text).map_err(|source| StudyError::Json {
            path: path.clone(),
            source,
        })?;
    manifest.calendar.validate()?;
    Ok(manifest)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StudyError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| StudyError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Reads every `*.csv` under `logs_dir`, sorted by file name; the file stem
/// is the student id.
pub fn read_logs_dir(
    logs_dir: &Path,
    cal: &SemesterCalendar,
) -> Result<Vec<RevisionLog>, StudyError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(logs_dir)
        .map_err(io_err(logs_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let opts = ParseOptions {
        tz: cal.tz(),
        document_id: None,
    };
    paths
        .iter()
        .map(|p| {
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let file = fs::File::open(p).map_err(io_err(p))?;
            parse_revision_log_with(file, &id, &opts).map_err(|source| StudyError::Revlog {
                path: p.clone(),
                source,
            })
        })
        .collect()
}

pub fn read_scores(path: &Path) -> Result<Vec<(String, f64)>, StudyError> {
    let malformed = |reason: String| StudyError::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        if rec.len() != 2 {
            return Err(malformed(format!(
                "expected 2 columns, found {}",
                rec.len()
            )));
        }
        let score: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| malformed(format!("bad score `{}`", &rec[1])))?;
        out.push((rec[0].trim().to_string(), score));
    }
    Ok(out)
}

pub fn write_scores(path: &Path, scores: &[(String, f64)]) -> Result<(), StudyError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let to_err = |e: csv::Error| StudyError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    w.write_record(["student_id", "score"]).map_err(to_err)?;
    for (id, s) in scores {
        w.write_record([id.clone(), format!("{s}")])
            .map_err(to_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn optional<T>(
    path: PathBuf,
    read: impl FnOnce(&Path) -> Result<T, StudyError>,
) -> Result<Option<T>, StudyError> {
    if path.exists() {
        read(&path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn read_cohort(
    dir: &Path,
    name: &str,
    cal: &SemesterCalendar,
) -> Result<CohortData, StudyError> {
    let base = dir.join(name);
    let logs = read_logs_dir(&base.join("logs"), cal)?;
    let srl = optional(base.join("srl.csv"), |p| {
        let file = fs::File::open(p).map_err(io_err(p))?;
        parse_questionnaire(file).map_err(|source| StudyError::Srl {
            path: p.to_path_buf(),
            source,
        })
    })?;
    let clusters = optional(base.join("clusters.csv"), |p| {
        let file = fs::File::open(p).map_err(io_err(p))?;
        read_clusters_csv(file).map_err(|source| StudyError::Srl {
            path: p.to_path_buf(),
            source,
        })
    })?;
    let scores = optional(base.join("scores.csv"), read_scores)?;
    Ok(CohortData {
        name: name.to_string(),
        logs,
        srl,
        clusters,
        scores,
    })
}

pub fn read_study(dir: &Path) -> Result<(StudyManifest, CohortData, CohortData), StudyError> {
    let manifest = read_manifest(dir)?;
    let control = read_cohort(dir, &manifest.control, &manifest.calendar)?;
    let intervention = read_cohort(dir, &manifest.intervention, &manifest.calendar)?;
    Ok((manifest, control, intervention))
}

pub fn write_cohort(dir: &Path, cohort: &SimCohort) -> Result<(), StudyError> {
    let base = dir.join(&cohort.truth.cohort);
    let logs_dir = base.join("logs");
    fs::create_dir_all(&logs_dir).map_err(io_err(&logs_dir))?;
    for log in &cohort.logs {
        let path = logs_dir.join(format!("{}.csv", log.student_id));
        let file = BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
        write_revision_log(log, file).map_err(|source| StudyError::Revlog {
            path: path.clone(),
            source,
        })?;
    }
    let path = base.join("srl.csv");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    write_questionnaire(&cohort.srl, file).map_err(|e| StudyError::Malformed {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    write_scores(&base.join("scores.csv"), &cohort.scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub calendar: SemesterCalendar,
    pub cohorts: Vec<CohortTruth>,
}

/// Writes a simulated two-cohort study plus its ground truth.
pub fn write_simulated_study(
    dir: &Path,
    manifest: &StudyManifest,
    control: &SimCohort,
    intervention: &SimCohort,
) -> Result<(), StudyError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join("study.json"), manifest)?;
    write_cohort(dir, control)?;
    write_cohort(dir, intervention)?;
    let truth = GroundTruth {
        seed: manifest.seed.unwrap_or_default(),
        calendar: manifest.calendar.clone(),
        cohorts: vec![control.truth.clone(), intervention.truth.clone()],
    };
    write_json(&dir.join("ground_truth.json"), &truth)
}
