//! Revision-log ingestion.
//!
//! A log is the CSV export of a shared document's edit history: one row per
//! insertion or deletion with the character span it touched, the inserted
//! text, the platform's revision number, the editing user and a timestamp.
//! Columns are matched by name, case-insensitively, in any order:
//! `kind,start_index,end_index,payload,revision,user_id,timestamp`.

use std::io::{Read, Write};

use chrono::{DateTime, FixedOffset, NaiveDateTime, SecondsFormat, TimeZone};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const COLUMNS: [&str; 7] = [
    "kind",
    "start_index",
    "end_index",
    "payload",
    "revision",
    "user_id",
    "timestamp",
];

#[derive(Debug, Error)]
pub enum RevlogError {
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {0}: revision number or timestamp goes backwards")]
    NonMonotonicRevision(u64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Insertion,
    Deletion,
}

impl EditKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EditKind::Insertion => "insertion",
            EditKind::Deletion => "deletion",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "insertion" | "insert" => Some(EditKind::Insertion),
            "deletion" | "delete" => Some(EditKind::Deletion),
            _ => None,
        }
    }
}

/// Which edits count toward "edited characters".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    #[default]
    Both,
    InsertOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionEvent {
    pub kind: EditKind,
    /// Character offset where the edit starts.
    pub start_index: u64,
    pub end_index: u64,
    /// Inserted text; empty for deletions.
    pub payload: String,
    pub revision: u64,
    pub user_id: String,
    pub timestamp: DateTime<FixedOffset>,
}

impl RevisionEvent {
    /// Checks the per-event invariants, returning a reason on failure.
    pub fn validate(&self) -> Result<(), String> {
        if self.end_index < self.start_index {
            return Err(format!(
                "end_index {} precedes start_index {}",
                self.end_index, self.start_index
            ));
        }
        if self.revision == 0 {
            return Err("revision number must be positive".into());
        }
        match self.kind {
            EditKind::Insertion if self.payload.is_empty() => {
                Err("insertion with empty payload".into())
            }
            EditKind::Deletion if !self.payload.is_empty() => {
                Err("deletion must not carry a payload".into())
            }
            _ => Ok(()),
        }
    }
}

/// Characters touched by one edit: inserted payload length (Unicode scalar
/// values) or deleted span length.
pub fn event_char_delta(e: &RevisionEvent) -> u64 {
    match e.kind {
        EditKind::Insertion => e.payload.chars().count() as u64,
        EditKind::Deletion => e.end_index - e.start_index,
    }
}

pub fn counted_chars(e: &RevisionEvent, mode: CountMode) -> u64 {
    match (mode, e.kind) {
        (CountMode::InsertOnly, EditKind::Deletion) => 0,
        _ => event_char_delta(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionLog {
    pub document_id: String,
    pub student_id: String,
    pub events: Vec<RevisionEvent>,
}

impl RevisionLog {
    pub fn total_chars(&self, mode: CountMode) -> u64 {
        self.events.iter().map(|e| counted_chars(e, mode)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Zone the timestamps are converted to; also the zone assumed for
    /// timestamps that carry no offset.
    pub tz: FixedOffset,
    pub document_id: Option<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            tz: FixedOffset::east_opt(0).unwrap(),
            document_id: None,
        }
    }
}

pub fn parse_revision_log<R: Read>(
    source: R,
    student_id: &str,
) -> Result<RevisionLog, RevlogError> {
    parse_revision_log_with(source, student_id, &ParseOptions::default())
}

pub fn parse_revision_log_with<R: Read>(
    source: R,
    student_id: &str,
    opts: &ParseOptions,
) -> Result<RevisionLog, RevlogError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(RevlogError::MissingColumn(name))?;
    }

    let mut events: Vec<RevisionEvent> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        let malformed = |reason: String| RevlogError::MalformedRow { line, reason };

        let kind = EditKind::parse(field(0))
            .ok_or_else(|| malformed(format!("unknown kind `{}`", field(0))))?;
        let start_index =
            parse_u64(field(1)).map_err(|e| malformed(format!("start_index: {e}")))?;
        let end_index = parse_u64(field(2)).map_err(|e| malformed(format!("end_index: {e}")))?;
        let revision = parse_u64(field(4)).map_err(|e| malformed(format!("revision: {e}")))?;
        let timestamp = parse_timestamp(field(6), &opts.tz)
            .ok_or_else(|| malformed(format!("bad timestamp `{}`", field(6))))?;
        let event = RevisionEvent {
            kind,
            start_index,
            end_index,
            payload: field(3).to_string(),
            revision,
            user_id: field(5).to_string(),
            timestamp,
        };
        event.validate().map_err(malformed)?;
        if let Some(prev) = events.last() {
            if event.revision <= prev.revision || event.timestamp < prev.timestamp {
                return Err(RevlogError::NonMonotonicRevision(line));
            }
        }
        events.push(event);
    }

    Ok(RevisionLog {
        document_id: opts
            .document_id
            .clone()
            .unwrap_or_else(|| student_id.to_string()),
        student_id: student_id.to_string(),
        events,
    })
}

fn parse_u64(s: &str) -> Result<u64, std::num::ParseIntError> {
    s.trim().parse()
}

fn parse_timestamp(s: &str, tz: &FixedOffset) -> Option<DateTime<FixedOffset>> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(tz));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return tz.from_local_datetime(&naive).single();
        }
    }
    None
}

/// Writes a log in the canonical column order with second-precision
/// RFC 3339 timestamps.
pub fn write_revision_log<W: Write>(log: &RevisionLog, sink: W) -> Result<(), RevlogError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(COLUMNS)?;
    for e in &log.events {
        w.write_record([
            e.kind.as_str(),
            &e.start_index.to_string(),
            &e.end_index.to_string(),
            &e.payload,
            &e.revision.to_string(),
            &e.user_id,
            &e.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
