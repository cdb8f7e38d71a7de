//! Engagement analytics over document revision logs.
//!
//! The pipeline turns exported revision logs into per-day engagement series
//! on a semester calendar, decomposes them into trend and weekly seasonality,
//! groups students by self-regulated-learning questionnaire scores, runs the
//! cohort comparisons (rank tests, t tests, correlations, χ²) and renders
//! per-student feedback emails with a comparison chart.

pub mod calendar;
pub mod feedback;

pub mod par;

pub mod report;
pub mod revlog;
pub mod simcohort;

pub mod srl;
pub mod stats;
pub mod study;
pub mod svg;

pub mod timeseries;

pub use par::Exec;
