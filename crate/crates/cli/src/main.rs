//! `writelog`: revision logs in, engagement tables, figures and feedback out.
//!
//! Exit status is 0 on success, 1 when the data could not be processed and 2
//! for usage errors.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{NaiveDate, Weekday};
use clap::{Args, Parser, Subcommand, ValueEnum};
use writelog::calendar::Window;
use writelog::report::{SampleUnit, ZeroDays};
use writelog::revlog::CountMode;
use writelog::stats::ZeroMethod;

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration; exit status 2.
    Usage(String),
    /// The inputs could not be processed; exit status 1.
    Data(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "writelog",
    version,
    about = "Engagement analytics over document revision logs",
    long_about = "Engagement analytics over document revision logs.\n\n\
        Values are resolved as: command-line flag, then the --config file, then the \
        built-in default. For study directories the calendar in study.json takes the \
        place of the default.\n\n\
        Exit status: 0 success, 1 data error, 2 usage error."
)]
pub struct Cli {
    /// JSON run configuration; command-line flags take precedence over it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Run every batch step on the calling thread
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse revision logs and write one daily series CSV per student
    Ingest {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        calendar: CalendarArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Write the per-student engagement features for every window
    Features {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        calendar: CalendarArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Decompose a daily series into trend, weekly seasonality and residual
    Decompose {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        calendar: CalendarArgs,
        #[command(flatten)]
        series: SeriesArgs,
        /// Seasonal period in days [default: 7]
        #[arg(long, value_name = "DAYS", value_parser = clap::value_parser!(u64).range(2..))]
        period: Option<u64>,
        /// Part of the calendar to decompose
        #[arg(long, value_enum, default_value = "full")]
        window: WindowArg,
    },
    /// Score SRL questionnaires and split students into high and low clusters
    Cluster {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        clustering: ClusterArgs,
    },
    /// Run the within-cohort (signed-rank) and between-cohort (rank-sum) tests
    Compare {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        calendar: CalendarArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[command(flatten)]
        tests: TestArgs,
    },
    /// Render feedback emails and comparison charts for intervention students
    Feedback {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        calendar: CalendarArgs,
        #[command(flatten)]
        series: SeriesArgs,
        /// Only these students (repeatable) [default: every intervention student]
        #[arg(long = "student", value_name = "ID")]
        students: Vec<String>,
        /// Email template with {{slot}} markers [default: built-in template]
        #[arg(long, value_name = "FILE")]
        template: Option<PathBuf>,
        /// Share of characters above which one week dominates [default: 0.5]
        #[arg(long, value_name = "SHARE")]
        dominant_share: Option<f64>,
        /// First active week that counts as a late start [default: 3]
        #[arg(long, value_name = "WEEK")]
        late_start_week: Option<u32>,
    },
    /// Write every table, figure and the JSON summary for a study
    Report {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        calendar: CalendarArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[command(flatten)]
        tests: TestArgs,
        #[command(flatten)]
        clustering: ClusterArgs,
        /// Seasonal period in days [default: 7]
        #[arg(long, value_name = "DAYS", value_parser = clap::value_parser!(u64).range(2..))]
        period: Option<u64>,
        /// Decompose each half separately (true) or the whole calendar (false) [default: true]
        #[arg(long, value_name = "BOOL")]
        decompose_per_half: Option<bool>,
    },
    /// Generate a synthetic two-cohort study directory
    Simulate {
        /// Output study directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        calendar: CalendarArgs,
        /// Random seed [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        /// Second-half volume multiplier of the intervention cohort [default: 1.3]
        #[arg(long, value_name = "FACTOR")]
        effect: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input: a study directory, a directory of log CSVs or one log CSV
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Output directory; created if missing and never inside the input
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalendarArgs {
    /// Monday of week 1 (YYYY-MM-DD); required unless the input is a study directory
    #[arg(long, value_name = "DATE")]
    pub start_monday: Option<NaiveDate>,
    /// Number of teaching weeks [default: 10]
    #[arg(long)]
    pub weeks: Option<u32>,
    /// First week of the second half [default: 6]
    #[arg(long, value_name = "WEEK")]
    pub intervention_week: Option<u32>,
    /// Local zone as minutes east of UTC [default: 0]
    #[arg(long, value_name = "MINUTES", allow_hyphen_values = true)]
    pub utc_offset_minutes: Option<i32>,
    /// Weekday of the lecture, e.g. Tue [default: Tue]
    #[arg(long, value_name = "DAY")]
    pub lecture_weekday: Option<Weekday>,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Which edits count as edited characters [default: both]
    #[arg(long, value_enum)]
    pub count_mode: Option<CountModeArg>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Keep or drop zero-valued days in rank-test samples [default: include]
    #[arg(long, value_enum)]
    pub zero_days: Option<ZeroDaysArg>,
    /// One observation per day (cohort average) or per student [default: daily-cohort-average]
    #[arg(long, value_enum)]
    pub sample_unit: Option<SampleUnitArg>,
    /// Handling of zero differences in the signed-rank test [default: wilcox]
    #[arg(long, value_enum)]
    pub zero_method: Option<ZeroMethodArg>,
    /// Apply a continuity correction to both rank tests [default: false]
    #[arg(long, value_name = "BOOL")]
    pub continuity_correction: Option<bool>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Seed of the k-means restarts [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of k-means restarts [default: 10]
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Iteration cap per restart [default: 300]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// z-score each dimension before clustering [default: true]
    #[arg(long, value_name = "BOOL")]
    pub standardize: Option<bool>,
    /// Lowest valid answer [default: 1]
    #[arg(long, value_name = "N", allow_hyphen_values = true)]
    pub likert_min: Option<i32>,
    /// Highest valid answer [default: 5]
    #[arg(long, value_name = "N", allow_hyphen_values = true)]
    pub likert_max: Option<i32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WindowArg {
    H1,
    H2,
    Full,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::H1 => Window::H1,
            WindowArg::H2 => Window::H2,
            WindowArg::Full => Window::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CountModeArg {
    Both,
    InsertOnly,
}

impl From<CountModeArg> for CountMode {
    fn from(m: CountModeArg) -> Self {
        match m {
            CountModeArg::Both => CountMode::Both,
            CountModeArg::InsertOnly => CountMode::InsertOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ZeroDaysArg {
    Include,
    Exclude,
}

impl From<ZeroDaysArg> for ZeroDays {
    fn from(z: ZeroDaysArg) -> Self {
        match z {
            ZeroDaysArg::Include => ZeroDays::Include,
            ZeroDaysArg::Exclude => ZeroDays::Exclude,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SampleUnitArg {
    DailyCohortAverage,
    StudentAverage,
}

impl From<SampleUnitArg> for SampleUnit {
    fn from(s: SampleUnitArg) -> Self {
        match s {
            SampleUnitArg::DailyCohortAverage => SampleUnit::DailyCohortAverage,
            SampleUnitArg::StudentAverage => SampleUnit::StudentAverage,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ZeroMethodArg {
    Wilcox,
    Pratt,
}

impl From<ZeroMethodArg> for ZeroMethod {
    fn from(z: ZeroMethodArg) -> Self {
        match z {
            ZeroMethodArg::Wilcox => ZeroMethod::Wilcox,
            ZeroMethodArg::Pratt => ZeroMethod::Pratt,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn every_flag_is_documented() {
        let cmd = Cli::command();
        for sub in cmd.get_subcommands() {
            for arg in sub.get_arguments() {
                if arg.get_id() == "help" || arg.get_id() == "version" {
                    continue;
                }
                assert!(
                    arg.get_help().is_some(),
                    "{} --{} has no help text",
                    sub.get_name(),
                    arg.get_id()
                );
            }
        }
    }
}
