//! Scenario files, suite execution and report persistence.

pub mod report;
pub mod scenario;
pub mod suite;

pub use report::{format_float, to_json_string, write_trajectory_csv, ScenarioResult, SuiteReport, Verdict};
pub use scenario::{load_scenario, parse_scenario, LoadError, LoadedFile, Scenario, ScenarioFile, Tolerances};
pub use suite::{effective_jobs, run_suite, RunOptions, JOBS_ENV};
