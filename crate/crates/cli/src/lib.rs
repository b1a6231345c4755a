//! Config-driven runner for the delayed-choice complementarity simulator.
//!
//! [`scenario`] parses and validates TOML scenario files; [`execute`] runs
//! them, persisting event logs, fringe and sweep tables, a JSON summary, and
//! a run manifest.

pub mod execute;
pub mod scenario;

pub use execute::{
    execute, run_scenario, DirLogSink, DiscardLogs, ExecuteOptions, ExecutionReport, LogSink,
    ScenarioOutcome,
};
pub use scenario::{load_config, parse_scenario, ScanSettings, Scenario, ScenarioKind};
