//! Experiment harness: scenarios, closed-loop runs, metrics and logs.

pub mod cli;
pub mod csv;
pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod validate;

pub use metrics::{performance_balance, tracking_errors, wear_work, Metrics, TrackingErrors, WearLedger};
pub use runner::{build_controller, compute_metrics, run_closed_loop, run_named, LogRow, RunResult, CONTROLLERS};
pub use scenario::{generate_scenario, Scenario, ScenarioKind, Trajectory};
