//! Scenario files, parameter sweeps and CSV output behind the command-line tool.

pub mod config;
pub mod presets;
pub mod report;
pub mod sweep;

pub use config::{load_config, load_scenarios, OperatingPoint, Scenario, SplitRule};
pub use presets::Preset;
pub use report::{analytic_report, AnalyticReport};
pub use sweep::{read_rows, run_sweep, sweep_to_csv, CsvSink, Overrides, SweepRow, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    /// Bad or missing input; `key` is the offending JSON path.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// Process exit status: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config { .. } => 2,
            _ => 3,
        }
    }
}
