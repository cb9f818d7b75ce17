//! Seeded Monte Carlo experiments.
//!
//! Each trial draws one channel realization from `(seed, trial index)` and
//! runs every configured scheme at every SNR point on it, so scheme
//! comparisons are paired. Trials run on a rayon pool; output order depends
//! only on the configuration.

pub mod config;
pub mod sweep;
pub mod trial;

pub use config::{SnrSweep, SystemConfig};
pub use sweep::{
    convergence_rows, mean_stderr, run_to_files, summarize, sweep, user_rate_rows, ConvergenceRow, CsvRecord,
    Mode, OutputPaths, SummaryRow, SweepResult, UserRateRow,
};
pub use trial::{Experiment, ExperimentRecord};
