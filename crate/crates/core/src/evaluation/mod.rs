//! Session scoring: per-frame RMSE over non-head vertices, the RMSE series,
//! training accuracy `R = (RMSE_0 - RMSE_min) / RMSE_0 * 100` and the
//! training time `t_min` at which the minimum was first reached.

mod report;
mod rmse;
mod session;

use thiserror::Error;

pub use report::{aggregate_by_mode, export_report, series_csv, GuidanceMode, ModeSummary, SessionReport};
pub use rmse::compute_rmse;
pub use session::{finalize_metrics, update_session, RmseSample, SessionMetrics, SessionState};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("topology mismatch: current {current} vertices, target {target}, head mask {mask}")]
    TopologyMismatch { current: usize, target: usize, mask: usize },
    #[error("every vertex is masked as head")]
    EmptyBody,
    #[error("session has no samples")]
    EmptySession,
    #[error("sample time {found} precedes {previous}")]
    TimestampRegression { previous: f64, found: f64 },
    #[error("invalid sample {0:?}")]
    InvalidSample(RmseSample),
    #[error("malformed report: {0}")]
    Report(String),
}
