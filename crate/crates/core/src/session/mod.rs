//! Session orchestration: configuration, target setup, the per-frame
//! pipeline and on-disk session records.

mod config;
mod pipeline;
mod store;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{default_viewpoints, SessionConfig, TargetSource, ViewpointSpec};
pub use pipeline::{
    run_session, set_target, FrameOutput, GuidanceSummary, MarkerSummary, SessionLogRecord, SessionOutcome,
    SessionRunner, TargetState,
};
pub use store::{SessionDir, SessionLogWriter, SessionStore, DEFAULT_SESSIONS_DIR, SESSIONS_DIR_ENV};

use crate::body_model::AssetError;
use crate::evaluation::EvalError;
use crate::gateway::{EstimatedFrame, GatewayError};
use crate::guidance::GuidanceError;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("session produced no samples ({skipped} frames skipped)")]
    NoSamples { skipped: usize },
}

/// Replay pacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Speed {
    /// Deliver frames at the intervals given by their timestamps.
    Realtime,
    /// Deliver frames as fast as they are consumed.
    #[default]
    Max,
}

impl std::str::FromStr for Speed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "realtime" => Ok(Speed::Realtime),
            "max" => Ok(Speed::Max),
            other => Err(format!("unknown speed {other:?}; expected realtime or max")),
        }
    }
}

/// Wraps a frame stream so that, at [`Speed::Realtime`], each frame is
/// released no earlier than its timestamp offset from the first frame.
pub fn paced<I>(frames: I, speed: Speed) -> impl Iterator<Item = Result<EstimatedFrame, GatewayError>>
where
    I: IntoIterator<Item = Result<EstimatedFrame, GatewayError>>,
{
    let mut origin: Option<(Instant, f64)> = None;
    frames.into_iter().inspect(move |item| {
        if speed != Speed::Realtime {
            return;
        }
        if let Ok(frame) = item {
            let (start, t0) = *origin.get_or_insert((Instant::now(), frame.timestamp));
            let due = start + Duration::from_secs_f64((frame.timestamp - t0).max(0.0));
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
    })
}
