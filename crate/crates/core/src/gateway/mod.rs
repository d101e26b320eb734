//! Boundary to the external pose estimator.
//!
//! Frames arrive as newline-delimited JSON records
//! `{"t": seconds, "theta": [72], "beta": [10], "kp": [[x, y, c] x 18]?}`
//! from a `.poselog` file, a TCP peer or a child process. Every frame that
//! leaves this module has passed validation, so downstream code can assume
//! finite parameters of the right length and ordered timestamps.

mod frame;
mod live;
mod normalize;
mod replay;

use std::time::Duration;

use thiserror::Error;

pub use frame::{encode_record, parse_record, EstimatedFrame, FrameRecord, Keypoint, RecordProblem, NUM_KEYPOINTS};
pub use live::{connect_external, Endpoint, LiveOptions, LiveStream};
pub use normalize::{
    compute_bounding_box, compute_crop, BoundingBox, CropSpec, CROP_SIZE, DEFAULT_CONFIDENCE_THRESHOLD,
    DEFAULT_TARGET_DIAGONAL,
};
pub use replay::{open_replay, read_poselog, synthesize_convergence_replay, write_poselog, ReplayStream};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid frame: {message}")]
    Validation { line: usize, message: String },
    #[error("line {line}: timestamp {found} precedes {previous}")]
    TimestampRegression { line: usize, previous: f64, found: f64 },
    #[error("line {line}: protocol violation: {message}")]
    ProtocolViolation { line: usize, message: String },
    #[error("connect failed: {0}")]
    Connect(String),
    #[error("no frame received for {0:?}")]
    IdleTimeout(Duration),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no keypoint above confidence {threshold}")]
    NoConfidentKeypoints { threshold: f64 },
    #[error("bounding box has zero diagonal")]
    DegenerateBox,
    #[error("cannot synthesize replay: {0}")]
    Synthesis(String),
}

impl GatewayError {
    /// True for errors confined to a single record; the stream may continue.
    pub fn is_record_error(&self) -> bool {
        matches!(
            self,
            GatewayError::Parse { .. } | GatewayError::Validation { .. } | GatewayError::TimestampRegression { .. }
        )
    }
}

/// Any source of frames: replay file, live peer or in-memory list.
pub type FrameStream<'a> = Box<dyn Iterator<Item = Result<EstimatedFrame, GatewayError>> + Send + 'a>;
