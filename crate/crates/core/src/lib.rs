//! Guidance engine for core-training practice.
//!
//! A trainee's estimated body mesh is compared against a target mesh: the
//! two are aligned at the pelvis, ten marker regions (hands, elbows,
//! shoulders, knees, ankles) are located by projecting the target mesh into
//! the guidance camera, and each marker is colored and sized by how far the
//! trainee's corresponding region is from the target. Sessions are scored by
//! the per-frame RMSE over non-head vertices, the best RMSE reached, the time
//! it was reached and the relative improvement.
//!
//! Pose estimation happens outside this crate; frames arrive as
//! newline-delimited JSON through [`gateway`].

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body_model;
pub mod evaluation;
pub mod gateway;
pub mod guidance;
pub mod session;

pub use body_model::{BodyMesh, BodyModelAssets, BodyPose, BodyShape};
pub use gateway::EstimatedFrame;
pub use guidance::{CameraIntrinsics, GuidanceFrame, MarkerColor, MarkerSite};
pub use evaluation::{SessionMetrics, SessionReport};
