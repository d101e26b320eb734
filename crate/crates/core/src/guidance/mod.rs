//! Per-frame guidance: alignment, projection, marker binding, marker
//! color/size, and the skeleton baseline.
//!
//! Marker bindings are computed once on the target mesh; the same vertex
//! indices are then read off every incoming frame, which is possible because
//! both meshes share the template topology.

mod camera;
mod frame;
mod markers;
mod sites;
pub mod skeleton;

use thiserror::Error;

pub use camera::{project_vertex, satisfies_window_constraints, CameraIntrinsics, MIN_DEPTH};
pub use frame::{align_to_target, build_guidance_frame, GuidanceConfig, GuidanceFrame, MarkerState};
pub use markers::{
    bind_markers, color_for_distance, compute_marker_windows, marker_distance, marker_radius, select_marker_vertices,
    ColorThresholds, MarkerBinding, MarkerColor, MarkerWindow, RadiusParams, DEFAULT_HALF_WIDTH,
};
pub use sites::{default_site_joints, MarkerSite, SiteMap, NUM_SITES};
pub use skeleton::{skeleton_from_keypoints, skeleton_from_mesh, Segment};

use crate::evaluation::EvalError;

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error("point at depth {depth} is at or behind the camera")]
    BehindCamera { depth: f64 },
    #[error("invalid camera intrinsics {0}")]
    InvalidCamera(String),
    #[error("marker {site} selected no vertices; widen its window")]
    EmptyBinding { site: MarkerSite },
    #[error("marker {site}: half-width {value} must be non-negative")]
    InvalidHalfWidth { site: MarkerSite, value: f64 },
    #[error("marker {site}: joint {joint} does not exist")]
    JointIndex { site: MarkerSite, joint: usize },
    #[error("marker {site}: vertex {index} out of range for {vertex_count} vertices")]
    VertexIndex { site: MarkerSite, index: usize, vertex_count: usize },
    #[error("distance {0} must be finite and non-negative")]
    InvalidDistance(f64),
    #[error("color thresholds must be positive and strictly increasing: {0:?}")]
    InvalidThresholds(ColorThresholds),
    #[error("invalid marker radius parameters {0:?}")]
    InvalidRadiusParams(RadiusParams),
    #[error("mesh has no joint {0}")]
    MissingJoint(usize),
    #[error("skeleton needs at least 2 joints, found {0}")]
    TooFewJoints(usize),
    #[error("current mesh has {current} vertices, target has {target}")]
    TopologyMismatch { current: usize, target: usize },
    #[error(transparent)]
    Evaluation(#[from] EvalError),
}
