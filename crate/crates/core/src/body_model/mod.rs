//! SMPL-compatible parametric body: shape blendshapes, joint regression and
//! linear blend skinning over a fixed-topology template.
//!
//! The vertex count is read from the assets; nothing here assumes a
//! particular mesh resolution. The skeleton is fixed at 24 joints (23 body
//! joints plus the root), which fixes the pose vector at 72 parameters.

mod assets;
mod io;
mod params;
mod skinning;
pub mod testbody;

use thiserror::Error;

pub use assets::{AssetParts, BodyModelAssets, WEIGHT_SUM_TOLERANCE};
pub use io::{encode_assets, load_assets, load_assets_json, load_assets_path, write_assets, write_assets_json, ASSET_MAGIC};
pub use params::{interpolate_pose, BodyPose, BodyShape, DEFAULT_SHAPE_LIMIT};
pub use skinning::{pose_mesh, regress_joints, rodrigues, shape_template, BodyMesh, SMALL_ANGLE};
pub use testbody::{generate_test_assets, generate_test_body, TestBodyParams};

/// Joints including the root.
pub const NUM_JOINTS: usize = 24;
/// Joints excluding the root.
pub const NUM_BODY_JOINTS: usize = NUM_JOINTS - 1;
pub const NUM_POSE_PARAMS: usize = 3 * NUM_JOINTS;
pub const NUM_SHAPE_PARAMS: usize = 10;
/// Pose-blendshape features: the 3x3 entries of (R - I) per body joint.
pub const NUM_POSE_FEATURES: usize = 9 * NUM_BODY_JOINTS;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("asset stream ended early")]
    Truncated,
    #[error("bad magic {0:?}, expected \"CBM1\"")]
    BadMagic([u8; 4]),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("malformed JSON assets: {0}")]
    Json(String),
    #[error("{what}: expected {expected}, found {actual}")]
    DimensionMismatch { what: &'static str, expected: usize, actual: usize },
    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    FaceIndex { face: usize, index: u32, vertex_count: usize },
    #[error("{what} row {row} sums to {sum}, expected 1")]
    WeightsNotNormalized { what: &'static str, row: usize, sum: f64 },
    #[error("{what} has a negative weight at ({row}, {col})")]
    NegativeWeight { what: &'static str, row: usize, col: usize },
    #[error("kinematic tree: {0}")]
    BadKinematicTree(String),
    #[error("head mask covers every vertex")]
    EmptyBodyMask,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("{what} needs {expected} parameters, got {actual}")]
    ParamCount { what: &'static str, expected: usize, actual: usize },
    #[error("shape coefficient {index} = {value} exceeds limit {limit}")]
    ShapeOutOfRange { index: usize, value: f64, limit: f64 },
    #[error("interpolation parameter {0} outside [0, 1]")]
    InterpolationParameter(f64),
}
