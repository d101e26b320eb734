use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::camera::{project_vertex, CameraIntrinsics};
use super::markers::{marker_distance, marker_radius, ColorThresholds, MarkerBinding, MarkerColor, RadiusParams};
use super::{GuidanceError, MarkerSite, SiteMap};
use crate::body_model::BodyMesh;
use crate::evaluation::compute_rmse;

/// Translates `current` so its root joint lands on the target's root joint.
///
/// No rotation or scale is applied. The aligned root is set to the target
/// root exactly, so a second alignment is a no-op.
pub fn align_to_target(current: &BodyMesh, target: &BodyMesh) -> BodyMesh {
    let offset = target.root() - current.root();
    let mut aligned = current.translated(&offset);
    aligned.joints[0] = target.root();
    aligned
}

/// Per-frame guidance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct GuidanceConfig {
    pub camera: CameraIntrinsics,
    pub thresholds: ColorThresholds,
    pub radius: RadiusParams,
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        self.camera.validate()?;
        self.thresholds.validate()?;
        self.radius.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarkerState {
    pub site: MarkerSite,
    #[serde(rename = "de")]
    pub d_e: f64,
    pub color: MarkerColor,
    /// Pixels.
    pub radius: f64,
    /// Centroid of the marker's vertices on the aligned current mesh.
    pub position: [f64; 3],
    /// Centroid on the target mesh.
    pub target_position: [f64; 3],
    /// Projection of `position`, if it is in front of the camera.
    pub image_position: Option<[f64; 2]>,
}

/// Everything the display needs for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceFrame {
    pub timestamp: f64,
    pub current: BodyMesh,
    pub target: Arc<BodyMesh>,
    pub markers: Vec<MarkerState>,
    pub rmse: f64,
}

fn to_array(v: Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Aligns `current` to `target`, then scores every marker and the frame RMSE.
pub fn build_guidance_frame(
    timestamp: f64,
    current: &BodyMesh,
    target: &Arc<BodyMesh>,
    bindings: &SiteMap<MarkerBinding>,
    head_mask: &[bool],
    config: &GuidanceConfig,
) -> Result<GuidanceFrame, GuidanceError> {
    if current.vertices.len() != target.vertices.len() || current.joints.len() != target.joints.len() {
        return Err(GuidanceError::TopologyMismatch {
            current: current.vertices.len(),
            target: target.vertices.len(),
        });
    }
    let aligned = align_to_target(current, target);
    let markers = bindings
        .iter()
        .map(|(site, binding)| {
            debug_assert_eq!(binding.site, site);
            let position = binding.centroid(&aligned)?;
            let target_position = binding.centroid(target)?;
            let d_e = marker_distance(binding, &aligned, target)?;
            Ok(MarkerState {
                site,
                d_e,
                color: config.thresholds.color_for(d_e)?,
                radius: marker_radius(d_e, &config.radius)?,
                position: to_array(position),
                target_position: to_array(target_position),
                image_position: project_vertex(&position, &config.camera).ok(),
            })
        })
        .collect::<Result<Vec<_>, GuidanceError>>()?;
    let rmse = compute_rmse(&aligned, target, head_mask)?;
    Ok(GuidanceFrame { timestamp, current: aligned, target: Arc::clone(target), markers, rmse })
}
