use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GuidanceError, MarkerWindow};

/// Smallest admissible `Z + z_cam`; anything closer is treated as behind the camera.
pub const MIN_DEPTH: f64 = 1e-9;

/// Pinhole intrinsics of the guidance image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CameraIntrinsics {
    /// Focal length in pixels.
    pub f: f64,
    pub cx: f64,
    pub cy: f64,
    /// Depth offset added to every model Z, in meters.
    pub z_cam: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self { f: 500.0, cx: 332.50, cy: 325.00, z_cam: 2.0 }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        let finite = [self.f, self.cx, self.cy, self.z_cam].iter().all(|x| x.is_finite());
        if !finite || self.f <= 0.0 {
            return Err(GuidanceError::InvalidCamera(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn depth(&self, v: &Vector3<f64>) -> f64 {
        v.z + self.z_cam
    }
}

/// Image position of a model-space point: `x = f X / (Z + z_cam) + cx`,
/// `y = f Y / (Z + z_cam) + cy`.
pub fn project_vertex(v: &Vector3<f64>, cam: &CameraIntrinsics) -> Result<[f64; 2], GuidanceError> {
    let depth = cam.depth(v);
    if !(depth > MIN_DEPTH) {
        return Err(GuidanceError::BehindCamera { depth });
    }
    Ok([cam.f * v.x / depth + cam.cx, cam.f * v.y / depth + cam.cy])
}

/// The window test written as bounds on the model coordinates:
/// `(x_s - cx)/f (Z + z_cam) < X < (x_e - cx)/f (Z + z_cam)` and likewise for Y.
///
/// Equivalent to projecting and comparing against the window whenever the
/// point is in front of the camera.
pub fn satisfies_window_constraints(v: &Vector3<f64>, w: &MarkerWindow, cam: &CameraIntrinsics) -> bool {
    let depth = cam.depth(v);
    if !(depth > MIN_DEPTH) {
        return false;
    }
    v.x > (w.x_s - cam.cx) / cam.f * depth
        && v.x < (w.x_e - cam.cx) / cam.f * depth
        && v.y > (w.y_s - cam.cy) / cam.f * depth
        && v.y < (w.y_e - cam.cy) / cam.f * depth
}
