//! Bounding box and crop normalization of estimator input.
//!
//! The estimator expects a 224x224 crop in which the person's bounding box
//! has a diagonal of about 150 px. Pixels never enter this crate; only the
//! crop parameters are computed, for diagnostics and for sidecars that want
//! them.

use serde::{Deserialize, Serialize};

use super::{GatewayError, Keypoint};

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.1;
pub const DEFAULT_TARGET_DIAGONAL: f64 = 150.0;
pub const CROP_SIZE: u32 = 224;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        debug_assert!(x_max >= x_min && y_max >= y_min);
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn diagonal(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    pub fn center(&self) -> [f64; 2] {
        [(self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropSpec {
    pub scale: f64,
    pub crop_center: [f64; 2],
    pub output_size: [u32; 2],
}

/// Axis-aligned box around keypoints whose confidence exceeds `threshold`.
pub fn compute_bounding_box(keypoints: &[Keypoint], threshold: f64) -> Result<BoundingBox, GatewayError> {
    let mut kept = keypoints.iter().filter(|k| k.confidence > threshold);
    let first = kept.next().ok_or(GatewayError::NoConfidentKeypoints { threshold })?;
    let init = BoundingBox::new(first.x, first.y, first.x, first.y);
    Ok(kept.fold(init, |b, k| BoundingBox {
        x_min: b.x_min.min(k.x),
        y_min: b.y_min.min(k.y),
        x_max: b.x_max.max(k.x),
        y_max: b.y_max.max(k.y),
    }))
}

/// Scale that brings the box diagonal to `target_diagonal`, centered on the box.
pub fn compute_crop(bbox: &BoundingBox, target_diagonal: f64) -> Result<CropSpec, GatewayError> {
    let diagonal = bbox.diagonal();
    if !(diagonal > 0.0) {
        return Err(GatewayError::DegenerateBox);
    }
    Ok(CropSpec {
        scale: target_diagonal / diagonal,
        crop_center: bbox.center(),
        output_size: [CROP_SIZE, CROP_SIZE],
    })
}
