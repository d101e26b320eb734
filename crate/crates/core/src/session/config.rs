use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::evaluation::GuidanceMode;
use crate::gateway::{read_poselog, EstimatedFrame, FrameRecord, DEFAULT_CONFIDENCE_THRESHOLD};
use crate::guidance::{
    CameraIntrinsics, ColorThresholds, GuidanceConfig, MarkerSite, RadiusParams, SiteMap, DEFAULT_HALF_WIDTH,
};

/// Display camera of one view window. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewpointSpec {
    pub azimuth: f64,
    pub elevation: f64,
    /// Meters from `look_at`.
    pub distance: f64,
    pub look_at: [f64; 3],
}

impl ViewpointSpec {
    pub fn validate(&self) -> Result<(), SessionError> {
        let finite = [self.azimuth, self.elevation, self.distance].iter().chain(&self.look_at).all(|x| x.is_finite());
        if !finite || self.distance <= 0.0 {
            return Err(SessionError::Config(format!("invalid viewpoint {self:?}: distance must be positive")));
        }
        Ok(())
    }
}

pub fn default_viewpoints() -> [ViewpointSpec; 2] {
    [
        ViewpointSpec { azimuth: 0.0, elevation: 10.0, distance: 2.5, look_at: [0.0, 0.0, 0.0] },
        ViewpointSpec { azimuth: 90.0, elevation: 10.0, distance: 2.5, look_at: [0.0, 0.0, 0.0] },
    ]
}

/// Where the target pose comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TargetSource {
    /// An inline protocol record.
    Frame(FrameRecord),
    /// Record `index` (zero-based) of a `.poselog` file.
    Poselog { path: PathBuf, #[serde(default)] index: usize },
}

impl TargetSource {
    pub fn resolve(&self) -> Result<EstimatedFrame, SessionError> {
        match self {
            TargetSource::Frame(rec) => {
                rec.validate().map_err(|e| SessionError::Config(format!("target frame: {e:?}")))
            }
            TargetSource::Poselog { path, index } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| SessionError::Config(format!("target {}: {e}", path.display())))?;
                let frames = read_poselog(std::io::BufReader::new(file))?;
                let count = frames.len();
                frames.into_iter().nth(*index).ok_or_else(|| {
                    SessionError::Config(format!("target {} has {count} frames, index {index} requested", path.display()))
                })
            }
        }
    }
}

/// Everything a session needs besides the frames themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SessionConfig {
    /// Asset file; the built-in test body is used when absent.
    pub assets: Option<PathBuf>,
    pub target: Option<TargetSource>,
    pub viewpoints: [ViewpointSpec; 2],
    pub mode: GuidanceMode,
    pub camera: CameraIntrinsics,
    pub thresholds: ColorThresholds,
    /// Marker window half-width in pixels.
    pub marker_half_width: f64,
    pub marker_half_width_overrides: BTreeMap<MarkerSite, f64>,
    pub marker_radius: RadiusParams,
    pub confidence_threshold: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            assets: None,
            target: None,
            viewpoints: default_viewpoints(),
            mode: GuidanceMode::Markers,
            camera: CameraIntrinsics::default(),
            thresholds: ColorThresholds::default(),
            marker_half_width: DEFAULT_HALF_WIDTH,
            marker_half_width_overrides: BTreeMap::new(),
            marker_radius: RadiusParams::default(),
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        for v in &self.viewpoints {
            v.validate()?;
        }
        self.guidance().validate()?;
        for (site, w) in self.half_widths().iter() {
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(SessionError::Config(format!("marker half-width for {site} must be non-negative, got {w}")));
            }
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(SessionError::Config(format!(
                "confidence threshold {} outside [0, 1]",
                self.confidence_threshold
            )));
        }
        Ok(())
    }

    pub fn guidance(&self) -> GuidanceConfig {
        GuidanceConfig { camera: self.camera, thresholds: self.thresholds, radius: self.marker_radius }
    }

    pub fn half_widths(&self) -> SiteMap<f64> {
        SiteMap::from_fn(|site| self.marker_half_width_overrides.get(&site).copied().unwrap_or(self.marker_half_width))
    }

    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let cfg: SessionConfig = serde_json::from_str(text).map_err(|e| SessionError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }
}
