//! The per-frame pipeline: mesh the estimate, align it to the target, score
//! markers and RMSE, accumulate session metrics.

use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{SessionConfig, SessionError};
use crate::body_model::{pose_mesh, BodyMesh, BodyModelAssets};
use crate::evaluation::{export_report, GuidanceMode, RmseSample, SessionMetrics, SessionReport, SessionState};
use crate::gateway::{EstimatedFrame, FrameRecord, GatewayError};
use crate::guidance::{
    bind_markers, build_guidance_frame, default_site_joints, skeleton_from_keypoints, skeleton_from_mesh,
    GuidanceFrame, MarkerBinding, MarkerColor, MarkerSite, Segment, SiteMap,
};

/// The target pose, meshed and bound.
#[derive(Debug, Clone)]
pub struct TargetState {
    pub frame: EstimatedFrame,
    pub mesh: Arc<BodyMesh>,
    pub bindings: SiteMap<MarkerBinding>,
    /// COCO stick figure of the target in the guidance image.
    pub skeleton: Vec<Segment>,
}

/// Meshes the target frame and binds the ten markers on it.
pub fn set_target(assets: &BodyModelAssets, config: &SessionConfig, frame: &EstimatedFrame) -> Result<TargetState, SessionError> {
    config.validate()?;
    let mesh = pose_mesh(assets, &frame.shape, &frame.pose)?;
    let bindings = bind_markers(&mesh, &default_site_joints(), &config.camera, &config.half_widths())?;
    let skeleton = skeleton_for(frame, &mesh, config)?;
    Ok(TargetState { frame: frame.clone(), mesh: Arc::new(mesh), bindings, skeleton })
}

fn skeleton_for(frame: &EstimatedFrame, mesh: &BodyMesh, config: &SessionConfig) -> Result<Vec<Segment>, SessionError> {
    Ok(match &frame.keypoints {
        Some(kp) => skeleton_from_keypoints(kp, config.confidence_threshold)?,
        None => skeleton_from_mesh(mesh, &config.camera)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSummary {
    pub site: MarkerSite,
    pub de: f64,
    pub color: MarkerColor,
    pub radius: f64,
}

/// Guidance of one frame without the meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GuidanceSummary {
    pub frame_id: u64,
    pub rmse: f64,
    pub markers: Vec<MarkerSummary>,
}

/// One line of a session log: the input frame plus what was shown for it.
/// The frame fields sit at the top level, so a session log is itself a
/// valid `.poselog`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLogRecord {
    #[serde(flatten)]
    pub frame: FrameRecord,
    pub guidance: GuidanceSummary,
}

/// Output for one ingested frame.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    /// 1-based, counting accepted frames only.
    pub frame_id: u64,
    pub input: EstimatedFrame,
    pub guidance: GuidanceFrame,
    /// Current pose stick figure, in skeleton mode.
    pub skeleton: Option<Vec<Segment>>,
}

impl FrameOutput {
    pub fn summary(&self) -> GuidanceSummary {
        GuidanceSummary {
            frame_id: self.frame_id,
            rmse: self.guidance.rmse,
            markers: self
                .guidance
                .markers
                .iter()
                .map(|m| MarkerSummary { site: m.site, de: m.d_e, color: m.color, radius: m.radius })
                .collect(),
        }
    }

    pub fn log_record(&self) -> SessionLogRecord {
        SessionLogRecord { frame: FrameRecord::from(&self.input), guidance: self.summary() }
    }
}

/// Incremental session: one frame at a time, in order.
pub struct SessionRunner {
    assets: Arc<BodyModelAssets>,
    config: SessionConfig,
    target: Arc<TargetState>,
    state: SessionState,
    skipped: usize,
    next_id: u64,
}

impl SessionRunner {
    pub fn new(assets: Arc<BodyModelAssets>, config: SessionConfig, target: Arc<TargetState>) -> Result<Self, SessionError> {
        config.validate()?;
        let n_rmse = assets.n_rmse();
        Ok(Self { assets, config, target, state: SessionState::new(n_rmse), skipped: 0, next_id: 1 })
    }

    pub fn mode(&self) -> GuidanceMode {
        self.config.mode
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Runs the pipeline on one frame. On error the frame is not counted
    /// and the session state is unchanged.
    pub fn ingest(&mut self, frame: EstimatedFrame) -> Result<FrameOutput, SessionError> {
        let mesh = pose_mesh(&self.assets, &frame.shape, &frame.pose)?;
        let guidance = build_guidance_frame(
            frame.timestamp,
            &mesh,
            &self.target.mesh,
            &self.target.bindings,
            self.assets.head_vertex_mask(),
            &self.config.guidance(),
        )?;
        let skeleton = match self.config.mode {
            GuidanceMode::Skeleton => Some(skeleton_for(&frame, &guidance.current, &self.config)?),
            GuidanceMode::Markers => None,
        };
        self.state.update(RmseSample { t: frame.timestamp, value: guidance.rmse })?;
        let frame_id = self.next_id;
        self.next_id += 1;
        Ok(FrameOutput { frame_id, input: frame, guidance, skeleton })
    }

    pub fn skip(&mut self, reason: &dyn std::fmt::Display) {
        warn!("skipping frame: {reason}");
        self.skipped += 1;
    }

    pub fn finish(&self, partial: bool) -> Result<SessionOutcome, SessionError> {
        let metrics = self.state.finalize().map_err(|_| SessionError::NoSamples { skipped: self.skipped })?;
        let mut report = export_report(&metrics, self.state.samples(), self.config.mode);
        report.skipped_frames = self.skipped;
        report.partial = partial;
        Ok(SessionOutcome { metrics, report })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub metrics: SessionMetrics,
    pub report: SessionReport,
}

/// Drives a whole frame stream through the pipeline.
///
/// Bad records and frames that fail in the pipeline are skipped and
/// counted. A transport failure ends the session early with the report
/// flagged as partial.
pub fn run_session<I>(
    assets: Arc<BodyModelAssets>,
    config: &SessionConfig,
    target: Arc<TargetState>,
    frames: I,
    mut on_frame: impl FnMut(&FrameOutput),
) -> Result<SessionOutcome, SessionError>
where
    I: IntoIterator<Item = Result<EstimatedFrame, GatewayError>>,
{
    let mut runner = SessionRunner::new(assets, config.clone(), target)?;
    let mut partial = false;
    for item in frames {
        match item {
            Ok(frame) => match runner.ingest(frame) {
                Ok(out) => on_frame(&out),
                Err(e) => runner.skip(&e),
            },
            Err(e) if e.is_record_error() => runner.skip(&e),
            Err(e) => {
                warn!("frame source failed, ending session: {e}");
                partial = true;
                break;
            }
        }
    }
    runner.finish(partial)
}
