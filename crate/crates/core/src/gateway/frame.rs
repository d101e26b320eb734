use serde::{Deserialize, Serialize};

use crate::body_model::{BodyPose, BodyShape, NUM_POSE_PARAMS, NUM_SHAPE_PARAMS};

/// Keypoints per frame, in COCO/OpenPose order.
pub const NUM_KEYPOINTS: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Self { x, y, confidence }
    }
}

/// One validated estimator output.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedFrame {
    /// Seconds; non-decreasing within a stream.
    pub timestamp: f64,
    pub pose: BodyPose,
    pub shape: BodyShape,
    pub keypoints: Option<[Keypoint; NUM_KEYPOINTS]>,
}

impl EstimatedFrame {
    pub fn new(timestamp: f64, pose: BodyPose, shape: BodyShape) -> Self {
        Self { timestamp, pose, shape, keypoints: None }
    }
}

/// Wire form of a frame: `{"t", "theta", "beta", "kp"?}`. Unknown fields
/// are ignored so that session logs, which append a guidance summary, stay
/// readable as frame streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: f64,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kp: Option<Vec<[f64; 3]>>,
}

impl From<&EstimatedFrame> for FrameRecord {
    fn from(f: &EstimatedFrame) -> Self {
        FrameRecord {
            t: f.timestamp,
            theta: f.pose.params().to_vec(),
            beta: f.shape.coefficients().to_vec(),
            kp: f.keypoints.map(|kp| kp.iter().map(|k| [k.x, k.y, k.confidence]).collect()),
        }
    }
}

/// Why a record was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordProblem {
    /// Not JSON or not the record shape.
    Syntax(String),
    /// Well-formed JSON that violates a frame invariant.
    Invalid(String),
}

impl FrameRecord {
    pub fn validate(&self) -> Result<EstimatedFrame, RecordProblem> {
        if !self.t.is_finite() {
            return Err(RecordProblem::Invalid("timestamp is not finite".into()));
        }
        if self.theta.len() != NUM_POSE_PARAMS {
            return Err(RecordProblem::Invalid(format!(
                "theta has {} parameters, expected {NUM_POSE_PARAMS}",
                self.theta.len()
            )));
        }
        if self.beta.len() != NUM_SHAPE_PARAMS {
            return Err(RecordProblem::Invalid(format!(
                "beta has {} parameters, expected {NUM_SHAPE_PARAMS}",
                self.beta.len()
            )));
        }
        let pose = BodyPose::from_slice(&self.theta).map_err(|e| RecordProblem::Invalid(e.to_string()))?;
        let shape = BodyShape::from_slice(&self.beta).map_err(|e| RecordProblem::Invalid(e.to_string()))?;
        let keypoints = match &self.kp {
            None => None,
            Some(kp) => {
                let arr: [[f64; 3]; NUM_KEYPOINTS] = kp.as_slice().try_into().map_err(|_| {
                    RecordProblem::Invalid(format!("kp has {} keypoints, expected {NUM_KEYPOINTS}", kp.len()))
                })?;
                if arr.as_flattened().iter().any(|x| !x.is_finite()) {
                    return Err(RecordProblem::Invalid("keypoint is not finite".into()));
                }
                Some(arr.map(|[x, y, c]| Keypoint::new(x, y, c)))
            }
        };
        Ok(EstimatedFrame { timestamp: self.t, pose, shape, keypoints })
    }
}

/// Parses one protocol line into a validated frame (timestamp ordering is
/// checked by the stream, not here).
pub fn parse_record(line: &str) -> Result<EstimatedFrame, RecordProblem> {
    let rec: FrameRecord = serde_json::from_str(line).map_err(|e| RecordProblem::Syntax(e.to_string()))?;
    rec.validate()
}

/// Serializes a frame as one protocol line, without the trailing newline.
pub fn encode_record(frame: &EstimatedFrame) -> String {
    serde_json::to_string(&FrameRecord::from(frame)).expect("frame records always serialize")
}
