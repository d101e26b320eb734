//! Pose and shape parameter vectors.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{AssetError, NUM_BODY_JOINTS, NUM_JOINTS, NUM_POSE_PARAMS, NUM_SHAPE_PARAMS};

/// Default bound on the magnitude of a single shape coefficient.
pub const DEFAULT_SHAPE_LIMIT: f64 = 10.0;

/// Ten PCA shape coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BodyShape([f64; NUM_SHAPE_PARAMS]);

impl BodyShape {
    pub const ZERO: BodyShape = BodyShape([0.0; NUM_SHAPE_PARAMS]);

    /// Builds a shape, rejecting non-finite values and coefficients above `limit`.
    pub fn with_limit(beta: [f64; NUM_SHAPE_PARAMS], limit: f64) -> Result<Self, AssetError> {
        for (i, b) in beta.iter().enumerate() {
            if !b.is_finite() {
                return Err(AssetError::NonFinite(format!("beta[{i}]")));
            }
            if b.abs() > limit {
                return Err(AssetError::ShapeOutOfRange { index: i, value: *b, limit });
            }
        }
        Ok(BodyShape(beta))
    }

    pub fn new(beta: [f64; NUM_SHAPE_PARAMS]) -> Result<Self, AssetError> {
        Self::with_limit(beta, DEFAULT_SHAPE_LIMIT)
    }

    pub fn from_slice(beta: &[f64]) -> Result<Self, AssetError> {
        let arr: [f64; NUM_SHAPE_PARAMS] = beta.try_into().map_err(|_| AssetError::ParamCount {
            what: "beta",
            expected: NUM_SHAPE_PARAMS,
            actual: beta.len(),
        })?;
        Self::new(arr)
    }

    /// Unit vector along coefficient `i`, scaled by `scale`.
    pub fn axis(i: usize, scale: f64) -> Self {
        let mut beta = [0.0; NUM_SHAPE_PARAMS];
        beta[i] = scale;
        BodyShape(beta)
    }

    pub fn coefficients(&self) -> &[f64; NUM_SHAPE_PARAMS] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|b| b.is_finite())
    }
}

impl Default for BodyShape {
    fn default() -> Self {
        Self::ZERO
    }
}

impl TryFrom<Vec<f64>> for BodyShape {
    type Error = AssetError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_slice(&v)
    }
}

impl From<BodyShape> for Vec<f64> {
    fn from(s: BodyShape) -> Self {
        s.0.to_vec()
    }
}

/// 72 axis-angle parameters: root orientation followed by 23 joint rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BodyPose([f64; NUM_POSE_PARAMS]);

impl BodyPose {
    pub const ZERO: BodyPose = BodyPose([0.0; NUM_POSE_PARAMS]);

    pub fn new(theta: [f64; NUM_POSE_PARAMS]) -> Result<Self, AssetError> {
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(AssetError::NonFinite(format!("theta[{i}]")));
        }
        Ok(BodyPose(theta))
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self, AssetError> {
        let arr: [f64; NUM_POSE_PARAMS] = theta.try_into().map_err(|_| AssetError::ParamCount {
            what: "theta",
            expected: NUM_POSE_PARAMS,
            actual: theta.len(),
        })?;
        Self::new(arr)
    }

    pub fn params(&self) -> &[f64; NUM_POSE_PARAMS] {
        &self.0
    }

    pub fn root_orientation(&self) -> Vector3<f64> {
        self.joint(0)
    }

    /// Axis-angle rotation of joint `j` (0 is the root).
    pub fn joint(&self, j: usize) -> Vector3<f64> {
        assert!(j < NUM_JOINTS, "joint index {j} out of range");
        Vector3::new(self.0[3 * j], self.0[3 * j + 1], self.0[3 * j + 2])
    }

    pub fn set_joint(&mut self, j: usize, r: Vector3<f64>) {
        assert!(j < NUM_JOINTS, "joint index {j} out of range");
        self.0[3 * j..3 * j + 3].copy_from_slice(r.as_slice());
    }

    pub fn with_joint(mut self, j: usize, r: Vector3<f64>) -> Self {
        self.set_joint(j, r);
        self
    }

    pub fn with_root(self, r: Vector3<f64>) -> Self {
        self.with_joint(0, r)
    }

    /// Rotations of the 23 non-root joints.
    pub fn joint_rotations(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        (1..=NUM_BODY_JOINTS).map(|j| self.joint(j))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|t| t.is_finite())
    }
}

impl Default for BodyPose {
    fn default() -> Self {
        Self::ZERO
    }
}

impl TryFrom<Vec<f64>> for BodyPose {
    type Error = AssetError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_slice(&v)
    }
}

impl From<BodyPose> for Vec<f64> {
    fn from(p: BodyPose) -> Self {
        p.0.to_vec()
    }
}

/// Componentwise linear blend between two poses.
///
/// Adequate for small rotation differences; large axis-angle gaps do not
/// follow the geodesic. `t = 1` returns `b` bit for bit.
pub fn interpolate_pose(a: &BodyPose, b: &BodyPose, t: f64) -> Result<BodyPose, AssetError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(AssetError::InterpolationParameter(t));
    }
    if t == 1.0 {
        return Ok(*b);
    }
    let mut out = [0.0; NUM_POSE_PARAMS];
    for (o, (x, y)) in out.iter_mut().zip(a.0.iter().zip(b.0.iter())) {
        // a + t(b - a) is monotone in t under rounding; (1-t)a + tb is not.
        *o = x + t * (y - x);
    }
    BodyPose::new(out)
}
