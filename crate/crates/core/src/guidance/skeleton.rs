//! Baseline guidance: an 18-joint COCO stick figure in a single view.
//!
//! From estimator keypoints the figure is drawn as-is. From a mesh, the 24
//! SMPL joints are mapped onto the COCO set with the fixed table in
//! [`COCO_FROM_SMPL`]; COCO's nose, eyes and ears have no SMPL counterpart
//! and are placed at fixed model-space offsets from the head joint.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::camera::{project_vertex, CameraIntrinsics};
use super::GuidanceError;
use crate::body_model::testbody::{
    HEAD, L_ANKLE, L_ELBOW, L_HIP, L_KNEE, L_SHOULDER, L_WRIST, NECK, R_ANKLE, R_ELBOW, R_HIP, R_KNEE, R_SHOULDER,
    R_WRIST,
};
use crate::body_model::BodyMesh;
use crate::gateway::{Keypoint, NUM_KEYPOINTS};

/// COCO keypoint names in OpenPose order.
pub const COCO_JOINT_NAMES: [&str; NUM_KEYPOINTS] = [
    "nose", "neck", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder", "l_elbow", "l_wrist", "r_hip", "r_knee",
    "r_ankle", "l_hip", "l_knee", "l_ankle", "r_eye", "l_eye", "r_ear", "l_ear",
];

/// The 17 limbs of the OpenPose COCO skeleton.
pub const COCO_BONES: [(usize, usize); 17] = [
    (1, 2),
    (1, 5),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (1, 8),
    (8, 9),
    (9, 10),
    (1, 11),
    (11, 12),
    (12, 13),
    (1, 0),
    (0, 14),
    (14, 16),
    (0, 15),
    (15, 17),
];

/// SMPL joint and model-space offset (meters) for each COCO keypoint.
pub const COCO_FROM_SMPL: [(usize, [f64; 3]); NUM_KEYPOINTS] = [
    (HEAD, [0.0, 0.08, 0.10]),
    (NECK, [0.0, 0.0, 0.0]),
    (R_SHOULDER, [0.0, 0.0, 0.0]),
    (R_ELBOW, [0.0, 0.0, 0.0]),
    (R_WRIST, [0.0, 0.0, 0.0]),
    (L_SHOULDER, [0.0, 0.0, 0.0]),
    (L_ELBOW, [0.0, 0.0, 0.0]),
    (L_WRIST, [0.0, 0.0, 0.0]),
    (R_HIP, [0.0, 0.0, 0.0]),
    (R_KNEE, [0.0, 0.0, 0.0]),
    (R_ANKLE, [0.0, 0.0, 0.0]),
    (L_HIP, [0.0, 0.0, 0.0]),
    (L_KNEE, [0.0, 0.0, 0.0]),
    (L_ANKLE, [0.0, 0.0, 0.0]),
    (HEAD, [-0.035, 0.11, 0.085]),
    (HEAD, [0.035, 0.11, 0.085]),
    (HEAD, [-0.075, 0.09, 0.0]),
    (HEAD, [0.075, 0.09, 0.0]),
];

/// One drawn bone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from: usize,
    pub to: usize,
    pub start: [f64; 2],
    pub end: [f64; 2],
}

/// 3D COCO joints approximated from a posed mesh.
pub fn coco_joints_from_mesh(mesh: &BodyMesh) -> Result<[Vector3<f64>; NUM_KEYPOINTS], GuidanceError> {
    let mut out = [Vector3::zeros(); NUM_KEYPOINTS];
    for (slot, (j, offset)) in out.iter_mut().zip(COCO_FROM_SMPL.iter()) {
        let joint = mesh.joints.get(*j).ok_or(GuidanceError::MissingJoint(*j))?;
        *slot = joint + Vector3::from(*offset);
    }
    Ok(out)
}

fn segments(points: &[Option<[f64; 2]>; NUM_KEYPOINTS]) -> Result<Vec<Segment>, GuidanceError> {
    let present = points.iter().filter(|p| p.is_some()).count();
    if present < 2 {
        return Err(GuidanceError::TooFewJoints(present));
    }
    Ok(COCO_BONES
        .iter()
        .filter_map(|&(a, b)| Some(Segment { from: a, to: b, start: points[a]?, end: points[b]? }))
        .collect())
}

/// Stick figure from estimator keypoints; joints at or below `threshold`
/// confidence drop their bones.
pub fn skeleton_from_keypoints(keypoints: &[Keypoint; NUM_KEYPOINTS], threshold: f64) -> Result<Vec<Segment>, GuidanceError> {
    let points = keypoints.map(|k| (k.confidence > threshold).then_some([k.x, k.y]));
    segments(&points)
}

/// Stick figure from a mesh, projected through `cam`. Joints behind the
/// camera are treated as missing.
pub fn skeleton_from_mesh(mesh: &BodyMesh, cam: &CameraIntrinsics) -> Result<Vec<Segment>, GuidanceError> {
    let joints = coco_joints_from_mesh(mesh)?;
    let points = joints.map(|j| project_vertex(&j, cam).ok());
    segments(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{generate_test_assets, pose_mesh, BodyPose, BodyShape};

    fn full_keypoints() -> [Keypoint; NUM_KEYPOINTS] {
        std::array::from_fn(|i| Keypoint::new(i as f64 * 10.0, 100.0 + i as f64, 0.9))
    }

    #[test]
    fn all_joints_draw_every_bone() {
        let s = skeleton_from_keypoints(&full_keypoints(), 0.1).unwrap();
        assert_eq!(s.len(), COCO_BONES.len());
    }

    #[test]
    fn missing_joint_drops_incident_bones() {
        for missing in 0..NUM_KEYPOINTS {
            let mut kp = full_keypoints();
            kp[missing].confidence = 0.0;
            let s = skeleton_from_keypoints(&kp, 0.1).unwrap();
            let incident = COCO_BONES.iter().filter(|(a, b)| *a == missing || *b == missing).count();
            assert_eq!(s.len(), COCO_BONES.len() - incident, "joint {missing}");
            assert!(s.iter().all(|seg| seg.from != missing && seg.to != missing));
        }
    }

    #[test]
    fn fewer_than_two_joints_is_an_error() {
        let mut kp = full_keypoints();
        for k in kp.iter_mut().skip(1) {
            k.confidence = 0.0;
        }
        assert!(matches!(skeleton_from_keypoints(&kp, 0.1), Err(GuidanceError::TooFewJoints(1))));
    }

    #[test]
    fn mesh_path_is_jointwise_projection() {
        let a = generate_test_assets(6, 1);
        let mesh = pose_mesh(&a, &BodyShape::ZERO, &BodyPose::ZERO).unwrap();
        let cam = CameraIntrinsics::default();
        let segs = skeleton_from_mesh(&mesh, &cam).unwrap();
        assert_eq!(segs.len(), COCO_BONES.len());
        let joints = coco_joints_from_mesh(&mesh).unwrap();
        for seg in segs {
            assert_eq!(seg.start, project_vertex(&joints[seg.from], &cam).unwrap());
            assert_eq!(seg.end, project_vertex(&joints[seg.to], &cam).unwrap());
        }
    }

    #[test]
    fn names_and_bones_are_consistent() {
        assert_eq!(COCO_JOINT_NAMES[1], "neck");
        for (a, b) in COCO_BONES {
            assert!(a < NUM_KEYPOINTS && b < NUM_KEYPOINTS);
        }
    }
}
