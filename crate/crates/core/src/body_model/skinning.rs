//! Shape blendshapes, joint regression and linear blend skinning.

use nalgebra::{Matrix3, Vector3};

use super::assets::topological_order;
use super::{AssetError, BodyModelAssets, BodyPose, BodyShape, NUM_BODY_JOINTS, NUM_JOINTS, NUM_POSE_FEATURES, NUM_SHAPE_PARAMS};

/// Below this angle Rodrigues' formula switches to its Taylor series.
pub const SMALL_ANGLE: f64 = 1e-8;

/// A posed body: vertex and joint positions in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub joints: Vec<Vector3<f64>>,
}

impl BodyMesh {
    pub fn root(&self) -> Vector3<f64> {
        self.joints[0]
    }

    pub fn is_finite(&self) -> bool {
        self.vertices.iter().chain(self.joints.iter()).all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> BodyMesh {
        BodyMesh {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            joints: self.joints.iter().map(|j| j + offset).collect(),
        }
    }
}

/// Rotation matrix of an axis-angle vector.
pub fn rodrigues(r: &Vector3<f64>) -> Matrix3<f64> {
    let angle = r.norm();
    let k = r.cross_matrix();
    if angle < SMALL_ANGLE {
        Matrix3::identity() + k + 0.5 * k * k
    } else {
        let (s, c) = angle.sin_cos();
        Matrix3::identity() + (s / angle) * k + ((1.0 - c) / (angle * angle)) * (k * k)
    }
}

/// Template vertices displaced by the shape blendshapes.
pub fn shape_template(assets: &BodyModelAssets, shape: &BodyShape) -> Vec<Vector3<f64>> {
    let beta = shape.coefficients();
    let dirs = assets.shape_blendshapes();
    assets
        .template_vertices()
        .iter()
        .enumerate()
        .map(|(v, base)| {
            let mut out = *base;
            for axis in 0..3 {
                let row = &dirs[(v * 3 + axis) * NUM_SHAPE_PARAMS..(v * 3 + axis + 1) * NUM_SHAPE_PARAMS];
                let disp: f64 = row.iter().zip(beta).map(|(d, b)| d * b).sum();
                out[axis] += disp;
            }
            out
        })
        .collect()
}

/// Joint locations as regressor-weighted averages of `vertices`.
pub fn regress_joints(assets: &BodyModelAssets, vertices: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    assert_eq!(vertices.len(), assets.vertex_count(), "vertex count does not match assets");
    (0..assets.joint_count())
        .map(|j| {
            assets
                .regressor_row(j)
                .iter()
                .fold(Vector3::zeros(), |acc, (v, w)| acc + vertices[*v] * *w)
        })
        .collect()
}

/// Per-joint rigid transforms, stored relative to the rest pose.
///
/// Joint `j` maps a rest-space point `x` to `rotation * x + offset`; the
/// posed joint location is `rotation * rest_joint + offset`.
struct JointTransforms {
    rotation: Vec<Matrix3<f64>>,
    offset: Vec<Vector3<f64>>,
}

fn compose_transforms(
    parents: &[Option<usize>],
    local: &[Matrix3<f64>],
    rest_joints: &[Vector3<f64>],
) -> JointTransforms {
    let j = parents.len();
    let mut rotation = vec![Matrix3::identity(); j];
    let mut offset = vec![Vector3::zeros(); j];
    for idx in topological_order(parents) {
        match parents[idx] {
            None => {
                rotation[idx] = local[idx];
                // The root pivots about its own rest location.
                offset[idx] = rest_joints[idx] - local[idx] * rest_joints[idx];
            }
            Some(p) => {
                rotation[idx] = rotation[p] * local[idx];
                offset[idx] = offset[p] + (rotation[p] - rotation[idx]) * rest_joints[idx];
            }
        }
    }
    JointTransforms { rotation, offset }
}

/// Poses the body model with linear blend skinning.
pub fn pose_mesh(assets: &BodyModelAssets, shape: &BodyShape, pose: &BodyPose) -> Result<BodyMesh, AssetError> {
    if !shape.is_finite() {
        return Err(AssetError::NonFinite("shape".into()));
    }
    if !pose.is_finite() {
        return Err(AssetError::NonFinite("pose".into()));
    }

    let mut rest = shape_template(assets, shape);
    let rest_joints = regress_joints(assets, &rest);
    let local: Vec<Matrix3<f64>> = (0..NUM_JOINTS).map(|j| rodrigues(&pose.joint(j))).collect();

    if let Some(dirs) = assets.pose_blendshapes() {
        let mut features = [0.0; NUM_POSE_FEATURES];
        for j in 0..NUM_BODY_JOINTS {
            let delta = local[j + 1] - Matrix3::identity();
            for r in 0..3 {
                for c in 0..3 {
                    features[9 * j + 3 * r + c] = delta[(r, c)];
                }
            }
        }
        if features.iter().any(|f| *f != 0.0) {
            for (v, out) in rest.iter_mut().enumerate() {
                for axis in 0..3 {
                    let base = (v * 3 + axis) * NUM_POSE_FEATURES;
                    let row = &dirs[base..base + NUM_POSE_FEATURES];
                    out[axis] += row.iter().zip(features.iter()).map(|(d, f)| d * f).sum::<f64>();
                }
            }
        }
    }

    let xf = compose_transforms(assets.kinematic_parents(), &local, &rest_joints);
    let deform: Vec<Matrix3<f64>> = xf.rotation.iter().map(|r| r - Matrix3::identity()).collect();

    // x' = x + sum_k w_k ((R_k - I) x + offset_k); exact at the identity pose.
    let vertices = rest
        .iter()
        .enumerate()
        .map(|(v, x)| {
            let mut disp = Vector3::zeros();
            for &(k, w) in assets.skin_influences(v) {
                disp += (deform[k] * x + xf.offset[k]) * w;
            }
            x + disp
        })
        .collect();

    let joints = rest_joints
        .iter()
        .zip(xf.rotation.iter().zip(xf.offset.iter()))
        .map(|(jr, (r, o))| r * jr + o)
        .collect();

    Ok(BodyMesh { vertices, joints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::generate_test_assets;
    use approx::assert_relative_eq;

    #[test]
    fn rodrigues_zero_is_exact_identity() {
        assert_eq!(rodrigues(&Vector3::zeros()), Matrix3::identity());
    }

    #[test]
    fn rodrigues_quarter_turn_about_z() {
        let r = rodrigues(&Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let x = r * Vector3::x();
        assert_relative_eq!(x, Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn rodrigues_is_orthonormal_and_matches_nalgebra() {
        for r in [Vector3::new(0.3, -1.2, 0.7), Vector3::new(1e-9, 0.0, -2e-9), Vector3::new(2.9, 0.1, 0.0)] {
            let m = rodrigues(&r);
            assert_relative_eq!(m.transpose() * m, Matrix3::identity(), epsilon = 1e-14);
            assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-14);
            let reference = nalgebra::Rotation3::new(r);
            assert_relative_eq!(m, *reference.matrix(), epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_shape_returns_template() {
        let a = generate_test_assets(6, 1);
        assert_eq!(shape_template(&a, &BodyShape::ZERO), a.template_vertices());
    }

    #[test]
    fn shape_is_linear_in_beta() {
        let a = generate_test_assets(6, 1);
        let t = a.template_vertices();
        let one = shape_template(&a, &BodyShape::axis(0, 1.0));
        let two = shape_template(&a, &BodyShape::axis(0, 2.0));
        let n = a.vertex_count();
        for v in 0..n {
            for axis in 0..3 {
                let slice = a.shape_blendshapes()[(v * 3 + axis) * NUM_SHAPE_PARAMS];
                assert_eq!(one[v][axis], t[v][axis] + slice);
                assert_relative_eq!(two[v][axis] - t[v][axis], 2.0 * (one[v][axis] - t[v][axis]), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn regress_joints_matches_dense_dot_product() {
        let a = generate_test_assets(5, 9);
        let verts = shape_template(&a, &BodyShape::axis(1, 0.8));
        let joints = regress_joints(&a, &verts);
        let n = a.vertex_count();
        for (j, joint) in joints.iter().enumerate() {
            let row = &a.joint_regressor()[j * n..(j + 1) * n];
            for axis in 0..3 {
                let mut acc = 0.0;
                for v in 0..n {
                    acc += row[v] * verts[v][axis];
                }
                assert_relative_eq!(joint[axis], acc, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identity_pose_reproduces_template_exactly() {
        let a = generate_test_assets(8, 1);
        let mesh = pose_mesh(&a, &BodyShape::ZERO, &BodyPose::ZERO).unwrap();
        assert_eq!(mesh.vertices, a.template_vertices());
        assert_eq!(mesh.joints, regress_joints(&a, a.template_vertices()));
    }
}
