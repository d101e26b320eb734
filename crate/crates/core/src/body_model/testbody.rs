//! Deterministic low-resolution humanoid for tests and demos.
//!
//! The body is built from one tube per bone of the 24-joint skeleton plus a
//! sphere for the head. Joint ordering and parents follow the SMPL layout,
//! with +y up and +x toward the body's left side.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AssetParts, BodyModelAssets, NUM_JOINTS, NUM_POSE_FEATURES, NUM_SHAPE_PARAMS};

pub const PELVIS: usize = 0;
pub const L_HIP: usize = 1;
pub const R_HIP: usize = 2;
pub const SPINE1: usize = 3;
pub const L_KNEE: usize = 4;
pub const R_KNEE: usize = 5;
pub const SPINE2: usize = 6;
pub const L_ANKLE: usize = 7;
pub const R_ANKLE: usize = 8;
pub const SPINE3: usize = 9;
pub const L_FOOT: usize = 10;
pub const R_FOOT: usize = 11;
pub const NECK: usize = 12;
pub const L_COLLAR: usize = 13;
pub const R_COLLAR: usize = 14;
pub const HEAD: usize = 15;
pub const L_SHOULDER: usize = 16;
pub const R_SHOULDER: usize = 17;
pub const L_ELBOW: usize = 18;
pub const R_ELBOW: usize = 19;
pub const L_WRIST: usize = 20;
pub const R_WRIST: usize = 21;
pub const L_HAND: usize = 22;
pub const R_HAND: usize = 23;

/// SMPL kinematic tree.
pub const SMPL_PARENTS: [Option<usize>; NUM_JOINTS] = [
    None,
    Some(0),
    Some(0),
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(9),
    Some(9),
    Some(12),
    Some(13),
    Some(14),
    Some(16),
    Some(17),
    Some(18),
    Some(19),
    Some(20),
    Some(21),
];

const REST_JOINTS: [[f64; 3]; NUM_JOINTS] = [
    [0.0, 0.0, 0.0],
    [0.09, -0.08, 0.0],
    [-0.09, -0.08, 0.0],
    [0.0, 0.11, 0.0],
    [0.10, -0.48, 0.0],
    [-0.10, -0.48, 0.0],
    [0.0, 0.24, 0.0],
    [0.10, -0.88, -0.02],
    [-0.10, -0.88, -0.02],
    [0.0, 0.30, 0.0],
    [0.11, -0.94, 0.10],
    [-0.11, -0.94, 0.10],
    [0.0, 0.52, 0.0],
    [0.07, 0.43, 0.0],
    [-0.07, 0.43, 0.0],
    [0.0, 0.62, 0.02],
    [0.17, 0.45, 0.0],
    [-0.17, 0.45, 0.0],
    [0.43, 0.45, 0.0],
    [-0.43, 0.45, 0.0],
    [0.68, 0.45, 0.0],
    [-0.68, 0.45, 0.0],
    [0.76, 0.45, 0.0],
    [-0.76, 0.45, 0.0],
];

/// Tube radius of the bone ending at each joint (index 0 unused).
const BONE_RADIUS: [f64; NUM_JOINTS] = [
    0.0, 0.07, 0.07, 0.12, 0.07, 0.07, 0.12, 0.05, 0.05, 0.13, 0.04, 0.04, 0.06, 0.05, 0.05, 0.05,
    0.05, 0.05, 0.045, 0.045, 0.04, 0.04, 0.035, 0.035,
];

const LEG_JOINTS: [usize; 8] = [L_HIP, R_HIP, L_KNEE, R_KNEE, L_ANKLE, R_ANKLE, L_FOOT, R_FOOT];
const ARM_JOINTS: [usize; 8] = [L_COLLAR, R_COLLAR, L_SHOULDER, R_SHOULDER, L_ELBOW, R_ELBOW, L_WRIST, R_WRIST];

const HEAD_RADIUS: f64 = 0.10;
const HEAD_CENTER_OFFSET: [f64; 3] = [0.0, 0.09, 0.0];
const JITTER: f64 = 1e-3;

/// Resolution and seed of a generated body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestBodyParams {
    /// Vertices around each ring (at least 3).
    pub n_ring: usize,
    /// Rings along each bone tube (at least 2).
    pub rings_per_bone: usize,
    /// Latitude rings of the head sphere (at least 1).
    pub head_rings: usize,
    pub seed: u64,
    /// Adds random pose-corrective blendshapes.
    pub pose_blendshapes: bool,
}

impl TestBodyParams {
    pub fn new(n_ring: usize, seed: u64) -> Self {
        Self { n_ring, rings_per_bone: 5, head_rings: 10, seed, pose_blendshapes: false }
    }

    /// A body with SMPL's vertex count (6,890) and pose blendshapes.
    pub fn smpl_sized(seed: u64) -> Self {
        Self { n_ring: 53, rings_per_bone: 5, head_rings: 15, seed, pose_blendshapes: true }
    }

    pub fn vertex_count(&self) -> usize {
        self.n_ring * (self.rings_per_bone * (NUM_JOINTS - 1) + self.head_rings)
    }
}

/// Generates the default test body: 5 rings per bone, 10 head rings.
///
/// With `n_ring = 8` the body has 1,000 vertices.
pub fn generate_test_assets(n_ring: usize, seed: u64) -> BodyModelAssets {
    generate_test_body(&TestBodyParams::new(n_ring, seed))
}

pub fn generate_test_body(params: &TestBodyParams) -> BodyModelAssets {
    BodyModelAssets::new(build_parts(params)).expect("generated test body violates asset invariants")
}

/// Kind of each generated vertex, used to derive the shape basis.
#[derive(Clone, Copy)]
struct VertexInfo {
    driver: usize,
    radial: Vector3<f64>,
}

fn orthonormal_basis(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if axis.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let u = axis.cross(&helper).normalize();
    let w = axis.cross(&u);
    (u, w)
}

fn build_parts(params: &TestBodyParams) -> AssetParts {
    assert!(params.n_ring >= 3, "n_ring must be at least 3");
    assert!(params.rings_per_bone >= 2, "rings_per_bone must be at least 2");
    assert!(params.head_rings >= 1, "head_rings must be at least 1");

    let n_ring = params.n_ring;
    let rings = params.rings_per_bone;
    let n = params.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let joints: Vec<Vector3<f64>> = REST_JOINTS.iter().map(|j| Vector3::from(*j)).collect();
    let mut vertices: Vec<Vector3<f64>> = Vec::with_capacity(n);
    let mut info: Vec<VertexInfo> = Vec::with_capacity(n);
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut skinning = vec![0.0; n * NUM_JOINTS];
    let mut regressor = vec![0.0; NUM_JOINTS * n];
    let mut head_mask = vec![false; n];
    let mut regressed = [false; NUM_JOINTS];

    let ring_faces = |faces: &mut Vec<[u32; 3]>, a: usize, b: usize| {
        for k in 0..n_ring {
            let k1 = (k + 1) % n_ring;
            let (a0, a1, b0, b1) = ((a + k) as u32, (a + k1) as u32, (b + k) as u32, (b + k1) as u32);
            faces.push([a0, a1, b1]);
            faces.push([a0, b1, b0]);
        }
    };

    // One tube per bone, driven by the bone's proximal joint.
    for child in 1..NUM_JOINTS {
        let parent = SMPL_PARENTS[child].expect("non-root joint has a parent");
        let (start, end) = (joints[parent], joints[child]);
        let axis = (end - start).normalize();
        let (u, w) = orthonormal_basis(&axis);
        let radius = BONE_RADIUS[child];
        let grandparent = SMPL_PARENTS[parent];
        let first_ring = vertices.len();

        for r in 0..rings {
            let s = r as f64 / (rings - 1) as f64;
            let center = start + (end - start) * s;
            let ring_start = vertices.len();
            let blend_up = if grandparent.is_some() { (0.5 - s).max(0.0) } else { 0.0 };
            for k in 0..n_ring {
                let phi = 2.0 * PI * k as f64 / n_ring as f64;
                let radial = u * phi.cos() + w * phi.sin();
                let v = vertices.len();
                vertices.push(center + radial * radius);
                info.push(VertexInfo { driver: parent, radial });
                skinning[v * NUM_JOINTS + parent] = 1.0 - blend_up;
                if let Some(gp) = grandparent {
                    if blend_up > 0.0 {
                        skinning[v * NUM_JOINTS + gp] = blend_up;
                    }
                }
            }
            if r > 0 {
                ring_faces(&mut faces, ring_start - n_ring, ring_start);
            }
        }

        // Joint regressor: a ring centered exactly on the joint.
        let last_ring = first_ring + (rings - 1) * n_ring;
        let mut assign = |joint: usize, ring: usize| {
            if !regressed[joint] {
                regressed[joint] = true;
                for k in 0..n_ring {
                    regressor[joint * n + ring + k] = 1.0 / n_ring as f64;
                }
            }
        };
        assign(parent, first_ring);
        if !SMPL_PARENTS.contains(&Some(child)) {
            assign(child, last_ring);
        }
    }

    // Head sphere, fully skinned to the head joint.
    let center = joints[HEAD] + Vector3::from(HEAD_CENTER_OFFSET);
    let head_start = vertices.len();
    for i in 0..params.head_rings {
        let lat = PI * (i + 1) as f64 / (params.head_rings + 1) as f64;
        let ring_start = vertices.len();
        for k in 0..n_ring {
            let lon = 2.0 * PI * k as f64 / n_ring as f64;
            let radial = Vector3::new(lat.sin() * lon.cos(), lat.cos(), lat.sin() * lon.sin());
            let v = vertices.len();
            vertices.push(center + radial * HEAD_RADIUS);
            info.push(VertexInfo { driver: HEAD, radial });
            skinning[v * NUM_JOINTS + HEAD] = 1.0;
            head_mask[v] = true;
        }
        if i > 0 {
            ring_faces(&mut faces, ring_start - n_ring, ring_start);
        }
    }
    debug_assert_eq!(vertices.len(), n);
    debug_assert!(head_start < n);
    debug_assert!(regressed.iter().all(|r| *r));

    for v in vertices.iter_mut() {
        for axis in 0..3 {
            v[axis] += rng.random_range(-JITTER..JITTER);
        }
    }

    let shape_blendshapes = shape_basis(&vertices, &info, &mut rng);
    let pose_blendshapes = params.pose_blendshapes.then(|| {
        (0..n * 3 * NUM_POSE_FEATURES).map(|_| rng.random_range(-2e-3..2e-3)).collect()
    });

    AssetParts {
        template_vertices: vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
        faces,
        shape_blendshapes,
        joint_regressor: regressor,
        skinning_weights: skinning,
        kinematic_parents: SMPL_PARENTS.to_vec(),
        pose_blendshapes,
        head_vertex_mask: head_mask,
    }
}

/// Ten displacement fields: stature, girth, leg length, arm span and six
/// seeded low-amplitude fields.
fn shape_basis(vertices: &[Vector3<f64>], info: &[VertexInfo], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = vertices.len();
    let mut dirs = vec![0.0; n * 3 * NUM_SHAPE_PARAMS];
    let mut set = |v: usize, k: usize, d: Vector3<f64>| {
        for axis in 0..3 {
            dirs[(v * 3 + axis) * NUM_SHAPE_PARAMS + k] = d[axis];
        }
    };
    for (v, (pos, vi)) in vertices.iter().zip(info).enumerate() {
        set(v, 0, pos * 0.06);
        set(v, 1, vi.radial * 0.012);
        let leg = if LEG_JOINTS.contains(&vi.driver) { Vector3::new(0.0, 0.05 * pos.y.min(0.0), 0.0) } else { Vector3::zeros() };
        set(v, 2, leg);
        let arm = if ARM_JOINTS.contains(&vi.driver) { Vector3::new(0.04 * pos.x, 0.0, 0.0) } else { Vector3::zeros() };
        set(v, 3, arm);
    }
    for k in 4..NUM_SHAPE_PARAMS {
        let amp = 0.004 / (k - 3) as f64;
        for v in 0..n {
            let d = Vector3::new(
                rng.random_range(-amp..amp),
                rng.random_range(-amp..amp),
                rng.random_range(-amp..amp),
            );
            set(v, k, d);
        }
    }
    dirs
}
