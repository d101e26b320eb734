use nalgebra::Vector3;

use super::{AssetError, NUM_JOINTS, NUM_POSE_FEATURES, NUM_SHAPE_PARAMS};

/// Row-sum tolerance for skinning weights and the joint regressor.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// Raw asset arrays, before validation.
///
/// Array layouts follow the usual SMPL conventions:
/// `shape_blendshapes` is `N x 3 x 10`, `joint_regressor` is `J x N`,
/// `skinning_weights` is `N x J` and `pose_blendshapes` is `N x 3 x 9(J-1)`,
/// all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetParts {
    pub template_vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
    pub shape_blendshapes: Vec<f64>,
    pub joint_regressor: Vec<f64>,
    pub skinning_weights: Vec<f64>,
    /// Parent joint of each joint; `None` marks the root.
    pub kinematic_parents: Vec<Option<usize>>,
    pub pose_blendshapes: Option<Vec<f64>>,
    pub head_vertex_mask: Vec<bool>,
}

/// Sparse row: (column, weight) pairs with nonzero weight.
type SparseRows = Vec<Vec<(usize, f64)>>;

/// Validated, immutable body model.
#[derive(Debug, Clone)]
pub struct BodyModelAssets {
    parts: AssetParts,
    template: Vec<Vector3<f64>>,
    skin_influences: SparseRows,
    regressor_rows: SparseRows,
    n_rmse: usize,
}

impl BodyModelAssets {
    pub fn new(parts: AssetParts) -> Result<Self, AssetError> {
        validate(&parts)?;
        let n = parts.template_vertices.len();
        let template = parts.template_vertices.iter().map(|v| Vector3::from(*v)).collect();
        let skin_influences = sparse_rows(&parts.skinning_weights, n, NUM_JOINTS);
        let regressor_rows = sparse_rows(&parts.joint_regressor, NUM_JOINTS, n);
        let n_rmse = parts.head_vertex_mask.iter().filter(|h| !**h).count();
        Ok(Self { parts, template, skin_influences, regressor_rows, n_rmse })
    }

    pub fn vertex_count(&self) -> usize {
        self.template.len()
    }

    pub fn joint_count(&self) -> usize {
        self.parts.kinematic_parents.len()
    }

    pub fn face_count(&self) -> usize {
        self.parts.faces.len()
    }

    pub fn template_vertices(&self) -> &[Vector3<f64>] {
        &self.template
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.parts.faces
    }

    pub fn shape_blendshapes(&self) -> &[f64] {
        &self.parts.shape_blendshapes
    }

    pub fn joint_regressor(&self) -> &[f64] {
        &self.parts.joint_regressor
    }

    pub fn skinning_weights(&self) -> &[f64] {
        &self.parts.skinning_weights
    }

    pub fn kinematic_parents(&self) -> &[Option<usize>] {
        &self.parts.kinematic_parents
    }

    pub fn pose_blendshapes(&self) -> Option<&[f64]> {
        self.parts.pose_blendshapes.as_deref()
    }

    pub fn head_vertex_mask(&self) -> &[bool] {
        &self.parts.head_vertex_mask
    }

    /// Number of non-head vertices, the RMSE denominator.
    pub fn n_rmse(&self) -> usize {
        self.n_rmse
    }

    pub fn parts(&self) -> &AssetParts {
        &self.parts
    }

    pub fn into_parts(self) -> AssetParts {
        self.parts
    }

    pub(crate) fn skin_influences(&self, vertex: usize) -> &[(usize, f64)] {
        &self.skin_influences[vertex]
    }

    pub(crate) fn regressor_row(&self, joint: usize) -> &[(usize, f64)] {
        &self.regressor_rows[joint]
    }
}

fn sparse_rows(dense: &[f64], rows: usize, cols: usize) -> SparseRows {
    (0..rows)
        .map(|r| {
            dense[r * cols..(r + 1) * cols]
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(c, w)| (c, *w))
                .collect()
        })
        .collect()
}

fn expect_len(what: &'static str, actual: usize, expected: usize) -> Result<(), AssetError> {
    if actual == expected {
        Ok(())
    } else {
        Err(AssetError::DimensionMismatch { what, expected, actual })
    }
}

fn validate(p: &AssetParts) -> Result<(), AssetError> {
    let n = p.template_vertices.len();
    let j = p.kinematic_parents.len();
    if n == 0 {
        return Err(AssetError::DimensionMismatch { what: "vertex count", expected: 1, actual: 0 });
    }
    expect_len("joint count", j, NUM_JOINTS)?;
    expect_len("shape_blendshapes", p.shape_blendshapes.len(), n * 3 * NUM_SHAPE_PARAMS)?;
    expect_len("joint_regressor", p.joint_regressor.len(), j * n)?;
    expect_len("skinning_weights", p.skinning_weights.len(), n * j)?;
    expect_len("head_vertex_mask", p.head_vertex_mask.len(), n)?;
    if let Some(pb) = &p.pose_blendshapes {
        expect_len("pose_blendshapes", pb.len(), n * 3 * NUM_POSE_FEATURES)?;
    }

    let finite = |what: &str, xs: &[f64]| -> Result<(), AssetError> {
        match xs.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(AssetError::NonFinite(format!("{what}[{i}]"))),
            None => Ok(()),
        }
    };
    finite("template_vertices", p.template_vertices.as_flattened())?;
    finite("shape_blendshapes", &p.shape_blendshapes)?;
    finite("joint_regressor", &p.joint_regressor)?;
    finite("skinning_weights", &p.skinning_weights)?;
    if let Some(pb) = &p.pose_blendshapes {
        finite("pose_blendshapes", pb)?;
    }

    for (fi, face) in p.faces.iter().enumerate() {
        if let Some(&bad) = face.iter().find(|&&ix| ix as usize >= n) {
            return Err(AssetError::FaceIndex { face: fi, index: bad, vertex_count: n });
        }
    }

    check_rows("skinning_weights", &p.skinning_weights, n, j)?;
    check_rows("joint_regressor", &p.joint_regressor, j, n)?;
    check_tree(&p.kinematic_parents)?;

    if p.head_vertex_mask.iter().all(|h| *h) {
        return Err(AssetError::EmptyBodyMask);
    }
    Ok(())
}

fn check_rows(what: &'static str, m: &[f64], rows: usize, cols: usize) -> Result<(), AssetError> {
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        if let Some(c) = row.iter().position(|w| *w < 0.0) {
            return Err(AssetError::NegativeWeight { what, row: r, col: c });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(AssetError::WeightsNotNormalized { what, row: r, sum });
        }
    }
    Ok(())
}

fn check_tree(parents: &[Option<usize>]) -> Result<(), AssetError> {
    let j = parents.len();
    if parents[0].is_some() {
        return Err(AssetError::BadKinematicTree("joint 0 must be the root".into()));
    }
    for (i, p) in parents.iter().enumerate().skip(1) {
        match p {
            None => return Err(AssetError::BadKinematicTree(format!("joint {i} is a second root"))),
            Some(p) if *p >= j => {
                return Err(AssetError::BadKinematicTree(format!("joint {i} has parent {p} out of range")))
            }
            Some(_) => {}
        }
    }
    // Every joint must reach the root within j steps.
    for start in 0..j {
        let mut cur = start;
        let mut steps = 0;
        while let Some(p) = parents[cur] {
            cur = p;
            steps += 1;
            if steps > j {
                return Err(AssetError::BadKinematicTree(format!("cycle through joint {start}")));
            }
        }
    }
    Ok(())
}

/// Joint indices ordered so that every parent precedes its children.
pub(crate) fn topological_order(parents: &[Option<usize>]) -> Vec<usize> {
    let j = parents.len();
    let mut depth = vec![0usize; j];
    for (i, d) in depth.iter_mut().enumerate() {
        let mut cur = i;
        while let Some(p) = parents[cur] {
            *d += 1;
            cur = p;
        }
    }
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by_key(|&i| (depth[i], i));
    order
}
