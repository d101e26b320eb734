//! Marker windows, vertex binding, marker distance, color and size.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::camera::{project_vertex, CameraIntrinsics};
use super::{GuidanceError, MarkerSite, SiteMap};
use crate::body_model::BodyMesh;

/// Default half-width of a marker window, in pixels.
pub const DEFAULT_HALF_WIDTH: f64 = 20.0;

/// Axis-aligned search window in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerWindow {
    pub site: MarkerSite,
    pub x_s: f64,
    pub y_s: f64,
    pub x_e: f64,
    pub y_e: f64,
}

impl MarkerWindow {
    /// Strict containment; points on the border are outside.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.x_s < p[0] && p[0] < self.x_e && self.y_s < p[1] && p[1] < self.y_e
    }
}

/// Square windows of half-width `half_widths[site]` around each projected joint.
pub fn compute_marker_windows(joints2d: &SiteMap<[f64; 2]>, half_widths: &SiteMap<f64>) -> SiteMap<MarkerWindow> {
    joints2d.map(|site, &[jx, jy]| {
        let w = half_widths[site];
        debug_assert!(w >= 0.0, "negative half-width for {site}");
        MarkerWindow { site, x_s: jx - w, y_s: jy - w, x_e: jx + w, y_e: jy + w }
    })
}

/// Indices (ascending) of vertices whose projection lies strictly inside `window`.
/// Vertices at or behind the camera plane are never selected.
pub fn select_marker_vertices(mesh: &BodyMesh, window: &MarkerWindow, cam: &CameraIntrinsics) -> Vec<usize> {
    mesh.vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| project_vertex(v, cam).is_ok_and(|p| window.contains(p)))
        .map(|(k, _)| k)
        .collect()
}

/// Mesh vertices representing one marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerBinding {
    pub site: MarkerSite,
    pub vertex_indices: Vec<usize>,
}

impl MarkerBinding {
    pub fn centroid(&self, mesh: &BodyMesh) -> Result<Vector3<f64>, GuidanceError> {
        if self.vertex_indices.is_empty() {
            return Err(GuidanceError::EmptyBinding { site: self.site });
        }
        let mut sum = Vector3::zeros();
        for &k in &self.vertex_indices {
            let v = mesh
                .vertices
                .get(k)
                .ok_or(GuidanceError::VertexIndex { site: self.site, index: k, vertex_count: mesh.vertices.len() })?;
            sum += v;
        }
        Ok(sum / self.vertex_indices.len() as f64)
    }
}

/// Projects each site's joint, builds its window and collects the vertices inside.
pub fn bind_markers(
    mesh: &BodyMesh,
    site_joints: &SiteMap<usize>,
    cam: &CameraIntrinsics,
    half_widths: &SiteMap<f64>,
) -> Result<SiteMap<MarkerBinding>, GuidanceError> {
    if let Some((site, w)) = half_widths.iter().find(|(_, w)| !(**w >= 0.0)) {
        return Err(GuidanceError::InvalidHalfWidth { site, value: *w });
    }
    let joints2d = SiteMap::try_from_fn(|site| {
        let j = site_joints[site];
        let joint = mesh.joints.get(j).ok_or(GuidanceError::JointIndex { site, joint: j })?;
        project_vertex(joint, cam)
    })?;
    let windows = compute_marker_windows(&joints2d, half_widths);
    SiteMap::try_from_fn(|site| {
        let vertex_indices = select_marker_vertices(mesh, &windows[site], cam);
        if vertex_indices.is_empty() {
            Err(GuidanceError::EmptyBinding { site })
        } else {
            Ok(MarkerBinding { site, vertex_indices })
        }
    })
}

/// Distance between the binding's centroid on `current` and on `target`.
pub fn marker_distance(binding: &MarkerBinding, current: &BodyMesh, target: &BodyMesh) -> Result<f64, GuidanceError> {
    Ok((binding.centroid(current)? - binding.centroid(target)?).norm())
}

/// Marker colors, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerColor {
    GreenYellow,
    Yellow,
    Orange,
    Red,
}

impl MarkerColor {
    pub fn name(self) -> &'static str {
        match self {
            MarkerColor::GreenYellow => "green_yellow",
            MarkerColor::Yellow => "yellow",
            MarkerColor::Orange => "orange",
            MarkerColor::Red => "red",
        }
    }
}

/// Lower bounds (inclusive, meters) of the yellow, orange and red bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorThresholds {
    pub yellow: f64,
    pub orange: f64,
    pub red: f64,
}

impl Default for ColorThresholds {
    fn default() -> Self {
        Self { yellow: 0.1, orange: 0.25, red: 0.5 }
    }
}

impl ColorThresholds {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        let ok = self.yellow.is_finite()
            && self.red.is_finite()
            && 0.0 < self.yellow
            && self.yellow < self.orange
            && self.orange < self.red;
        if ok {
            Ok(())
        } else {
            Err(GuidanceError::InvalidThresholds(*self))
        }
    }

    pub fn color_for(&self, d_e: f64) -> Result<MarkerColor, GuidanceError> {
        if !d_e.is_finite() || d_e < 0.0 {
            return Err(GuidanceError::InvalidDistance(d_e));
        }
        Ok(if d_e >= self.red {
            MarkerColor::Red
        } else if d_e >= self.orange {
            MarkerColor::Orange
        } else if d_e >= self.yellow {
            MarkerColor::Yellow
        } else {
            MarkerColor::GreenYellow
        })
    }
}

/// Color band of `d_e` under the default thresholds.
pub fn color_for_distance(d_e: f64) -> Result<MarkerColor, GuidanceError> {
    ColorThresholds::default().color_for(d_e)
}

/// Marker size parameters: radius grows linearly from `r_min` at zero
/// distance to `r_max` at `d_ref` and stays there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RadiusParams {
    pub r_min: f64,
    pub r_max: f64,
    pub d_ref: f64,
}

impl Default for RadiusParams {
    fn default() -> Self {
        Self { r_min: 4.0, r_max: 16.0, d_ref: 0.5 }
    }
}

impl RadiusParams {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        let ok = self.r_min.is_finite()
            && self.r_max.is_finite()
            && self.d_ref.is_finite()
            && 0.0 <= self.r_min
            && self.r_min <= self.r_max
            && self.d_ref > 0.0;
        if ok {
            Ok(())
        } else {
            Err(GuidanceError::InvalidRadiusParams(*self))
        }
    }
}

pub fn marker_radius(d_e: f64, params: &RadiusParams) -> Result<f64, GuidanceError> {
    params.validate()?;
    if !d_e.is_finite() || d_e < 0.0 {
        return Err(GuidanceError::InvalidDistance(d_e));
    }
    let RadiusParams { r_min, r_max, d_ref } = *params;
    Ok((r_min + (r_max - r_min) * d_e / d_ref).clamp(r_min, r_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{generate_test_assets, pose_mesh, BodyPose, BodyShape};

    fn toy_mesh() -> BodyMesh {
        // Projections with default intrinsics:
        // 0 -> (332.5, 325.0), 1 -> (372.5, 305.0), 2 -> (82.5, 450.0), 3 -> (357.5, 350.0)
        BodyMesh {
            vertices: vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(0.2, -0.1, 0.5),
                Vector3::new(-1.0, 0.5, 0.0),
                Vector3::new(0.1, 0.1, 0.0),
            ],
            joints: vec![Vector3::zeros()],
        }
    }

    fn window(x_s: f64, y_s: f64, x_e: f64, y_e: f64) -> MarkerWindow {
        MarkerWindow { site: MarkerSite::LeftHand, x_s, y_s, x_e, y_e }
    }

    #[test]
    fn window_is_a_square_around_the_joint() {
        let j = SiteMap::splat([100.0, 200.0]);
        let w = compute_marker_windows(&j, &SiteMap::splat(10.0));
        assert_eq!(w[MarkerSite::RightKnee], MarkerWindow { site: MarkerSite::RightKnee, x_s: 90.0, y_s: 190.0, x_e: 110.0, y_e: 210.0 });
        let w0 = compute_marker_windows(&j, &SiteMap::splat(0.0));
        assert!(w0.values().all(|w| w.x_s == w.x_e && w.y_s == w.y_e));
        assert_eq!(w.iter().map(|(s, w)| (s, w.site)).filter(|(a, b)| a == b).count(), 10);
    }

    #[test]
    fn toy_mesh_selection() {
        let cam = CameraIntrinsics::default();
        let m = toy_mesh();
        assert_eq!(select_marker_vertices(&m, &window(330.0, 300.0, 380.0, 330.0), &cam), vec![0, 1]);
        assert_eq!(select_marker_vertices(&m, &window(330.0, 300.0, 380.0, 360.0), &cam), vec![0, 1, 3]);
        // Border points are excluded.
        assert_eq!(select_marker_vertices(&m, &window(332.5, 300.0, 380.0, 360.0), &cam), vec![1, 3]);
        assert_eq!(select_marker_vertices(&m, &window(0.0, 0.0, 1000.0, 1000.0), &cam), vec![0, 1, 2, 3]);
        assert!(select_marker_vertices(&m, &window(332.5, 0.0, 332.5, 1000.0), &cam).is_empty());
    }

    #[test]
    fn zero_pose_binding_covers_all_sites() {
        let a = generate_test_assets(8, 1);
        let mesh = pose_mesh(&a, &BodyShape::ZERO, &BodyPose::ZERO).unwrap();
        let cam = CameraIntrinsics::default();
        let b = bind_markers(&mesh, &super::super::default_site_joints(), &cam, &SiteMap::splat(DEFAULT_HALF_WIDTH)).unwrap();
        for (site, binding) in b.iter() {
            assert_eq!(binding.site, site);
            assert!(!binding.vertex_indices.is_empty());
        }
        let again = bind_markers(&mesh, &super::super::default_site_joints(), &cam, &SiteMap::splat(DEFAULT_HALF_WIDTH)).unwrap();
        assert_eq!(b, again);
    }

    #[test]
    fn zero_half_width_fails_with_site_name() {
        let a = generate_test_assets(8, 1);
        let mesh = pose_mesh(&a, &BodyShape::ZERO, &BodyPose::ZERO).unwrap();
        let err = bind_markers(&mesh, &super::super::default_site_joints(), &CameraIntrinsics::default(), &SiteMap::splat(0.0))
            .unwrap_err();
        assert!(matches!(err, GuidanceError::EmptyBinding { site: MarkerSite::LeftHand }));
        assert!(err.to_string().contains("l_hand"));
    }

    #[test]
    fn distance_of_translated_mesh() {
        let m = toy_mesh();
        let shifted = m.translated(&Vector3::new(0.3, 0.0, 0.0));
        let b = MarkerBinding { site: MarkerSite::LeftElbow, vertex_indices: vec![0, 2, 3] };
        assert_eq!(marker_distance(&b, &m, &m).unwrap(), 0.0);
        assert!((marker_distance(&b, &shifted, &m).unwrap() - 0.3).abs() < 1e-12);
        let empty = MarkerBinding { site: MarkerSite::LeftElbow, vertex_indices: vec![] };
        assert!(matches!(marker_distance(&empty, &m, &m), Err(GuidanceError::EmptyBinding { .. })));
    }

    #[test]
    fn color_bands() {
        assert_eq!(color_for_distance(0.0).unwrap(), MarkerColor::GreenYellow);
        assert_eq!(color_for_distance(0.05).unwrap(), MarkerColor::GreenYellow);
        assert_eq!(color_for_distance(0.1).unwrap(), MarkerColor::Yellow);
        assert_eq!(color_for_distance(0.25).unwrap(), MarkerColor::Orange);
        assert_eq!(color_for_distance(0.3).unwrap(), MarkerColor::Orange);
        assert_eq!(color_for_distance(0.5).unwrap(), MarkerColor::Red);
        assert_eq!(color_for_distance(0.7).unwrap(), MarkerColor::Red);
        assert!(color_for_distance(-0.01).is_err());
        assert!(color_for_distance(f64::NAN).is_err());
        assert!(color_for_distance(f64::INFINITY).is_err());
    }

    #[test]
    fn threshold_validation() {
        assert!(ColorThresholds::default().validate().is_ok());
        assert!(ColorThresholds { yellow: 0.3, orange: 0.25, red: 0.5 }.validate().is_err());
        assert!(ColorThresholds { yellow: 0.1, orange: 0.5, red: 0.5 }.validate().is_err());
    }

    #[test]
    fn radius_interpolates_and_clamps() {
        let p = RadiusParams { r_min: 4.0, r_max: 16.0, d_ref: 0.5 };
        assert_eq!(marker_radius(0.0, &p).unwrap(), 4.0);
        assert_eq!(marker_radius(0.25, &p).unwrap(), 10.0);
        assert_eq!(marker_radius(0.5, &p).unwrap(), 16.0);
        assert_eq!(marker_radius(3.0, &p).unwrap(), 16.0);
        assert!(marker_radius(-1.0, &p).is_err());
        assert!(marker_radius(0.1, &RadiusParams { r_min: 5.0, r_max: 4.0, d_ref: 1.0 }).is_err());
        assert!(marker_radius(0.1, &RadiusParams { d_ref: 0.0, ..p }).is_err());
    }
}
