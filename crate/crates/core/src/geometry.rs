//! Bounds, camera frames, frustum tests, projection, and pairwise spatial relations.
//!
//! Conventions: Y-up right-handed scene frame, intrinsic XYZ Euler rotation
//! (rotation matrix `Rx * Ry * Rz`), image origin at the top-left with `u`
//! to the right and `v` downward.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{Aabb, Camera, Scene, SceneError, SceneObject, Vec3};

/// Separation a relation needs before it is emitted, in scene units.
pub const RELATION_MARGIN: f64 = 0.15;

/// Side length of the square renders.
pub const RENDER_SIZE: f64 = 512.0;

/// Extent below which normalization is clamped.
pub const MIN_EXTENT: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("unprojectable: point at or behind the camera plane (depth {0})")]
    Unprojectable(f64),
}

/// Row-major 3x3 rotation for intrinsic XYZ Euler angles.
pub fn rotation_matrix(euler: Vec3) -> [[f64; 3]; 3] {
    let (sa, ca) = euler.x.sin_cos();
    let (sb, cb) = euler.y.sin_cos();
    let (sc, cc) = euler.z.sin_cos();
    // Rx(a) * Ry(b) * Rz(c)
    [
        [cb * cc, -cb * sc, sb],
        [ca * sc + sa * sb * cc, ca * cc - sa * sb * sc, -sa * cb],
        [sa * sc - ca * sb * cc, sa * cc + ca * sb * sc, ca * cb],
    ]
}

fn apply(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// World-space bounds of an object: local primitive box, scaled, rotated, translated.
pub fn object_aabb(obj: &SceneObject) -> Aabb {
    let half = obj.class_name.local_half_extents().mul_elem(obj.scale);
    let local = Aabb {
        min: -half,
        max: half,
    };
    if obj.rotation == Vec3::ZERO {
        return Aabb {
            min: local.min + obj.position,
            max: local.max + obj.position,
        };
    }
    let r = rotation_matrix(obj.rotation);
    Aabb::from_points(local.corners().iter().map(|&c| apply(&r, c) + obj.position))
        .expect("eight corners")
}

/// Diagonal of the box spanning all object centers, floored at [`MIN_EXTENT`].
pub fn scene_extent(scene: &Scene) -> Result<f64, SceneError> {
    let bounds = Aabb::from_points(scene.centers()).ok_or(SceneError::EmptyScene)?;
    Ok(bounds.diagonal().max(MIN_EXTENT))
}

/// Orthonormal camera basis. `right` and `up` span the image plane and
/// `forward` points from the camera toward its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFrame {
    pub origin: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
    tan_half_fov: f64,
    aspect: f64,
}

impl CameraFrame {
    pub fn new(camera: &Camera) -> Self {
        let forward = (camera.target - camera.position).normalized();
        let mut right = forward.cross(Vec3::Y);
        if right.length() < 1e-12 {
            // looking straight up or down
            right = forward.cross(Vec3::new(0.0, 0.0, -1.0));
        }
        let right = right.normalized();
        let up = right.cross(forward);
        Self {
            origin: camera.position,
            right,
            up,
            forward,
            tan_half_fov: (camera.fov.to_radians() * 0.5).tan(),
            aspect: camera.aspect,
        }
    }

    /// (x right, y up, depth along the view direction).
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    pub fn depth(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.forward)
    }

    /// Normalized device coordinates in [-1, 1] for points inside the frustum.
    pub fn ndc(&self, p: Vec3) -> Option<(f64, f64)> {
        let c = self.to_camera(p);
        if c.z <= 0.0 {
            return None;
        }
        let half_h = c.z * self.tan_half_fov;
        let half_w = half_h * self.aspect;
        Some((c.x / half_w, c.y / half_h))
    }

    pub fn contains(&self, p: Vec3) -> bool {
        match self.ndc(p) {
            Some((x, y)) => x.abs() <= 1.0 && y.abs() <= 1.0,
            None => false,
        }
    }

    /// Pixel coordinates on a `size`-pixel-tall image (width = size * aspect).
    pub fn project(&self, p: Vec3, size: f64) -> Result<(f64, f64), ProjectionError> {
        let c = self.to_camera(p);
        if c.z <= 0.0 {
            return Err(ProjectionError::Unprojectable(c.z));
        }
        let half_h = c.z * self.tan_half_fov;
        let half_w = half_h * self.aspect;
        let width = size * self.aspect;
        let u = (c.x / half_w + 1.0) * 0.5 * width;
        let v = (1.0 - c.y / half_h) * 0.5 * size;
        Ok((u, v))
    }

    /// Screen rectangle `[u_min, v_min, u_max, v_max]` of a box's projected
    /// corners, or `None` when any corner is at or behind the camera plane.
    pub fn project_box(&self, b: &Aabb, size: f64) -> Option<[f64; 4]> {
        let mut rect = [
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ];
        for c in b.corners() {
            let (u, v) = self.project(c, size).ok()?;
            rect[0] = rect[0].min(u);
            rect[1] = rect[1].min(v);
            rect[2] = rect[2].max(u);
            rect[3] = rect[3].max(v);
        }
        Some(rect)
    }
}

pub fn in_frustum(camera: &Camera, point: Vec3) -> bool {
    CameraFrame::new(camera).contains(point)
}

pub fn project_to_image(
    camera: &Camera,
    point: Vec3,
    image_size: f64,
) -> Result<(f64, f64), ProjectionError> {
    CameraFrame::new(camera).project(point, image_size)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    LeftOf,
    RightOf,
    Above,
    Below,
    InFrontOf,
    Behind,
    CloserThan,
    FartherThan,
}

impl Relation {
    pub fn label(self) -> &'static str {
        match self {
            Relation::LeftOf => "left-of",
            Relation::RightOf => "right-of",
            Relation::Above => "above",
            Relation::Below => "below",
            Relation::InFrontOf => "in-front-of",
            Relation::Behind => "behind",
            Relation::CloserThan => "closer-than",
            Relation::FartherThan => "farther-than",
        }
    }

    /// The relation that holds with subject and object swapped.
    pub fn inverse(self) -> Relation {
        match self {
            Relation::LeftOf => Relation::RightOf,
            Relation::RightOf => Relation::LeftOf,
            Relation::Above => Relation::Below,
            Relation::Below => Relation::Above,
            Relation::InFrontOf => Relation::Behind,
            Relation::Behind => Relation::InFrontOf,
            Relation::CloserThan => Relation::FartherThan,
            Relation::FartherThan => Relation::CloserThan,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Relations of `a` with respect to `b`. Horizontal and depth relations use
/// the camera frame, vertical relations use scene-frame Y.
pub fn spatial_relations(a: &SceneObject, b: &SceneObject, camera: &Camera) -> BTreeSet<Relation> {
    spatial_relations_with_margin(a, b, &CameraFrame::new(camera), RELATION_MARGIN)
}

pub fn spatial_relations_with_margin(
    a: &SceneObject,
    b: &SceneObject,
    frame: &CameraFrame,
    margin: f64,
) -> BTreeSet<Relation> {
    let mut out = BTreeSet::new();
    let ca = frame.to_camera(a.position);
    let cb = frame.to_camera(b.position);

    let dx = ca.x - cb.x;
    if dx < -margin {
        out.insert(Relation::LeftOf);
    } else if dx > margin {
        out.insert(Relation::RightOf);
    }

    let dy = a.position.y - b.position.y;
    if dy > margin {
        out.insert(Relation::Above);
    } else if dy < -margin {
        out.insert(Relation::Below);
    }

    let dz = ca.z - cb.z;
    if dz < -margin {
        out.insert(Relation::InFrontOf);
        out.insert(Relation::CloserThan);
    } else if dz > margin {
        out.insert(Relation::Behind);
        out.insert(Relation::FartherThan);
    }
    out
}

/// Object indices sorted nearest-first by camera-space depth; ties keep index order.
pub fn depth_order(scene: &Scene, camera: &Camera) -> Vec<usize> {
    let frame = CameraFrame::new(camera);
    let depths: Vec<f64> = scene
        .objects
        .iter()
        .map(|o| frame.depth(o.position))
        .collect();
    let mut idx: Vec<usize> = (0..depths.len()).collect();
    idx.sort_by(|&i, &j| depths[i].total_cmp(&depths[j]));
    idx
}

/// Area of the intersection of two screen rectangles.
pub fn rect_overlap_area(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let w = a[2].min(b[2]) - a[0].max(b[0]);
    let h = a[3].min(b[3]) - a[1].max(b[1]);
    if w <= 0.0 || h <= 0.0 {
        0.0
    } else {
        w * h
    }
}

pub fn rect_area(a: &[f64; 4]) -> f64 {
    (a[2] - a[0]).max(0.0) * (a[3] - a[1]).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::PrimitiveClass;

    fn cube_at(p: Vec3) -> SceneObject {
        SceneObject::new(PrimitiveClass::Cube, p)
    }

    #[test]
    fn aabb_identity_and_scale() {
        let b = object_aabb(&cube_at(Vec3::ZERO));
        assert_eq!(b.min, Vec3::splat(-0.5));
        assert_eq!(b.max, Vec3::splat(0.5));

        let b =
            object_aabb(&cube_at(Vec3::new(0.0, 1.0, 0.0)).with_scale(Vec3::new(1.0, 2.0, 1.0)));
        assert_eq!(b.min, Vec3::new(-0.5, 0.0, -0.5));
        assert_eq!(b.max, Vec3::new(0.5, 2.0, 0.5));
    }

    #[test]
    fn aabb_yaw_45_degrees() {
        let o = cube_at(Vec3::ZERO).with_rotation(Vec3::new(0.0, std::f64::consts::FRAC_PI_4, 0.0));
        let b = object_aabb(&o);
        let h = std::f64::consts::SQRT_2 / 2.0;
        assert!((b.max.x - h).abs() < 1e-12);
        assert!((b.max.z - h).abs() < 1e-12);
        assert!((b.max.y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn torus_bounds_are_flat() {
        let b = object_aabb(&SceneObject::new(PrimitiveClass::Torus, Vec3::ZERO));
        assert_eq!(b.max, Vec3::new(0.7, 0.2, 0.7));
    }

    #[test]
    fn extent_cases() {
        let one = Scene::new("a", vec![cube_at(Vec3::new(4.0, 4.0, 4.0))]);
        assert_eq!(scene_extent(&one).unwrap(), 1.0);
        let two = Scene::new(
            "b",
            vec![cube_at(Vec3::ZERO), cube_at(Vec3::new(3.0, 0.0, 4.0))],
        );
        assert_eq!(scene_extent(&two).unwrap(), 5.0);
        let three = Scene::new(
            "c",
            vec![
                cube_at(Vec3::new(-3.0, 0.0, 3.0)),
                cube_at(Vec3::new(3.0, 2.0, -3.0)),
                cube_at(Vec3::new(0.0, 1.0, 0.0)),
            ],
        );
        assert!((scene_extent(&three).unwrap() - 76f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            scene_extent(&Scene::new("d", vec![])),
            Err(SceneError::EmptyScene)
        );
    }

    #[test]
    fn frustum_half_width_at_depth_ten() {
        let cam = Camera::new(Vec3::ZERO, Vec3::new(0.0, 0.0, -10.0), 60.0);
        // tan(30 deg) * 10 = 5.7735
        assert!(in_frustum(&cam, Vec3::new(5.7, 0.0, -10.0)));
        assert!(!in_frustum(&cam, Vec3::new(5.9, 0.0, -10.0)));
        assert!(in_frustum(&cam, Vec3::new(0.0, 5.7, -10.0)));
        assert!(!in_frustum(&cam, Vec3::new(0.0, -5.9, -10.0)));
        assert!(in_frustum(&cam, cam.target));
        assert!(!in_frustum(&cam, Vec3::new(0.0, 0.0, 10.0)));
    }

    #[test]
    fn projection_center_and_top_edge() {
        let cam = Camera::new(Vec3::new(0.0, 2.0, 8.0), Vec3::ZERO, 60.0);
        let (u, v) = project_to_image(&cam, Vec3::ZERO, 512.0).unwrap();
        assert!((u - 256.0).abs() < 1e-9 && (v - 256.0).abs() < 1e-9);

        let axis_cam = Camera::new(Vec3::ZERO, Vec3::new(0.0, 0.0, -1.0), 60.0);
        let top = Vec3::new(0.0, 10.0 * (30f64).to_radians().tan(), -10.0);
        let (_, v) = project_to_image(&axis_cam, top, 512.0).unwrap();
        assert!(v.abs() < 1e-9);

        assert!(project_to_image(&axis_cam, Vec3::new(0.0, 0.0, 1.0), 512.0).is_err());
        assert!(project_to_image(&axis_cam, Vec3::ZERO, 512.0).is_err());
    }

    #[test]
    fn relations_examples() {
        let cam = Camera::new(Vec3::new(0.0, 2.0, 8.0), Vec3::ZERO, 60.0);
        let hi = cube_at(Vec3::new(0.0, 2.0, 0.0));
        let lo = cube_at(Vec3::new(0.0, 0.5, 0.0));
        assert!(spatial_relations(&hi, &lo, &cam).contains(&Relation::Above));
        assert!(spatial_relations(&hi, &hi, &cam).is_empty());

        let a = cube_at(Vec3::new(-1.0, 0.5, 0.0));
        let b = cube_at(Vec3::new(1.0, 0.5, 0.0));
        let r = spatial_relations(&a, &b, &cam);
        assert!(r.contains(&Relation::LeftOf));
        assert!(!r.contains(&Relation::CloserThan) && !r.contains(&Relation::FartherThan));
    }

    #[test]
    fn depth_order_basic() {
        let cam = Camera::new(Vec3::new(0.0, 0.0, 10.0), Vec3::ZERO, 60.0);
        let s = Scene::new(
            "x",
            vec![cube_at(Vec3::new(0.0, 0.0, -5.0)), cube_at(Vec3::ZERO)],
        );
        assert_eq!(depth_order(&s, &cam), vec![1, 0]);
        let single = Scene::new("y", vec![cube_at(Vec3::ZERO)]);
        assert_eq!(depth_order(&single, &cam), vec![0]);
        let tied = Scene::new("z", vec![cube_at(Vec3::ZERO), cube_at(Vec3::ZERO)]);
        assert_eq!(depth_order(&tied, &cam), vec![0, 1]);
    }

    #[test]
    fn rotation_matrix_is_orthonormal() {
        let m = rotation_matrix(Vec3::new(0.3, -1.1, 2.0));
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }
}
