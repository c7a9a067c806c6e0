//! Canonical scene graph: a flat list of primitive objects plus an optional camera.
//!
//! Every parser produces a [`Scene`] and every metric consumes one. On disk a
//! scene is stored as canonical JSON (see [`crate::codecs::canonical_json`]).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("empty scene has no extent")]
    EmptyScene,
    #[error("scene_id must be non-empty")]
    EmptySceneId,
    #[error("class name must be non-empty")]
    EmptyClassName,
    #[error("object {index}: {field} is not finite")]
    NonFinite { index: usize, field: &'static str },
    #[error("object {index}: scale components must be > 0")]
    NonPositiveScale { index: usize },
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("tier {0} outside 1..=5")]
    InvalidTier(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };
    pub const ONE: Vec3 = Vec3 {
        x: 1.0,
        y: 1.0,
        z: 1.0,
    };
    pub const Y: Vec3 = Vec3 {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self { x: v, y: v, z: v }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).length()
    }

    /// Unit vector in the same direction; the zero vector maps to itself.
    pub fn normalized(self) -> Vec3 {
        let len = self.length();
        if len == 0.0 {
            self
        } else {
            self / len
        }
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    /// Componentwise product.
    pub fn mul_elem(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(self, o: Vec3) -> f64 {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, k: f64) -> Vec3 {
        Vec3::new(self.x / k, self.y / k, self.z / k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::from_array(a)
    }
}

impl Serialize for Vec3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vec3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        Ok(Vec3::from_array(a))
    }
}

/// Object class. The six primitives have dedicated variants; anything else
/// (indoor furniture, free-form model output) is kept as a normalized string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveClass {
    Cube,
    Sphere,
    Cylinder,
    Cone,
    Torus,
    Pyramid,
    Other(String),
}

impl PrimitiveClass {
    pub const PRIMITIVES: [PrimitiveClass; 6] = [
        PrimitiveClass::Cube,
        PrimitiveClass::Sphere,
        PrimitiveClass::Cylinder,
        PrimitiveClass::Cone,
        PrimitiveClass::Torus,
        PrimitiveClass::Pyramid,
    ];

    /// Lowercases and trims; maps the six primitive names onto their variants.
    pub fn parse(name: &str) -> Result<Self, SceneError> {
        let norm = name.trim().to_lowercase();
        Ok(match norm.as_str() {
            "" => return Err(SceneError::EmptyClassName),
            "cube" => PrimitiveClass::Cube,
            "sphere" => PrimitiveClass::Sphere,
            "cylinder" => PrimitiveClass::Cylinder,
            "cone" => PrimitiveClass::Cone,
            "torus" => PrimitiveClass::Torus,
            "pyramid" => PrimitiveClass::Pyramid,
            _ => PrimitiveClass::Other(norm),
        })
    }

    pub fn as_str(&self) -> &str {
        match self {
            PrimitiveClass::Cube => "cube",
            PrimitiveClass::Sphere => "sphere",
            PrimitiveClass::Cylinder => "cylinder",
            PrimitiveClass::Cone => "cone",
            PrimitiveClass::Torus => "torus",
            PrimitiveClass::Pyramid => "pyramid",
            PrimitiveClass::Other(s) => s,
        }
    }

    pub fn is_primitive(&self) -> bool {
        !matches!(self, PrimitiveClass::Other(_))
    }

    /// Half extents of the unit primitive's local bounding box.
    ///
    /// Free-form classes are treated as unit boxes.
    pub fn local_half_extents(&self) -> Vec3 {
        match self {
            // major radius 0.5 + minor 0.2 in the XZ plane, tube thickness along Y
            PrimitiveClass::Torus => Vec3::new(0.7, 0.2, 0.7),
            _ => Vec3::splat(0.5),
        }
    }

    /// Height of the unscaled primitive along Y.
    pub fn local_height(&self) -> f64 {
        2.0 * self.local_half_extents().y
    }
}

impl fmt::Display for PrimitiveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PrimitiveClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PrimitiveClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PrimitiveClass::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub class_name: PrimitiveClass,
    pub position: Vec3,
    /// Intrinsic XYZ Euler angles in radians.
    #[serde(default)]
    pub rotation: Vec3,
    #[serde(default = "unit_scale")]
    pub scale: Vec3,
    #[serde(default = "default_material")]
    pub material: String,
}

fn unit_scale() -> Vec3 {
    Vec3::ONE
}

pub const DEFAULT_MATERIAL: &str = "gray";

fn default_material() -> String {
    DEFAULT_MATERIAL.to_string()
}

impl SceneObject {
    pub fn new(class_name: PrimitiveClass, position: Vec3) -> Self {
        Self {
            class_name,
            position,
            rotation: Vec3::ZERO,
            scale: Vec3::ONE,
            material: default_material(),
        }
    }

    pub fn with_scale(mut self, scale: Vec3) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_rotation(mut self, rotation: Vec3) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn with_material(mut self, material: impl Into<String>) -> Self {
        self.material = material.into();
        self
    }

    /// "red cube", the phrase used in questions and descriptions.
    pub fn describe(&self) -> String {
        format!("{} {}", self.material, self.class_name)
    }
}

fn default_aspect() -> f64 {
    1.0
}

fn is_unit_aspect(a: &f64) -> bool {
    *a == 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub target: Vec3,
    /// Vertical field of view in degrees.
    pub fov: f64,
    #[serde(default = "default_aspect", skip_serializing_if = "is_unit_aspect")]
    pub aspect: f64,
}

impl Camera {
    pub fn new(position: Vec3, target: Vec3, fov: f64) -> Self {
        Self {
            position,
            target,
            fov,
            aspect: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !self.position.is_finite() || !self.target.is_finite() {
            return Err(SceneError::InvalidCamera("non-finite position or target"));
        }
        if self.position == self.target {
            return Err(SceneError::InvalidCamera("position equals target"));
        }
        if !(self.fov > 0.0 && self.fov < 180.0) {
            return Err(SceneError::InvalidCamera("fov outside (0, 180)"));
        }
        if !(self.aspect > 0.0 && self.aspect.is_finite()) {
            return Err(SceneError::InvalidCamera("aspect must be positive"));
        }
        Ok(())
    }
}

impl Default for Camera {
    fn default() -> Self {
        Camera::new(Vec3::new(0.0, 5.0, 10.0), Vec3::ZERO, 60.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Self { min, max }
    }

    /// Smallest box containing all points; `None` for an empty iterator.
    pub fn from_points(points: impl IntoIterator<Item = Vec3>) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p)));
        Some(Aabb { min, max })
    }

    pub fn size(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s.x * s.y * s.z
    }

    pub fn diagonal(&self) -> f64 {
        self.size().length()
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }

    pub fn intersection_volume(&self, o: &Aabb) -> f64 {
        let lo = self.min.max(o.min);
        let hi = self.max.min(o.max);
        let d = hi - lo;
        if d.x <= 0.0 || d.y <= 0.0 || d.z <= 0.0 {
            0.0
        } else {
            d.x * d.y * d.z
        }
    }

    pub fn iou(&self, o: &Aabb) -> f64 {
        let inter = self.intersection_volume(o);
        let union = self.volume() + o.volume() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scene_id: String,
    pub objects: Vec<SceneObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<Camera>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Aabb>,
}

impl Scene {
    pub fn new(scene_id: impl Into<String>, objects: Vec<SceneObject>) -> Self {
        Self {
            scene_id: scene_id.into(),
            objects,
            camera: None,
            tier: None,
            extent: None,
        }
    }

    pub fn with_camera(mut self, camera: Camera) -> Self {
        self.camera = Some(camera);
        self
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn centers(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.objects.iter().map(|o| o.position)
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.objects.is_empty() {
            return None;
        }
        let sum = self.centers().fold(Vec3::ZERO, |acc, p| acc + p);
        Some(sum / self.objects.len() as f64)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.scene_id.trim().is_empty() {
            return Err(SceneError::EmptySceneId);
        }
        if let Some(t) = self.tier {
            if !(1..=5).contains(&t) {
                return Err(SceneError::InvalidTier(t));
            }
        }
        if let Some(cam) = &self.camera {
            cam.validate()?;
        }
        for (index, o) in self.objects.iter().enumerate() {
            if o.class_name.as_str().is_empty() {
                return Err(SceneError::EmptyClassName);
            }
            for (field, v) in [
                ("position", o.position),
                ("rotation", o.rotation),
                ("scale", o.scale),
            ] {
                if !v.is_finite() {
                    return Err(SceneError::NonFinite { index, field });
                }
            }
            if o.scale.x <= 0.0 || o.scale.y <= 0.0 || o.scale.z <= 0.0 {
                return Err(SceneError::NonPositiveScale { index });
            }
        }
        Ok(())
    }
}

/// Wraps an angle into [-2π, 2π] by removing whole turns.
pub fn normalize_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    if a.abs() <= tau {
        a
    } else {
        a % tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_parse_normalizes_case_and_whitespace() {
        assert_eq!(
            PrimitiveClass::parse(" Cube ").unwrap(),
            PrimitiveClass::Cube
        );
        assert_eq!(
            PrimitiveClass::parse("Sofa").unwrap(),
            PrimitiveClass::Other("sofa".into())
        );
        assert!(PrimitiveClass::parse("  ").is_err());
    }

    #[test]
    fn object_defaults_from_json() {
        let o: SceneObject =
            serde_json::from_str(r#"{"class_name":"cube","position":[1,2,3]}"#).unwrap();
        assert_eq!(o.rotation, Vec3::ZERO);
        assert_eq!(o.scale, Vec3::ONE);
        assert_eq!(o.material, "gray");
    }

    #[test]
    fn camera_validation() {
        assert!(Camera::default().validate().is_ok());
        let mut c = Camera::default();
        c.target = c.position;
        assert!(c.validate().is_err());
        let c = Camera {
            fov: 180.0,
            ..Camera::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn scene_validate_rejects_bad_scale() {
        let s = Scene::new(
            "s",
            vec![SceneObject::new(PrimitiveClass::Cube, Vec3::ZERO)
                .with_scale(Vec3::new(1.0, 0.0, 1.0))],
        );
        assert_eq!(s.validate(), Err(SceneError::NonPositiveScale { index: 0 }));
    }

    #[test]
    fn angle_normalization() {
        let tau = std::f64::consts::TAU;
        assert_eq!(normalize_angle(1.0), 1.0);
        assert!((normalize_angle(tau + 0.5) - 0.5).abs() < 1e-12);
        assert!((normalize_angle(-3.0 * tau - 0.25) + 0.25).abs() < 1e-9);
    }

    #[test]
    fn aabb_iou() {
        let a = Aabb::new(Vec3::ZERO, Vec3::ONE);
        assert_eq!(a.iou(&a), 1.0);
        let b = Aabb::new(Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.5, 1.0, 1.0));
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
        let c = Aabb::new(Vec3::splat(2.0), Vec3::splat(3.0));
        assert_eq!(a.iou(&c), 0.0);
    }
}
