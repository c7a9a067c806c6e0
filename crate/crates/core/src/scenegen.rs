//! Deterministic procedural generator for primitive scenes and their camera rings.
//!
//! All randomness flows from a single `ChaCha8Rng` seeded with the config
//! seed, so a config fully determines its scene. Sampled values are quantized
//! (positions/scales/yaw to 1e-3, derived heights to 1e-6) so that the scene
//! survives fixed-precision text serialization bit-for-bit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    object_aabb, rect_area, rect_overlap_area, scene_extent, CameraFrame, RENDER_SIZE,
};
use crate::scene::{Camera, PrimitiveClass, Scene, SceneError, SceneObject, Vec3};

/// Fixed 10-color palette. The first eight are the colors named in the
/// reconstruction prompt's primitive hint.
pub const DEFAULT_PALETTE: [&str; 10] = [
    "red", "blue", "green", "yellow", "purple", "orange", "cyan", "white", "magenta", "gray",
];

pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Cap on pairwise screen overlap (intersection over the smaller projected
/// rectangle). Projected boxes are conservative, and 20 objects on a 6x6
/// ground seen from 25 degrees of elevation cannot be placed below ~0.35.
pub const DEFAULT_MAX_SCREEN_OVERLAP: f64 = 0.45;
const ATTEMPTS_PER_OBJECT: usize = 400;

pub const SCALE_RANGE: (f64, f64) = (0.6, 1.4);
pub const CAMERA_ELEVATION_DEG: f64 = 25.0;
pub const CAMERA_DISTANCE_FACTOR: f64 = 2.2;
pub const CAMERA_FOV_DEG: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("tier {0} outside 1..=5")]
    InvalidTier(u8),
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
    #[error("placement infeasible after {0} attempts")]
    PlacementInfeasible(usize),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub tier: u8,
    pub seed: u64,
    pub palette: Vec<String>,
    pub ground_half_extent: f64,
    pub min_center_separation: f64,
    pub max_screen_overlap: f64,
    pub viewpoints: usize,
}

impl GenConfig {
    pub fn new(tier: u8, seed: u64) -> Self {
        Self {
            tier,
            seed,
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
            ground_half_extent: 3.0,
            min_center_separation: 0.9,
            max_screen_overlap: DEFAULT_MAX_SCREEN_OVERLAP,
            viewpoints: 4,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        tier_object_count(self.tier)?;
        if self.palette.is_empty() {
            return Err(GenError::InvalidConfig("palette must not be empty"));
        }
        if self.ground_half_extent.is_nan() || self.ground_half_extent <= 0.0 {
            return Err(GenError::InvalidConfig("ground_half_extent must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.max_screen_overlap) {
            return Err(GenError::InvalidConfig(
                "max_screen_overlap must be in [0, 1]",
            ));
        }
        if self.viewpoints == 0 {
            return Err(GenError::InvalidConfig("viewpoints must be >= 1"));
        }
        Ok(())
    }
}

pub fn tier_object_count(tier: u8) -> Result<usize, GenError> {
    match tier {
        1 => Ok(3),
        2 => Ok(6),
        3 => Ok(10),
        4 => Ok(15),
        5 => Ok(20),
        t => Err(GenError::InvalidTier(t)),
    }
}

pub fn scene_id_for(tier: u8, seed: u64) -> String {
    format!("prim_t{tier}_s{seed:04}")
}

pub(crate) fn quantize(v: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    let q = (v * k).round() / k;
    if q == 0.0 {
        0.0 // no negative zero in output
    } else {
        q
    }
}

fn sample_object(rng: &mut ChaCha8Rng, config: &GenConfig) -> SceneObject {
    let class = PrimitiveClass::PRIMITIVES
        .choose(rng)
        .expect("non-empty")
        .clone();
    let material = config
        .palette
        .choose(rng)
        .expect("validated non-empty")
        .clone();
    let h = config.ground_half_extent;
    let x = quantize(rng.gen_range(-h..=h), 3);
    let z = quantize(rng.gen_range(-h..=h), 3);
    let scale = Vec3::new(
        quantize(rng.gen_range(SCALE_RANGE.0..=SCALE_RANGE.1), 3),
        quantize(rng.gen_range(SCALE_RANGE.0..=SCALE_RANGE.1), 3),
        quantize(rng.gen_range(SCALE_RANGE.0..=SCALE_RANGE.1), 3),
    );
    // quantizing with floor keeps yaw strictly below 2*pi
    let yaw = (rng.gen_range(0.0..std::f64::consts::TAU) * 1000.0).floor() / 1000.0;
    let y = quantize(0.5 * class.local_height() * scale.y, 6);
    SceneObject {
        class_name: class,
        position: Vec3::new(x, y, z),
        rotation: Vec3::new(0.0, yaw, 0.0),
        scale,
        material,
    }
}

/// Largest pairwise screen overlap among objects, each pair measured as the
/// intersection of projected bounding rectangles over the smaller rectangle.
/// Objects whose bounds cross the camera plane count as full overlap.
pub fn max_screen_overlap(objects: &[SceneObject], camera: &Camera) -> f64 {
    let frame = CameraFrame::new(camera);
    let rects: Vec<Option<[f64; 4]>> = objects
        .iter()
        .map(|o| frame.project_box(&object_aabb(o), RENDER_SIZE))
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..rects.len() {
        for j in (i + 1)..rects.len() {
            worst = worst.max(pair_overlap(rects[i].as_ref(), rects[j].as_ref()));
        }
    }
    worst
}

fn pair_overlap(a: Option<&[f64; 4]>, b: Option<&[f64; 4]>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => {
            let denom = rect_area(a).min(rect_area(b));
            if denom <= 0.0 {
                0.0
            } else {
                rect_overlap_area(a, b) / denom
            }
        }
        _ => 1.0,
    }
}

fn candidate_ok(placed: &[SceneObject], cand: &SceneObject, config: &GenConfig) -> bool {
    if placed
        .iter()
        .any(|o| o.position.distance(cand.position) < config.min_center_separation)
    {
        return false;
    }
    let mut all: Vec<SceneObject> = placed.to_vec();
    all.push(cand.clone());
    let probe = Scene::new("probe", all);
    let camera = frontal_camera(&probe).expect("non-empty");
    max_screen_overlap(&probe.objects, &camera) <= config.max_screen_overlap
}

/// Generates the scene for `config`, rejection-sampling placements until all
/// center separations and frontal screen overlaps satisfy the config.
pub fn generate_scene(config: &GenConfig) -> Result<Scene, GenError> {
    config.validate()?;
    let n = tier_object_count(config.tier)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut attempts = 0usize;

    'restart: loop {
        let mut placed: Vec<SceneObject> = Vec::with_capacity(n);
        while placed.len() < n {
            let mut local = 0usize;
            loop {
                attempts += 1;
                local += 1;
                if attempts > MAX_PLACEMENT_ATTEMPTS {
                    return Err(GenError::PlacementInfeasible(MAX_PLACEMENT_ATTEMPTS));
                }
                let cand = sample_object(&mut rng, config);
                if candidate_ok(&placed, &cand, config) {
                    placed.push(cand);
                    break;
                }
                if local >= ATTEMPTS_PER_OBJECT {
                    continue 'restart;
                }
            }
        }
        let mut scene = Scene::new(scene_id_for(config.tier, config.seed), placed);
        scene.tier = Some(config.tier);
        let camera = frontal_camera(&scene)?;
        scene.camera = Some(camera);
        return Ok(scene);
    }
}

fn ring_camera(target: Vec3, distance: f64, azimuth_deg: f64) -> Camera {
    let el = CAMERA_ELEVATION_DEG.to_radians();
    let az = azimuth_deg.to_radians();
    let offset = Vec3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos()) * distance;
    Camera::new(target + offset, target, CAMERA_FOV_DEG)
}

/// Viewpoint 0: azimuth 0 (camera on +Z looking toward -Z).
pub fn frontal_camera(scene: &Scene) -> Result<Camera, GenError> {
    let target = scene.centroid().ok_or(SceneError::EmptyScene)?;
    let distance = CAMERA_DISTANCE_FACTOR * scene_extent(scene)?;
    Ok(ring_camera(target, distance, 0.0))
}

/// Cameras on a ring around the object centroid, evenly spaced in azimuth.
/// With the default four viewpoints the azimuths are 0, 90, 180 and 270 degrees.
pub fn camera_poses(scene: &Scene, config: &GenConfig) -> Result<Vec<Camera>, GenError> {
    let target = scene.centroid().ok_or(SceneError::EmptyScene)?;
    let distance = CAMERA_DISTANCE_FACTOR * scene_extent(scene)?;
    let step = 360.0 / config.viewpoints as f64;
    Ok((0..config.viewpoints)
        .map(|k| ring_camera(target, distance, step * k as f64))
        .collect())
}
