//! Parsers and serializers between [`Scene`] and the six scene-code languages.
//!
//! Parsing is recognition over statements: no input is ever evaluated beyond
//! plain arithmetic on literals. Grammars are documented in `docs/GRAMMARS.md`.

mod blender;
pub mod colors;
mod dsl;
pub mod expr;
mod fence;
mod filter;
mod json;
pub mod lex;
mod open3d;
mod threejs;
mod unity;

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{Camera, PrimitiveClass, Scene, SceneObject, Vec3, DEFAULT_MATERIAL};

pub use blender::export_render_script;
pub use fence::strip_code_fences;
pub use filter::{phase1_quality_filter, FilterOutcome, RejectReason};
pub use json::{scene_from_json, scene_to_json};

/// Scene id given to scenes recovered from code that carries none.
pub const PREDICTED_SCENE_ID: &str = "predicted";

/// Torus proportions of the canonical unit torus (see `local_half_extents`).
pub const TORUS_MAJOR: f64 = 0.5;
pub const TORUS_MINOR: f64 = 0.2;

const MAX_DIAGNOSTICS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneCodeLanguage {
    #[serde(rename = "threejs")]
    ThreeJs,
    UnityCsharp,
    BlenderPython,
    Open3dPython,
    CanonicalJson,
    SceneDsl,
}

impl SceneCodeLanguage {
    pub const ALL: [SceneCodeLanguage; 6] = [
        SceneCodeLanguage::ThreeJs,
        SceneCodeLanguage::UnityCsharp,
        SceneCodeLanguage::BlenderPython,
        SceneCodeLanguage::Open3dPython,
        SceneCodeLanguage::CanonicalJson,
        SceneCodeLanguage::SceneDsl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SceneCodeLanguage::ThreeJs => "threejs",
            SceneCodeLanguage::UnityCsharp => "unity_csharp",
            SceneCodeLanguage::BlenderPython => "blender_python",
            SceneCodeLanguage::Open3dPython => "open3d_python",
            SceneCodeLanguage::CanonicalJson => "canonical_json",
            SceneCodeLanguage::SceneDsl => "scene_dsl",
        }
    }

    /// Human-readable name used in prompts.
    pub fn display_name(self) -> &'static str {
        match self {
            SceneCodeLanguage::ThreeJs => "Three.js JavaScript",
            SceneCodeLanguage::UnityCsharp => "Unity C#",
            SceneCodeLanguage::BlenderPython => "Blender Python",
            SceneCodeLanguage::Open3dPython => "Open3D Python",
            SceneCodeLanguage::CanonicalJson => "canonical JSON",
            SceneCodeLanguage::SceneDsl => "Scene Language DSL",
        }
    }

    pub fn file_extension(self) -> &'static str {
        match self {
            SceneCodeLanguage::ThreeJs => "js",
            SceneCodeLanguage::UnityCsharp => "cs",
            SceneCodeLanguage::BlenderPython | SceneCodeLanguage::Open3dPython => "py",
            SceneCodeLanguage::CanonicalJson => "json",
            SceneCodeLanguage::SceneDsl => "scene",
        }
    }
}

impl fmt::Display for SceneCodeLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scene-code language `{0}`")]
pub struct UnknownLanguage(pub String);

impl FromStr for SceneCodeLanguage {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace('-', "_");
        let lang = match norm.as_str() {
            "threejs" | "three.js" | "three_js" | "javascript" | "js" => SceneCodeLanguage::ThreeJs,
            "unity_csharp" | "unity" | "csharp" | "c#" => SceneCodeLanguage::UnityCsharp,
            "blender_python" | "blender" | "bpy" => SceneCodeLanguage::BlenderPython,
            "open3d_python" | "open3d" => SceneCodeLanguage::Open3dPython,
            "canonical_json" | "json" => SceneCodeLanguage::CanonicalJson,
            "scene_dsl" | "dsl" | "scene_language" => SceneCodeLanguage::SceneDsl,
            _ => return Err(UnknownLanguage(s.to_string())),
        };
        Ok(lang)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    /// Byte range into the fence-stripped text.
    pub span: Option<Range<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub scene: Option<Scene>,
    pub parsed_object_count: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseOutcome {
    /// Zero extracted objects counts as a failed parse.
    pub fn is_failure(&self) -> bool {
        self.parsed_object_count == 0
    }

    fn empty(mut diagnostics: Vec<Diagnostic>) -> Self {
        diagnostics.push(Diagnostic {
            severity: Severity::Error,
            message: "no constructions found".to_string(),
            span: None,
        });
        ParseOutcome {
            scene: None,
            parsed_object_count: 0,
            diagnostics,
        }
    }

    fn from_scene(scene: Scene, diagnostics: Vec<Diagnostic>) -> Self {
        if scene.objects.is_empty() {
            return ParseOutcome::empty(diagnostics);
        }
        ParseOutcome {
            parsed_object_count: scene.objects.len(),
            scene: Some(scene),
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SerializeOptions {
    /// Emit free-form classes as boxes tagged with a class marker instead of
    /// failing.
    pub box_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("class not representable in {language}: `{class}`")]
    ClassNotRepresentable {
        language: SceneCodeLanguage,
        class: String,
    },
    #[error("json: {0}")]
    Json(String),
}

/// Parses model output in `language`. Markdown fences are stripped first.
pub fn parse(language: SceneCodeLanguage, text: &str) -> ParseOutcome {
    let body = strip_code_fences(text);
    match language {
        SceneCodeLanguage::ThreeJs => threejs::parse(&body),
        SceneCodeLanguage::UnityCsharp => unity::parse(&body),
        SceneCodeLanguage::BlenderPython => blender::parse(&body),
        SceneCodeLanguage::Open3dPython => open3d::parse(&body),
        SceneCodeLanguage::CanonicalJson => json::parse(&body),
        SceneCodeLanguage::SceneDsl => dsl::parse(&body),
    }
}

pub fn serialize(language: SceneCodeLanguage, scene: &Scene) -> Result<String, CodecError> {
    serialize_with(language, scene, SerializeOptions::default())
}

pub fn serialize_with(
    language: SceneCodeLanguage,
    scene: &Scene,
    options: SerializeOptions,
) -> Result<String, CodecError> {
    match language {
        SceneCodeLanguage::ThreeJs => threejs::serialize(scene, options),
        SceneCodeLanguage::UnityCsharp => unity::serialize(scene, options),
        SceneCodeLanguage::BlenderPython => blender::serialize(scene, options),
        SceneCodeLanguage::Open3dPython => open3d::serialize(scene, options),
        SceneCodeLanguage::CanonicalJson => json::serialize(scene),
        SceneCodeLanguage::SceneDsl => Ok(dsl::serialize(scene)),
    }
}

/// First mismatch between the object lists of two scenes, compared in order:
/// class and material exactly, position/rotation/scale within `tol`.
pub fn object_mismatch(a: &Scene, b: &Scene, tol: f64) -> Option<String> {
    if a.objects.len() != b.objects.len() {
        return Some(format!(
            "object count {} != {}",
            a.objects.len(),
            b.objects.len()
        ));
    }
    for (i, (x, y)) in a.objects.iter().zip(&b.objects).enumerate() {
        if x.class_name != y.class_name {
            return Some(format!(
                "object {i}: class {} != {}",
                x.class_name, y.class_name
            ));
        }
        if x.material != y.material {
            return Some(format!(
                "object {i}: material {} != {}",
                x.material, y.material
            ));
        }
        for (field, p, q) in [
            ("position", x.position, y.position),
            ("rotation", x.rotation, y.rotation),
            ("scale", x.scale, y.scale),
        ] {
            let d = p.max_abs_diff(q);
            if d.is_nan() || d > tol {
                return Some(format!("object {i}: {field} differs by {d:e}"));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// shared machinery for the statement-based recognizers

/// Formats a number so that parsing it back yields the same `f64`.
pub(crate) fn num(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

pub(crate) fn vec_args(v: Vec3) -> String {
    format!("{}, {}, {}", num(v.x), num(v.y), num(v.z))
}

pub(crate) fn box_factor(w: f64, h: f64, d: f64) -> Vec3 {
    Vec3::new(w, h, d)
}

pub(crate) fn sphere_factor(radius: f64) -> Vec3 {
    Vec3::splat(2.0 * radius)
}

/// Cylinders, cones and pyramids: canonical radius 0.5, height 1.
pub(crate) fn round_factor(radius: f64, height: f64) -> Vec3 {
    Vec3::new(2.0 * radius, height, 2.0 * radius)
}

pub(crate) fn torus_factor(major: f64, minor: f64) -> Vec3 {
    let xz = (major + minor) / (TORUS_MAJOR + TORUS_MINOR);
    Vec3::new(xz, minor / TORUS_MINOR, xz)
}

const GENERIC_NAMES: &[&str] = &[
    "mesh",
    "object",
    "obj",
    "shape",
    "geometry",
    "geom",
    "item",
    "thing",
    "primitive",
    "model",
    "node",
    "entity",
    "part",
    "element",
    "instance",
    "go",
    "gameobject",
];

const PRIMITIVE_WORDS: &[&str] = &[
    "cube",
    "box",
    "block",
    "cuboid",
    "sphere",
    "ball",
    "orb",
    "cylinder",
    "tube",
    "cone",
    "torus",
    "ring",
    "donut",
    "doughnut",
    "pyramid",
    "tetrahedron",
    "capsule",
    "plane",
    "ground",
    "floor",
];

/// Class implied by an object name such as `"chair_2"` or `"RedLamp"`.
/// Generic names and names that mention a primitive shape yield nothing, so
/// the geometry decides.
pub(crate) fn class_from_name(name: &str) -> Option<PrimitiveClass> {
    // split camelCase before lowercasing
    let mut spaced = String::new();
    let mut prev_lower = false;
    for ch in name.chars() {
        if ch.is_ascii_uppercase() && prev_lower {
            spaced.push(' ');
        }
        prev_lower = ch.is_ascii_lowercase();
        spaced.push(ch);
    }
    let words: Vec<String> = spaced
        .to_lowercase()
        .split(|c: char| !c.is_ascii_alphabetic())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect();
    if words.iter().any(|w| PRIMITIVE_WORDS.contains(&w.as_str())) {
        return None;
    }
    let kept: Vec<&str> = words
        .iter()
        .map(String::as_str)
        .skip_while(|w| colors::canonical_name(w).is_some())
        .filter(|w| !matches!(*w, "mat" | "material"))
        .collect();
    if kept.is_empty() || kept.iter().all(|w| GENERIC_NAMES.contains(w)) {
        return None;
    }
    PrimitiveClass::parse(&kept.join("_")).ok()
}

#[derive(Debug, Clone)]
pub(crate) struct Draft {
    pub native: PrimitiveClass,
    pub class_override: Option<PrimitiveClass>,
    /// Constructor dimensions relative to the canonical unit primitive.
    pub factor: Vec3,
    pub position: Vec3,
    pub rotation: Vec3,
    pub scale: Vec3,
    pub material: Option<String>,
    pub name: Option<String>,
    pub span: Range<usize>,
}

#[derive(Debug, Default)]
pub(crate) struct CameraDraft {
    pub position: Option<Vec3>,
    pub target: Option<Vec3>,
    pub fov: Option<f64>,
}

/// Accumulates constructions and their setters while a recognizer walks
/// statements, then assembles the outcome.
#[derive(Debug, Default)]
pub(crate) struct Builder {
    pub drafts: Vec<Draft>,
    pub diagnostics: Vec<Diagnostic>,
    pub numbers: HashMap<String, f64>,
    pub camera: CameraDraft,
    pending_class: Option<String>,
    pending_material: Option<String>,
    dropped_diagnostics: usize,
}

impl Builder {
    pub fn diag(&mut self, severity: Severity, message: impl Into<String>, span: Range<usize>) {
        if self.diagnostics.len() >= MAX_DIAGNOSTICS {
            self.dropped_diagnostics += 1;
            return;
        }
        self.diagnostics.push(Diagnostic {
            severity,
            message: message.into(),
            span: Some(span),
        });
    }

    pub fn skip(&mut self, stmt: &lex::Stmt) {
        let preview: String = stmt.text.chars().take(60).collect();
        self.diag(
            Severity::Info,
            format!("skipped unrecognized statement: {preview}"),
            stmt.span.clone(),
        );
    }

    pub fn marker(&mut self, key: &str, value: &str) {
        match key {
            "class" => self.pending_class = Some(value.to_string()),
            _ => self.pending_material = Some(value.to_string()),
        }
    }

    /// Registers a construction and returns its index.
    pub fn construct(&mut self, native: PrimitiveClass, factor: Vec3, span: Range<usize>) -> usize {
        let class_override = self
            .pending_class
            .take()
            .and_then(|c| PrimitiveClass::parse(&c).ok());
        let material = self.pending_material.take();
        self.drafts.push(Draft {
            native,
            class_override,
            factor,
            position: Vec3::ZERO,
            rotation: Vec3::ZERO,
            scale: Vec3::ONE,
            material,
            name: None,
            span,
        });
        self.drafts.len() - 1
    }

    pub fn lookup(&self) -> impl Fn(&str) -> Option<f64> + '_ {
        move |name| self.numbers.get(name).copied()
    }

    pub fn eval(&self, s: &str) -> Option<f64> {
        expr::eval_with(s, &self.lookup()).ok()
    }

    pub fn eval_vec3(&self, s: &str) -> Option<Vec3> {
        expr::eval_vec3(s, &self.lookup()).map(Vec3::from_array)
    }

    /// Records `name = <number>` declarations so later arguments can use them.
    pub fn remember_number(&mut self, name: &str, rhs: &str) -> bool {
        match self.eval(rhs) {
            Some(v) => {
                self.numbers.insert(name.to_string(), v);
                true
            }
            None => false,
        }
    }

    pub fn finish(mut self) -> ParseOutcome {
        let mut objects = Vec::with_capacity(self.drafts.len());
        let drafts = std::mem::take(&mut self.drafts);
        for d in drafts {
            let class = d
                .class_override
                .clone()
                .or_else(|| d.name.as_deref().and_then(class_from_name))
                .unwrap_or_else(|| d.native.clone());
            let scale = d.factor.mul_elem(d.scale);
            let obj = SceneObject {
                class_name: class,
                position: d.position,
                rotation: d.rotation,
                scale,
                material: d
                    .material
                    .clone()
                    .unwrap_or_else(|| DEFAULT_MATERIAL.to_string()),
            };
            let valid = obj.position.is_finite()
                && obj.rotation.is_finite()
                && obj.scale.is_finite()
                && obj.scale.x > 0.0
                && obj.scale.y > 0.0
                && obj.scale.z > 0.0;
            if !valid {
                self.diag(
                    Severity::Warning,
                    "dropped construction with non-finite or non-positive transform",
                    d.span.clone(),
                );
                continue;
            }
            objects.push(obj);
        }
        if self.dropped_diagnostics > 0 {
            let n = self.dropped_diagnostics;
            self.diagnostics.push(Diagnostic {
                severity: Severity::Info,
                message: format!("{n} further diagnostics suppressed"),
                span: None,
            });
        }
        let mut scene = Scene::new(PREDICTED_SCENE_ID, objects);
        if let Some(position) = self.camera.position {
            let target = self.camera.target.unwrap_or(Vec3::ZERO);
            let fov = self.camera.fov.unwrap_or(60.0);
            let cam = Camera::new(position, target, fov);
            if cam.validate().is_ok() {
                scene.camera = Some(cam);
            }
        }
        ParseOutcome::from_scene(scene, self.diagnostics)
    }
}

/// Shared serializer check for languages with a closed primitive set.
pub(crate) fn check_representable(
    language: SceneCodeLanguage,
    scene: &Scene,
    options: SerializeOptions,
) -> Result<(), CodecError> {
    if options.box_fallback {
        return Ok(());
    }
    match scene.objects.iter().find(|o| !o.class_name.is_primitive()) {
        Some(o) => Err(CodecError::ClassNotRepresentable {
            language,
            class: o.class_name.to_string(),
        }),
        None => Ok(()),
    }
}
