//! Canonical JSON scene schema:
//! `{"scene_id", "objects": [{"class_name", "position", "rotation", "scale", "material"}], "camera"}`.

use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{colors, CodecError, Diagnostic, ParseOutcome, Severity, PREDICTED_SCENE_ID};
use crate::canonical::{self, Layout};
use crate::scene::{Camera, PrimitiveClass, Scene, SceneObject, Vec3, DEFAULT_MATERIAL};

/// Decimal places in canonical output.
pub const DECIMALS: usize = 6;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StrictObject {
    class_name: String,
    position: [f64; 3],
    rotation: [f64; 3],
    scale: [f64; 3],
    material: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StrictCamera {
    position: [f64; 3],
    target: [f64; 3],
    fov: f64,
    #[serde(default)]
    aspect: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StrictScene {
    scene_id: String,
    objects: Vec<StrictObject>,
    #[serde(default)]
    camera: Option<StrictCamera>,
}

fn strict(text: &str) -> Option<(Scene, Vec<Diagnostic>)> {
    let s: StrictScene = serde_json::from_str(text).ok()?;
    let mut diags = Vec::new();
    let mut objects = Vec::new();
    for (i, o) in s.objects.into_iter().enumerate() {
        match PrimitiveClass::parse(&o.class_name) {
            Ok(class) => objects.push(SceneObject {
                class_name: class,
                position: Vec3::from_array(o.position),
                rotation: Vec3::from_array(o.rotation),
                scale: Vec3::from_array(o.scale),
                material: o.material.trim().to_lowercase(),
            }),
            Err(_) => diags.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("object {i}: empty class_name skipped"),
                span: None,
            }),
        }
    }
    let mut scene = Scene::new(s.scene_id, objects);
    scene.camera = s.camera.map(|c| Camera {
        position: Vec3::from_array(c.position),
        target: Vec3::from_array(c.target),
        fov: c.fov,
        aspect: c.aspect.unwrap_or(1.0),
    });
    Some((scene, diags))
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn vec3(v: Option<&Value>) -> Option<Vec3> {
    match v? {
        Value::Array(a) if a.len() == 3 => {
            Some(Vec3::new(number(&a[0])?, number(&a[1])?, number(&a[2])?))
        }
        Value::Object(m) => Some(Vec3::new(
            number(m.get("x")?)?,
            number(m.get("y")?)?,
            number(m.get("z")?)?,
        )),
        other => number(other).map(Vec3::splat),
    }
}

fn first<'a>(m: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| m.get(*k))
}

fn text(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
        _ => None,
    }
}

fn material(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) if !s.trim().is_empty() => Some(colors::resolve_material(s)),
        Value::Array(a) if a.len() >= 3 => {
            let rgb: Option<Vec<f64>> = a.iter().take(3).map(number).collect();
            let rgb = rgb?;
            let k = if rgb.iter().any(|c| *c > 1.0) {
                255.0
            } else {
                1.0
            };
            Some(colors::nearest_name([rgb[0] / k, rgb[1] / k, rgb[2] / k]).to_string())
        }
        Value::Object(m) => material(first(m, &["color", "name"])),
        _ => None,
    }
}

/// Accepts common deviations: aliased keys, missing rotation/scale/material,
/// scalar scales, object-style vectors, and a bare object list.
fn tolerant(value: &Value, diags: &mut Vec<Diagnostic>) -> Scene {
    let (items, root) = match value {
        Value::Array(a) => (a.as_slice(), None),
        Value::Object(m) => {
            let list = first(
                m,
                &["objects", "entities", "meshes", "items", "scene_objects"],
            );
            match list {
                Some(Value::Array(a)) => (a.as_slice(), Some(m)),
                _ => match m.get("scene") {
                    Some(inner @ Value::Object(_)) => return tolerant(inner, diags),
                    _ => (&[][..], Some(m)),
                },
            }
        }
        _ => (&[][..], None),
    };
    let mut objects = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let Value::Object(m) = item else {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("object {i}: not an object"),
                span: None,
            });
            continue;
        };
        let class = text(first(
            m,
            &[
                "class_name",
                "class",
                "type",
                "shape",
                "category",
                "label",
                "name",
            ],
        ));
        let position = vec3(first(
            m,
            &["position", "pos", "location", "center", "translation"],
        ));
        let (Some(class), Some(position)) = (class, position) else {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("object {i}: missing class or position"),
                span: None,
            });
            continue;
        };
        let Ok(class) = PrimitiveClass::parse(&class) else {
            continue;
        };
        objects.push(SceneObject {
            class_name: class,
            position,
            rotation: vec3(first(m, &["rotation", "rot", "euler"])).unwrap_or(Vec3::ZERO),
            scale: vec3(first(m, &["scale", "size", "dimensions"])).unwrap_or(Vec3::ONE),
            material: material(first(m, &["material", "color", "colour"]))
                .unwrap_or_else(|| DEFAULT_MATERIAL.to_string()),
        });
    }
    let scene_id = root
        .and_then(|m| text(m.get("scene_id")))
        .unwrap_or_else(|| PREDICTED_SCENE_ID.to_string());
    let mut scene = Scene::new(scene_id, objects);
    if let Some(Value::Object(c)) = root.and_then(|m| m.get("camera")) {
        if let Some(position) = vec3(c.get("position")) {
            let target = vec3(first(c, &["target", "look_at", "lookAt"])).unwrap_or(Vec3::ZERO);
            let fov = c.get("fov").and_then(number).unwrap_or(60.0);
            let cam = Camera::new(position, target, fov);
            if cam.validate().is_ok() {
                scene.camera = Some(cam);
            }
        }
    }
    scene
}

/// The outermost `{...}` or `[...]` region, for JSON wrapped in prose.
fn json_region(t: &str) -> Option<&str> {
    let start = t.find(['{', '['])?;
    let open = t.as_bytes()[start];
    let close = if open == b'{' { '}' } else { ']' };
    let end = t.rfind(close)?;
    (end > start).then(|| &t[start..=end])
}

fn finish(scene: Scene, mut diags: Vec<Diagnostic>) -> ParseOutcome {
    let before = scene.objects.len();
    let mut scene = scene;
    scene.objects.retain(|o| {
        o.position.is_finite()
            && o.rotation.is_finite()
            && o.scale.is_finite()
            && o.scale.x > 0.0
            && o.scale.y > 0.0
            && o.scale.z > 0.0
    });
    if scene.objects.len() < before {
        diags.push(Diagnostic {
            severity: Severity::Warning,
            message: format!(
                "{} objects with invalid transforms dropped",
                before - scene.objects.len()
            ),
            span: None,
        });
    }
    if scene.camera.is_some_and(|c| c.validate().is_err()) {
        scene.camera = None;
    }
    ParseOutcome::from_scene(scene, diags)
}

pub(super) fn parse(text: &str) -> ParseOutcome {
    let t = text.trim();
    if let Some((scene, diags)) = strict(t) {
        return finish(scene, diags);
    }
    let mut diags = Vec::new();
    let value = serde_json::from_str::<Value>(t)
        .ok()
        .or_else(|| json_region(t).and_then(|r| serde_json::from_str(r).ok()));
    let Some(value) = value else {
        if !t.is_empty() {
            diags.push(Diagnostic {
                severity: Severity::Error,
                message: "invalid JSON".to_string(),
                span: None,
            });
        }
        return ParseOutcome::empty(diags);
    };
    diags.push(Diagnostic {
        severity: Severity::Info,
        message: "input does not match the strict schema; tolerant reading applied".to_string(),
        span: None,
    });
    let scene = tolerant(&value, &mut diags);
    finish(scene, diags)
}

fn schema_value(scene: &Scene) -> Value {
    let objects: Vec<Value> = scene
        .objects
        .iter()
        .map(|o| {
            json!({
                "class_name": o.class_name.as_str(),
                "position": o.position.to_array(),
                "rotation": o.rotation.to_array(),
                "scale": o.scale.to_array(),
                "material": o.material,
            })
        })
        .collect();
    let mut root = json!({ "scene_id": scene.scene_id, "objects": objects });
    if let Some(c) = &scene.camera {
        let mut cam = json!({ "position": c.position.to_array(), "target": c.target.to_array(), "fov": c.fov });
        if c.aspect != 1.0 {
            cam["aspect"] = json!(c.aspect);
        }
        root["camera"] = cam;
    }
    root
}

pub(super) fn serialize(scene: &Scene) -> Result<String, CodecError> {
    let mut s = canonical::value_to_string(&schema_value(scene), DECIMALS, Layout::Pretty);
    s.push('\n');
    Ok(s)
}

/// Full scene record for files on disk (includes tier and extent).
pub fn scene_to_json(scene: &Scene) -> Result<String, CodecError> {
    let mut s = canonical::to_string(scene, DECIMALS, Layout::Pretty)
        .map_err(|e| CodecError::Json(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn scene_from_json(text: &str) -> Result<Scene, CodecError> {
    serde_json::from_str(text).map_err(|e| CodecError::Json(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_schema_single_cube() {
        let t = r#"{"scene_id": "predicted", "objects": [{"class_name": "cube", "position": [0, 0.5, 0], "rotation": [0, 0, 0], "scale": [1, 1, 1], "material": "red"}], "camera": {"position": [0, 5, 10], "target": [0, 0, 0], "fov": 60.0}}"#;
        let out = parse(t);
        assert!(out.diagnostics.is_empty());
        let s = out.scene.unwrap();
        assert_eq!(s.objects[0].class_name, PrimitiveClass::Cube);
        assert_eq!(s.camera.unwrap().fov, 60.0);
    }

    #[test]
    fn tolerant_fallback() {
        let t = "Here you go:\n{\"objects\": [{\"type\": \"Sphere\", \"position\": {\"x\": 1, \"y\": 0.5, \"z\": 0}, \"scale\": 0.5, \"color\": \"#0000ff\"}, {\"class\": \"cube\"}]} hope it helps";
        let out = parse(t);
        let s = out.scene.unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.objects[0].scale, Vec3::splat(0.5));
        assert_eq!(s.objects[0].material, "blue");
        assert_eq!(s.objects[0].rotation, Vec3::ZERO);
        assert_eq!(s.scene_id, PREDICTED_SCENE_ID);
        assert!(out.diagnostics.iter().any(|d| d.severity == Severity::Info));
    }

    #[test]
    fn garbage_is_a_failure() {
        assert!(parse("not json at all").is_failure());
        assert!(parse("{\"objects\": []}").is_failure());
    }
}
