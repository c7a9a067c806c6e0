use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;

use super::colors;
use super::lex::{self, CommentStyle, StmtKind};
use super::{
    check_representable, num, Builder, CodecError, ParseOutcome, SceneCodeLanguage,
    SerializeOptions,
};
use crate::scene::{PrimitiveClass, Scene, Vec3};

fn re(p: &str) -> Regex {
    Regex::new(p).expect("valid regex")
}

static DECL: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^(?:(?:var|GameObject|Transform|Renderer|MeshRenderer|Material|Camera|float|double|int)\s+)?([A-Za-z_]\w*)\s*=\s*([^=][\s\S]*)$",
    )
});
static CREATE: LazyLock<Regex> =
    LazyLock::new(|| re(r"GameObject\.CreatePrimitive\s*\(\s*PrimitiveType\.(\w+)\s*\)"));
/// `obj.transform.position = ...`, `t.localScale = ...`, `obj.transform.Rotate(...)`.
static TRANSFORM: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^([A-Za-z_]\w*(?:\.main)?)(?:\.transform)?\.(position|localPosition|rotation|localRotation|eulerAngles|localEulerAngles|localScale)\s*=\s*([\s\S]+)$",
    )
});
static ROTATE: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_]\w*)(?:\.transform)?\.Rotate\s*\(([\s\S]*)\)$"));
static LOOKAT: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_]\w*(?:\.main)?)(?:\.transform)?\.LookAt\s*\(([\s\S]*)\)$"));
static FOV: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_]\w*(?:\.main)?)\.fieldOfView\s*=\s*([\s\S]+)$"));
static NAME: LazyLock<Regex> = LazyLock::new(|| re(r#"^([A-Za-z_]\w*)\.name\s*=\s*"(.*)"$"#));
/// `obj.GetComponent<Renderer>().material.color = ...` or `rend.material.color = ...`
static COLOR: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^([A-Za-z_]\w*)(?:\.GetComponent<\w*Renderer>\(\))?\.(?:shared)?[mM]aterial\.(color|name)\s*=\s*([\s\S]+)$",
    )
});
static RENDERER: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_]\w*)\.GetComponent<\w*Renderer>\(\)$"));
static TRANSFORM_ALIAS: LazyLock<Regex> = LazyLock::new(|| re(r"^([A-Za-z_]\w*)\.transform$"));
static COLOR_CONST: LazyLock<Regex> = LazyLock::new(|| re(r"^Color\.(\w+)$"));
static COLOR_NEW: LazyLock<Regex> = LazyLock::new(|| re(r"^new\s+Color(32)?\s*\(([\s\S]*)\)$"));
static EULER: LazyLock<Regex> = LazyLock::new(|| re(r"^Quaternion\.Euler\s*\(([\s\S]*)\)$"));
static SCALED_ONE: LazyLock<Regex> =
    LazyLock::new(|| re(r"^Vector3\.one\s*\*\s*([\s\S]+)$|^([\s\S]+?)\s*\*\s*Vector3\.one$"));

/// Size of Unity's built-in primitive relative to the canonical unit primitive.
fn native(kind: &str) -> Option<(PrimitiveClass, Vec3)> {
    Some(match kind {
        "Cube" => (PrimitiveClass::Cube, Vec3::ONE),
        "Sphere" => (PrimitiveClass::Sphere, Vec3::ONE),
        // Unity cylinders and capsules are two units tall
        "Cylinder" | "Capsule" => (PrimitiveClass::Cylinder, Vec3::new(1.0, 2.0, 1.0)),
        _ => return None,
    })
}

#[derive(Default)]
struct State {
    b: Builder,
    objects: HashMap<String, usize>,
    cameras: Vec<String>,
}

pub(super) fn parse(text: &str) -> ParseOutcome {
    let mut st = State {
        cameras: vec!["Camera.main".to_string()],
        ..Default::default()
    };
    for stmt in lex::statements(text, CommentStyle::CLike) {
        match &stmt.kind {
            StmtKind::Marker(k, v) => st.b.marker(k, v),
            StmtKind::Code => {
                if !st.statement(&stmt.text, stmt.span.clone()) {
                    st.b.skip(&stmt);
                }
            }
        }
    }
    st.b.finish()
}

impl State {
    fn create(&mut self, t: &str, span: std::ops::Range<usize>) -> Option<Option<usize>> {
        let c = CREATE.captures(t)?;
        match native(&c[1]) {
            Some((class, factor)) => Some(Some(self.b.construct(class, factor, span))),
            None => Some(None),
        }
    }

    fn color(&self, rhs: &str) -> Option<String> {
        let t = rhs.trim();
        if let Some(c) = COLOR_CONST.captures(t) {
            return Some(colors::resolve_material(&c[1]));
        }
        let c = COLOR_NEW.captures(t)?;
        let v: Vec<f64> = lex::split_args(&c[2])
            .iter()
            .map(|a| self.b.eval(a))
            .collect::<Option<_>>()?;
        if v.len() < 3 {
            return None;
        }
        let k = if c.get(1).is_some() { 255.0 } else { 1.0 };
        Some(colors::nearest_name([v[0] / k, v[1] / k, v[2] / k]).to_string())
    }

    fn euler(&self, rhs: &str) -> Option<Vec3> {
        let t = rhs.trim();
        let inner = EULER.captures(t).map(|c| c[1].to_string());
        let deg = self.b.eval_vec3(inner.as_deref().unwrap_or(t))?;
        Some(Vec3::new(
            deg.x.to_radians(),
            deg.y.to_radians(),
            deg.z.to_radians(),
        ))
    }

    fn scale(&self, rhs: &str) -> Option<Vec3> {
        if let Some(c) = SCALED_ONE.captures(rhs.trim()) {
            let k = c.get(1).or(c.get(2))?.as_str();
            return self.b.eval(k).map(Vec3::splat);
        }
        self.b.eval_vec3(rhs)
    }

    fn is_camera(&self, var: &str) -> bool {
        self.cameras.iter().any(|c| c == var)
    }

    fn statement(&mut self, t: &str, span: std::ops::Range<usize>) -> bool {
        if let Some(c) = DECL.captures(t) {
            let (name, rhs) = (c[1].to_string(), c[2].trim());
            if let Some(created) = self.create(rhs, span.clone()) {
                if let Some(idx) = created {
                    self.objects.insert(name, idx);
                }
                return true;
            }
            if let Some(a) = TRANSFORM_ALIAS
                .captures(rhs)
                .or_else(|| RENDERER.captures(rhs))
            {
                if let Some(&idx) = self.objects.get(&a[1]) {
                    self.objects.insert(name, idx);
                    return true;
                }
                if self.is_camera(&a[1]) {
                    self.cameras.push(name);
                    return true;
                }
                return false;
            }
            if rhs == "Camera.main" || rhs.contains("AddComponent<Camera>") {
                if let Some(owner) = rhs.split('.').next().filter(|o| *o != "Camera") {
                    self.cameras.push(owner.to_string());
                }
                self.cameras.push(name);
                return true;
            }
            if self.b.remember_number(&name, rhs) {
                return true;
            }
        }
        if let Some(c) = TRANSFORM.captures(t) {
            let (var, field, rhs) = (&c[1], &c[2], &c[3]);
            if let Some(&idx) = self.objects.get(var) {
                let value = match field {
                    "position" | "localPosition" => self.b.eval_vec3(rhs),
                    "localScale" => self.scale(rhs),
                    _ => self.euler(rhs),
                };
                let Some(v) = value else { return false };
                let d = &mut self.b.drafts[idx];
                match field {
                    "position" | "localPosition" => d.position = v,
                    "localScale" => d.scale = v,
                    _ => d.rotation = v,
                }
                return true;
            }
            if self.is_camera(var) && matches!(field, "position" | "localPosition") {
                self.b.camera.position = self.b.eval_vec3(rhs);
                return self.b.camera.position.is_some();
            }
            return false;
        }
        if let Some(c) = ROTATE.captures(t) {
            let Some(&idx) = self.objects.get(&c[1]) else {
                return false;
            };
            let Some(r) = self.euler(&c[2]) else {
                return false;
            };
            let d = &mut self.b.drafts[idx];
            d.rotation = d.rotation + r;
            return true;
        }
        if let Some(c) = COLOR.captures(t) {
            let Some(&idx) = self.objects.get(&c[1]) else {
                return false;
            };
            let value = if &c[2] == "name" {
                lex::unquote(&c[3]).map(colors::resolve_material)
            } else {
                self.color(&c[3])
            };
            let Some(m) = value else { return false };
            let d = &mut self.b.drafts[idx];
            // an explicit color wins over a material name
            if &c[2] == "color" || d.material.is_none() {
                d.material = Some(m);
            }
            return true;
        }
        if let Some(c) = NAME.captures(t) {
            let Some(&idx) = self.objects.get(&c[1]) else {
                return false;
            };
            self.b.drafts[idx].name = Some(c[2].to_string());
            return true;
        }
        if let Some(c) = LOOKAT.captures(t) {
            if !self.is_camera(&c[1]) {
                return false;
            }
            let arg = c[2].trim();
            self.b.camera.target = if arg == "Vector3.zero" {
                Some(Vec3::ZERO)
            } else {
                self.b.eval_vec3(arg)
            };
            return self.b.camera.target.is_some();
        }
        if let Some(c) = FOV.captures(t) {
            if !self.is_camera(&c[1]) {
                return false;
            }
            self.b.camera.fov = self.b.eval(&c[2]);
            return self.b.camera.fov.is_some();
        }
        // bare creation whose result is discarded
        self.create(t, span).is_some()
    }
}

const UNITY_COLORS: [&str; 9] = [
    "red", "blue", "green", "yellow", "cyan", "white", "magenta", "gray", "black",
];

fn cs(v: f64) -> String {
    format!("{}f", num(v))
}

fn cs_vec(v: Vec3) -> String {
    format!("new Vector3({}, {}, {})", cs(v.x), cs(v.y), cs(v.z))
}

pub(super) fn serialize(scene: &Scene, options: SerializeOptions) -> Result<String, CodecError> {
    check_representable(SceneCodeLanguage::UnityCsharp, scene, options)?;
    let mut s = String::new();
    s.push_str("using UnityEngine;\n\npublic class SceneBuilder : MonoBehaviour\n{\n    void Start()\n    {\n");
    if let Some(cam) = &scene.camera {
        let _ = writeln!(
            s,
            "        Camera.main.transform.position = {};",
            cs_vec(cam.position)
        );
        let _ = writeln!(
            s,
            "        Camera.main.transform.LookAt({});",
            cs_vec(cam.target)
        );
        let _ = writeln!(s, "        Camera.main.fieldOfView = {};", cs(cam.fov));
    }
    for (i, o) in scene.objects.iter().enumerate() {
        s.push('\n');
        let (kind, factor, marker) = match &o.class_name {
            PrimitiveClass::Cube => ("Cube", Vec3::ONE, false),
            PrimitiveClass::Sphere => ("Sphere", Vec3::ONE, false),
            PrimitiveClass::Cylinder => ("Cylinder", Vec3::new(1.0, 2.0, 1.0), false),
            PrimitiveClass::Cone | PrimitiveClass::Torus => {
                ("Cylinder", Vec3::new(1.0, 2.0, 1.0), true)
            }
            PrimitiveClass::Pyramid | PrimitiveClass::Other(_) => ("Cube", Vec3::ONE, true),
        };
        if marker {
            let _ = writeln!(s, "        // @class {}", o.class_name);
        }
        if colors::unit_rgb(&o.material).is_none() {
            let _ = writeln!(s, "        // @material {}", o.material);
        }
        let local = Vec3::new(
            o.scale.x / factor.x,
            o.scale.y / factor.y,
            o.scale.z / factor.z,
        );
        let deg = Vec3::new(
            o.rotation.x.to_degrees(),
            o.rotation.y.to_degrees(),
            o.rotation.z.to_degrees(),
        );
        let _ = writeln!(
            s,
            "        GameObject obj{i} = GameObject.CreatePrimitive(PrimitiveType.{kind});"
        );
        let _ = writeln!(
            s,
            "        obj{i}.transform.position = {};",
            cs_vec(o.position)
        );
        let _ = writeln!(
            s,
            "        obj{i}.transform.rotation = Quaternion.Euler({}, {}, {});",
            cs(deg.x),
            cs(deg.y),
            cs(deg.z)
        );
        let _ = writeln!(
            s,
            "        obj{i}.transform.localScale = {};",
            cs_vec(local)
        );
        let renderer = format!("obj{i}.GetComponent<Renderer>().material");
        if UNITY_COLORS.contains(&o.material.as_str()) {
            let _ = writeln!(s, "        {renderer}.color = Color.{};", o.material);
        } else if let Some([r, g, b]) = colors::unit_rgb(&o.material) {
            let _ = writeln!(
                s,
                "        {renderer}.color = new Color({}, {}, {});",
                cs(r),
                cs(g),
                cs(b)
            );
        } else {
            let _ = writeln!(
                s,
                "        {renderer}.name = \"{}\";",
                o.material.replace('"', "\\\"")
            );
        }
    }
    s.push_str("    }\n}\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::SceneObject;

    #[test]
    fn typical_model_output() {
        let src = r#"
using UnityEngine;
public class Build : MonoBehaviour {
    void Start() {
        GameObject c = GameObject.CreatePrimitive(PrimitiveType.Cylinder);
        c.transform.position = new Vector3(1.5f, 0.5f, -1f);
        c.transform.localScale = new Vector3(1f, 0.5f, 1f);
        c.transform.rotation = Quaternion.Euler(0, 90, 0);
        c.GetComponent<Renderer>().material.color = Color.blue;
        var s = GameObject.CreatePrimitive(PrimitiveType.Sphere);
        Transform t = s.transform;
        t.localScale = Vector3.one * 0.5f;
        Renderer r = s.GetComponent<Renderer>();
        r.material.color = new Color(1f, 0.65f, 0f);
        GameObject.CreatePrimitive(PrimitiveType.Plane);
    }
}"#;
        let out = parse(src);
        let sc = out.scene.unwrap();
        assert_eq!(sc.objects.len(), 2);
        let c = &sc.objects[0];
        assert_eq!(c.class_name, PrimitiveClass::Cylinder);
        assert_eq!(c.scale, Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(c.material, "blue");
        assert!((c.rotation.y - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(sc.objects[1].scale, Vec3::splat(0.5));
        assert_eq!(sc.objects[1].material, "orange");
    }

    #[test]
    fn markers_round_trip_closed_set() {
        let scene = Scene::new(
            "s",
            vec![
                SceneObject::new(PrimitiveClass::Torus, Vec3::new(1.0, 0.2, 0.0))
                    .with_material("purple"),
                SceneObject::new(PrimitiveClass::Pyramid, Vec3::ZERO)
                    .with_scale(Vec3::new(1.0, 2.0, 1.0)),
            ],
        );
        let text = serialize(&scene, SerializeOptions::default()).unwrap();
        let back = parse(&text).scene.unwrap();
        assert_eq!(super::super::object_mismatch(&scene, &back, 1e-9), None);
    }
}
