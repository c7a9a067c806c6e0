use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;

use super::colors;
use super::lex::{self, CommentStyle, StmtKind};
use super::{
    box_factor, check_representable, num, round_factor, sphere_factor, torus_factor, vec_args,
    Builder, CodecError, ParseOutcome, SceneCodeLanguage, SerializeOptions, Severity, TORUS_MAJOR,
    TORUS_MINOR,
};
use crate::scene::{PrimitiveClass, Scene, Vec3};

fn re(p: &str) -> Regex {
    Regex::new(p).expect("valid regex")
}

static DECL: LazyLock<Regex> = LazyLock::new(|| {
    re(r"^(?:(?:const|let|var)\s+)?([A-Za-z_$][\w$]*)\s*(?::\s*[\w.<>\[\]]+)?\s*=\s*([^=][\s\S]*)$")
});
static GEOMETRY: LazyLock<Regex> =
    LazyLock::new(|| re(r"^new\s+THREE\.(\w+?)(?:Buffer)?Geometry\s*\("));
static MATERIAL: LazyLock<Regex> = LazyLock::new(|| re(r"^new\s+THREE\.\w*Material\s*\("));
static MESH: LazyLock<Regex> = LazyLock::new(|| re(r"new\s+THREE\.Mesh\s*\("));
static CAMERA: LazyLock<Regex> = LazyLock::new(|| re(r"^new\s+THREE\.PerspectiveCamera\s*\("));
static CLONE: LazyLock<Regex> = LazyLock::new(|| re(r"^([A-Za-z_$][\w$]*)\.clone\(\s*\)$"));
static SETTER: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^([A-Za-z_$][\w$]*)\.(position|rotation|scale)\.(set|setScalar|fromArray|copy)\s*\(([\s\S]*)\)$",
    )
});
static COMPONENT: LazyLock<Regex> = LazyLock::new(|| {
    re(r"^([A-Za-z_$][\w$]*)\.(position|rotation|scale)\.([xyz])\s*([+\-*]?=)\s*([\s\S]+)$")
});
static ROTATE_AXIS: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_$][\w$]*)\.rotate([XYZ])\s*\(([\s\S]*)\)$"));
static NAME: LazyLock<Regex> =
    LazyLock::new(|| re(r#"^([A-Za-z_$][\w$]*)\.name\s*=\s*(['"`])(.*)['"`]$"#));
static COLOR_SET: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^([A-Za-z_$][\w$]*)(?:\.material)?\.color\.(set|setHex|setStyle|setRGB|setColorName)\s*\(([\s\S]*)\)$",
    )
});
static COLOR_ASSIGN: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_$][\w$]*)(?:\.material)?\.color\s*=\s*([\s\S]+)$"));
static MATERIAL_ASSIGN: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_$][\w$]*)\.material\s*=\s*([\s\S]+)$"));
static LOOKAT: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_$][\w$]*)\.lookAt\s*\(([\s\S]*)\)$"));
static OPTION_KEY: LazyLock<Regex> = LazyLock::new(|| re(r"(?:^|[{,\s])(color|name)\s*:\s*"));
static NEW_COLOR: LazyLock<Regex> = LazyLock::new(|| re(r"^new\s+THREE\.Color\s*\(([\s\S]*)\)$"));

#[derive(Debug, Clone, Default)]
struct MatInfo {
    color: Option<String>,
    name: Option<String>,
}

#[derive(Default)]
struct State {
    b: Builder,
    geometries: HashMap<String, (PrimitiveClass, Vec3)>,
    materials: HashMap<String, MatInfo>,
    meshes: HashMap<String, usize>,
    /// Meshes built from each material variable.
    users: HashMap<String, Vec<usize>>,
    cameras: Vec<String>,
}

pub(super) fn parse(text: &str) -> ParseOutcome {
    let mut st = State::default();
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

fn arg(args: &[String], i: usize) -> Option<&str> {
    args.get(i).map(String::as_str).filter(|s| !s.is_empty())
}

impl State {
    fn num_arg(&self, args: &[String], i: usize, default: f64) -> Option<f64> {
        match arg(args, i) {
            None => Some(default),
            Some(a) => self.b.eval(a),
        }
    }

    fn geometry(&self, ty: &str, args_text: &str) -> Option<(PrimitiveClass, Vec3)> {
        let args = lex::split_args(args_text);
        let a = |i, d| self.num_arg(&args, i, d);
        Some(match ty {
            "Box" => (
                PrimitiveClass::Cube,
                box_factor(a(0, 1.0)?, a(1, 1.0)?, a(2, 1.0)?),
            ),
            "Sphere" => (PrimitiveClass::Sphere, sphere_factor(a(0, 1.0)?)),
            "Cylinder" => {
                let (top, bottom, h) = (a(0, 1.0)?, a(1, 1.0)?, a(2, 1.0)?);
                let segments = a(3, 32.0)?;
                if top == 0.0 {
                    let class = if segments == 4.0 {
                        PrimitiveClass::Pyramid
                    } else {
                        PrimitiveClass::Cone
                    };
                    (class, round_factor(bottom, h))
                } else {
                    (PrimitiveClass::Cylinder, round_factor(top.max(bottom), h))
                }
            }
            "Cone" => {
                let (r, h, segments) = (a(0, 1.0)?, a(1, 1.0)?, a(2, 32.0)?);
                let class = if segments == 4.0 {
                    PrimitiveClass::Pyramid
                } else {
                    PrimitiveClass::Cone
                };
                (class, round_factor(r, h))
            }
            "Torus" => (PrimitiveClass::Torus, torus_factor(a(0, 1.0)?, a(1, 0.4)?)),
            "Tetrahedron" => (PrimitiveClass::Pyramid, sphere_factor(a(0, 1.0)?)),
            "Icosahedron" | "Octahedron" | "Dodecahedron" => {
                (PrimitiveClass::Sphere, sphere_factor(a(0, 1.0)?))
            }
            "Capsule" => {
                let (r, len) = (a(0, 1.0)?, a(1, 1.0)?);
                (PrimitiveClass::Cylinder, round_factor(r, len + 2.0 * r))
            }
            _ => return None,
        })
    }

    fn geometry_expr(&self, text: &str) -> Option<(PrimitiveClass, Vec3)> {
        let t = text.trim();
        if let Some(g) = self.geometries.get(t) {
            return Some(g.clone());
        }
        let caps = GEOMETRY.captures(t)?;
        let rest = &t[caps.get(0)?.end()..];
        let (inner, _) = lex::balanced(rest)?;
        self.geometry(caps.get(1)?.as_str(), inner)
    }

    fn color_value(&self, text: &str) -> Option<String> {
        let t = text.trim();
        if let Some(s) = lex::unquote(t) {
            return Some(colors::resolve_material(s));
        }
        if let Some(c) = NEW_COLOR.captures(t) {
            return self.color_args(&c[1]);
        }
        if let Some(rgb) = colors::parse_hex(t) {
            return Some(colors::nearest_name(rgb).to_string());
        }
        if let Ok(v) = t.parse::<u32>() {
            return colors::parse_hex(&format!("{v:06x}"))
                .map(|rgb| colors::nearest_name(rgb).to_string());
        }
        None
    }

    /// Arguments of `Color(...)`, `set(...)` or `setRGB(...)`.
    fn color_args(&self, args_text: &str) -> Option<String> {
        let args = lex::split_args(args_text);
        match args.len() {
            1 => self.color_value(&args[0]),
            3 => {
                let v: Option<Vec<f64>> = args.iter().map(|a| self.b.eval(a)).collect();
                let v = v?;
                Some(colors::nearest_name([v[0], v[1], v[2]]).to_string())
            }
            _ => None,
        }
    }

    fn material_expr(&self, text: &str) -> Option<MatInfo> {
        let t = text.trim();
        if let Some(m) = self.materials.get(t) {
            return Some(m.clone());
        }
        let m = MATERIAL.find(t)?;
        let (inner, _) = lex::balanced(&t[m.end()..])?;
        let mut info = MatInfo::default();
        for caps in OPTION_KEY.captures_iter(inner) {
            let start = caps.get(0)?.end();
            let value = value_until_comma(&inner[start..]);
            match &caps[1] {
                "color" => info.color = self.color_value(value),
                _ => info.name = lex::unquote(value).map(str::to_string),
            }
        }
        Some(info)
    }

    fn apply_material(&mut self, idx: usize, info: &MatInfo) {
        let d = &mut self.b.drafts[idx];
        if let Some(c) = &info.color {
            d.material = Some(c.clone());
        } else if d.material.is_none() {
            if let Some(n) = &info.name {
                d.material = Some(colors::resolve_material(n));
            }
        }
    }

    /// Handles `new THREE.Mesh(geometry, material)` at the start of `text`.
    fn mesh(&mut self, text: &str, span: std::ops::Range<usize>) -> Option<usize> {
        let m = MESH.find(text)?;
        let (inner, _) = lex::balanced(&text[m.end()..])?;
        let args = lex::split_args(inner);
        let Some((class, factor)) = args.first().and_then(|g| self.geometry_expr(g)) else {
            self.b.diag(
                Severity::Warning,
                "mesh with unrecognized geometry skipped",
                span,
            );
            return None;
        };
        let idx = self.b.construct(class, factor, span);
        if let Some(info) = args.get(1).and_then(|m| self.material_expr(m)) {
            self.apply_material(idx, &info);
        }
        if let Some(var) = args
            .get(1)
            .filter(|m| self.materials.contains_key(m.as_str()))
        {
            self.users.entry(var.clone()).or_default().push(idx);
        }
        Some(idx)
    }

    fn statement(&mut self, t: &str, span: std::ops::Range<usize>) -> bool {
        if let Some(c) = DECL.captures(t) {
            let name = c[1].to_string();
            let rhs = c[2].trim();
            if MESH.find(rhs).is_some_and(|m| m.start() == 0) {
                if let Some(idx) = self.mesh(rhs, span) {
                    self.meshes.insert(name, idx);
                }
                return true;
            }
            if let Some(g) = self.geometry_expr(rhs) {
                self.geometries.insert(name, g);
                return true;
            }
            if MATERIAL.is_match(rhs) {
                if let Some(info) = self.material_expr(rhs) {
                    self.users.remove(&name);
                    self.materials.insert(name, info);
                }
                return true;
            }
            if let Some(m) = CAMERA.find(rhs) {
                if let Some((inner, _)) = lex::balanced(&rhs[m.end()..]) {
                    let args = lex::split_args(inner);
                    self.b.camera.fov = arg(&args, 0).and_then(|a| self.b.eval(a));
                }
                self.cameras.push(name);
                return true;
            }
            if let Some(cl) = CLONE.captures(rhs) {
                if let Some(&src) = self.meshes.get(&cl[1]) {
                    let d = self.b.drafts[src].clone();
                    let idx = self.b.construct(d.native.clone(), d.factor, span);
                    let n = &mut self.b.drafts[idx];
                    n.class_override = n.class_override.take().or(d.class_override);
                    n.position = d.position;
                    n.rotation = d.rotation;
                    n.scale = d.scale;
                    n.material = n.material.take().or(d.material);
                    self.meshes.insert(name, idx);
                    return true;
                }
            }
            if self.b.remember_number(&name, rhs) {
                return true;
            }
            // fall through: `x = something` that may still contain an inline mesh
        }
        if let Some(c) = SETTER.captures(t) {
            return self.setter(&c[1], &c[2], &c[3], &c[4]);
        }
        if let Some(c) = COMPONENT.captures(t) {
            let Some(&idx) = self.meshes.get(&c[1]) else {
                return self.camera_component(&c[1], &c[2], &c[3], &c[4], &c[5]);
            };
            let Some(v) = self.b.eval(&c[5]) else {
                return false;
            };
            let d = &mut self.b.drafts[idx];
            let target = match &c[2] {
                "position" => &mut d.position,
                "rotation" => &mut d.rotation,
                _ => &mut d.scale,
            };
            let slot = match &c[3] {
                "x" => &mut target.x,
                "y" => &mut target.y,
                _ => &mut target.z,
            };
            match &c[4] {
                "=" => *slot = v,
                "+=" => *slot += v,
                "-=" => *slot -= v,
                _ => *slot *= v,
            }
            return true;
        }
        if let Some(c) = ROTATE_AXIS.captures(t) {
            let Some(&idx) = self.meshes.get(&c[1]) else {
                return false;
            };
            let Some(v) = self.b.eval(&c[3]) else {
                return false;
            };
            let r = &mut self.b.drafts[idx].rotation;
            match &c[2] {
                "X" => r.x += v,
                "Y" => r.y += v,
                _ => r.z += v,
            }
            return true;
        }
        if let Some(c) = NAME.captures(t) {
            if let Some(&idx) = self.meshes.get(&c[1]) {
                self.b.drafts[idx].name = Some(c[3].to_string());
                return true;
            }
            if let Some(m) = self.materials.get_mut(&c[1]) {
                m.name = Some(c[3].to_string());
                return true;
            }
            return false;
        }
        if let Some(c) = COLOR_SET.captures(t) {
            let Some(color) = self.color_args(&c[3]) else {
                return false;
            };
            return self.set_color(&c[1], color);
        }
        if let Some(c) = COLOR_ASSIGN.captures(t) {
            let Some(color) = self.color_value(&c[2]) else {
                return false;
            };
            return self.set_color(&c[1], color);
        }
        if let Some(c) = MATERIAL_ASSIGN.captures(t) {
            let Some(&idx) = self.meshes.get(&c[1]) else {
                return false;
            };
            let Some(info) = self.material_expr(&c[2]) else {
                return false;
            };
            self.apply_material(idx, &info);
            return true;
        }
        if let Some(c) = LOOKAT.captures(t) {
            if self.cameras.iter().any(|n| n == &c[1]) {
                let args = c[2].trim();
                self.b.camera.target = if args.ends_with(".position") {
                    Some(Vec3::ZERO)
                } else {
                    self.b.eval_vec3(args)
                };
                return true;
            }
            return false;
        }
        // anonymous meshes, e.g. scene.add(new THREE.Mesh(...))
        if let Some(m) = MESH.find(t) {
            let inline = &t[m.start()..];
            return self.mesh(inline, span).is_some();
        }
        t.contains("new THREE.Scene")
    }

    fn set_color(&mut self, var: &str, color: String) -> bool {
        if let Some(&idx) = self.meshes.get(var) {
            self.b.drafts[idx].material = Some(color);
            return true;
        }
        if let Some(m) = self.materials.get_mut(var) {
            m.color = Some(color.clone());
            for &idx in self.users.get(var).into_iter().flatten() {
                self.b.drafts[idx].material = Some(color.clone());
            }
            return true;
        }
        false
    }

    fn setter(&mut self, var: &str, field: &str, method: &str, args: &str) -> bool {
        let value = match method {
            "setScalar" => self.b.eval(args).map(Vec3::splat),
            "copy" | "fromArray" | "set" => self.b.eval_vec3(args),
            _ => None,
        };
        let Some(v) = value else { return false };
        if let Some(&idx) = self.meshes.get(var) {
            let d = &mut self.b.drafts[idx];
            match field {
                "position" => d.position = v,
                "rotation" => d.rotation = v,
                _ => d.scale = v,
            }
            return true;
        }
        if field == "position" && self.cameras.iter().any(|n| n == var) {
            self.b.camera.position = Some(v);
            return true;
        }
        false
    }

    fn camera_component(
        &mut self,
        var: &str,
        field: &str,
        axis: &str,
        op: &str,
        rhs: &str,
    ) -> bool {
        if field != "position" || op != "=" || !self.cameras.iter().any(|n| n == var) {
            return false;
        }
        let Some(v) = self.b.eval(rhs) else {
            return false;
        };
        let p = self.b.camera.position.get_or_insert(Vec3::ZERO);
        match axis {
            "x" => p.x = v,
            "y" => p.y = v,
            _ => p.z = v,
        }
        true
    }
}

/// Text of an object-literal value up to the next top-level comma or brace.
fn value_until_comma(s: &str) -> &str {
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    for (i, ch) in s.char_indices() {
        if let Some(q) = quote {
            if ch == q {
                quote = None;
            }
            continue;
        }
        match ch {
            '\'' | '"' | '`' => quote = Some(ch),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' if depth == 0 => return s[..i].trim(),
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => return s[..i].trim(),
            _ => {}
        }
    }
    s.trim()
}

fn geometry_ctor(class: &PrimitiveClass) -> String {
    match class {
        PrimitiveClass::Sphere => "new THREE.SphereGeometry(0.5, 32, 16)".to_string(),
        PrimitiveClass::Cylinder => "new THREE.CylinderGeometry(0.5, 0.5, 1.0, 32)".to_string(),
        PrimitiveClass::Cone => "new THREE.ConeGeometry(0.5, 1.0, 32)".to_string(),
        PrimitiveClass::Pyramid => "new THREE.ConeGeometry(0.5, 1.0, 4)".to_string(),
        PrimitiveClass::Torus => {
            format!(
                "new THREE.TorusGeometry({}, {}, 16, 48)",
                num(TORUS_MAJOR),
                num(TORUS_MINOR)
            )
        }
        PrimitiveClass::Cube | PrimitiveClass::Other(_) => {
            "new THREE.BoxGeometry(1.0, 1.0, 1.0)".to_string()
        }
    }
}

pub(super) fn serialize(scene: &Scene, options: SerializeOptions) -> Result<String, CodecError> {
    check_representable(SceneCodeLanguage::ThreeJs, scene, options)?;
    let cam = scene.camera.unwrap_or_default();
    let mut s = String::new();
    s.push_str("import * as THREE from 'three';\n\n");
    s.push_str("const scene = new THREE.Scene();\n");
    let _ = writeln!(
        s,
        "const camera = new THREE.PerspectiveCamera({}, {}, 0.1, 1000);",
        num(cam.fov),
        num(cam.aspect)
    );
    let _ = writeln!(
        s,
        "camera.position.fromArray([{}]);",
        vec_args(cam.position)
    );
    let _ = writeln!(s, "camera.lookAt({});", vec_args(cam.target));
    for (i, o) in scene.objects.iter().enumerate() {
        s.push('\n');
        if matches!(
            o.class_name,
            PrimitiveClass::Pyramid | PrimitiveClass::Other(_)
        ) {
            let _ = writeln!(s, "// @class {}", o.class_name);
        }
        let named = colors::hex_of(&o.material);
        if named.is_none() {
            let _ = writeln!(s, "// @material {}", o.material);
        }
        let _ = writeln!(s, "const geometry{i} = {};", geometry_ctor(&o.class_name));
        match named {
            Some(hex) => {
                let _ = writeln!(
                    s,
                    "const material{i} = new THREE.MeshStandardMaterial({{ color: {hex} }});"
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    "const material{i} = new THREE.MeshStandardMaterial({{ name: {} }});",
                    js_string(&o.material)
                );
            }
        }
        let _ = writeln!(
            s,
            "const mesh{i} = new THREE.Mesh(geometry{i}, material{i});"
        );
        let _ = writeln!(s, "mesh{i}.position.set({});", vec_args(o.position));
        let _ = writeln!(s, "mesh{i}.rotation.set({});", vec_args(o.rotation));
        let _ = writeln!(s, "mesh{i}.scale.set({});", vec_args(o.scale));
        let _ = writeln!(s, "scene.add(mesh{i});");
    }
    Ok(s)
}

fn js_string(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}
