use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;

use super::colors;
use super::lex::{self, CallArgs, CommentStyle, StmtKind};
use super::{
    box_factor, check_representable, num, round_factor, sphere_factor, torus_factor, vec_args,
    Builder, CodecError, ParseOutcome, SceneCodeLanguage, SerializeOptions, TORUS_MAJOR,
    TORUS_MINOR,
};
use crate::geometry::RENDER_SIZE;
use crate::scene::{Camera, PrimitiveClass, Scene, Vec3};

fn re(p: &str) -> Regex {
    Regex::new(p).expect("valid regex")
}

static ADD: LazyLock<Regex> = LazyLock::new(|| re(r"bpy\.ops\.mesh\.primitive_(\w+?)_add\s*\("));
static CAMERA_ADD: LazyLock<Regex> = LazyLock::new(|| re(r"bpy\.ops\.object\.camera_add\s*\("));
static DECL: LazyLock<Regex> = LazyLock::new(|| re(r"^([A-Za-z_]\w*)\s*=\s*([^=][\s\S]*)$"));
static ACTIVE: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^bpy\.context\.(?:active_object|object|view_layer\.objects\.active|selected_objects\[\s*0\s*\])$",
    )
});
static ATTR: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^([A-Za-z_][\w.\[\]]*?)\.(location|rotation_euler|scale|dimensions)(?:\.([xyz]))?\s*([+\-*]?=)\s*([\s\S]+)$",
    )
});
static NAME: LazyLock<Regex> =
    LazyLock::new(|| re(r#"^([A-Za-z_][\w.]*?)\.name\s*=\s*(['"])(.*)['"]$"#));
static NEW_MATERIAL: LazyLock<Regex> =
    LazyLock::new(|| re(r"^bpy\.data\.materials\.new\s*\(([\s\S]*)\)$"));
static DIFFUSE: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_]\w*)\.diffuse_color\s*=\s*([\s\S]+)$"));
static BASE_COLOR: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r#"^([A-Za-z_]\w*)(?:\.node_tree\.nodes(?:\[\s*["']Principled BSDF["']\s*\]|\.get\(\s*["']Principled BSDF["']\s*\)))?\.inputs\[\s*(?:["']Base Color["']|0)\s*\]\.default_value\s*=\s*([\s\S]+)$"#,
    )
});
static NODE_ALIAS: LazyLock<Regex> = LazyLock::new(|| re(r"^([A-Za-z_]\w*)\.node_tree\.nodes"));
static ASSIGN_MAT: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^([A-Za-z_][\w.]*?)(?:\.data\.materials\.append\s*\(\s*([A-Za-z_]\w*)\s*\)|\.active_material\s*=\s*([A-Za-z_]\w*)|\.data\.materials\[\s*0\s*\]\s*=\s*([A-Za-z_]\w*))$",
    )
});
static FOV: LazyLock<Regex> =
    LazyLock::new(|| re(r"^([A-Za-z_][\w.]*?)\.data\.angle\s*=\s*([\s\S]+)$"));

#[derive(Debug, Clone, Default)]
struct Mat {
    name: Option<String>,
    rgb: Option<[f64; 3]>,
}

impl Mat {
    fn resolve(&self) -> Option<String> {
        if let Some(rgb) = self.rgb {
            return Some(colors::nearest_name(rgb).to_string());
        }
        self.name.as_deref().map(colors::resolve_material)
    }
}

#[derive(Default)]
struct State {
    b: Builder,
    /// Most recently added object, which `bpy.context.active_object` refers to.
    active: Option<Target>,
    vars: HashMap<String, Target>,
    materials: HashMap<String, Mat>,
    /// Material slot assignments made before the material got its color.
    users: HashMap<String, Vec<usize>>,
    camera_target: Option<Vec3>,
    /// `bsdf = mat.node_tree.nodes[...]` style aliases, mapped to the material.
    node_aliases: HashMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Target {
    Object(usize),
    Camera,
}

fn primitive(kind: &str, args: &CallArgs, b: &Builder) -> Option<(PrimitiveClass, Vec3)> {
    let f = |name: &str, default: f64| match args.kw(name) {
        Some(v) => b.eval(v),
        None => Some(default),
    };
    Some(match kind {
        "cube" => {
            let s = f("size", 2.0)?;
            (PrimitiveClass::Cube, box_factor(s, s, s))
        }
        "uv_sphere" | "ico_sphere" => (PrimitiveClass::Sphere, sphere_factor(f("radius", 1.0)?)),
        "cylinder" => (
            PrimitiveClass::Cylinder,
            round_factor(f("radius", 1.0)?, f("depth", 2.0)?),
        ),
        "cone" => {
            let class = if f("vertices", 32.0)? == 4.0 {
                PrimitiveClass::Pyramid
            } else {
                PrimitiveClass::Cone
            };
            let r = f("radius1", 1.0)?.max(f("radius2", 0.0)?);
            (class, round_factor(r, f("depth", 2.0)?))
        }
        "torus" => (
            PrimitiveClass::Torus,
            torus_factor(f("major_radius", 1.0)?, f("minor_radius", 0.25)?),
        ),
        _ => return None,
    })
}

pub(super) fn parse(text: &str) -> ParseOutcome {
    let mut st = State::default();
    for stmt in lex::statements(text, CommentStyle::Hash) {
        match &stmt.kind {
            StmtKind::Marker(k, v) => st.b.marker(k, v),
            StmtKind::Code => {
                if !st.statement(&stmt.text, stmt.span.clone()) {
                    st.b.skip(&stmt);
                }
            }
        }
    }
    if st.b.camera.position.is_some() {
        st.b.camera.target = st.b.camera.target.or(st.camera_target);
    }
    st.b.finish()
}

impl State {
    fn target(&self, expr: &str) -> Option<Target> {
        let e = expr.trim();
        if ACTIVE.is_match(e) {
            return self.active;
        }
        if let Some(t) = self.vars.get(e) {
            return Some(*t);
        }
        // obj.data / bpy.context.active_object.data style prefixes are not objects
        None
    }

    fn add(&mut self, t: &str, span: std::ops::Range<usize>) -> Option<bool> {
        if let Some(m) = CAMERA_ADD.find(t) {
            let (inner, _) = lex::balanced(&t[m.end()..])?;
            let args = CallArgs::parse(inner);
            if let Some(loc) = args.kw("location") {
                self.b.camera.position = self.b.eval_vec3(loc);
            }
            self.active = Some(Target::Camera);
            return Some(true);
        }
        let c = ADD.captures(t)?;
        let (inner, _) = lex::balanced(&t[c.get(0)?.end()..])?;
        let args = CallArgs::parse(inner);
        let Some((class, factor)) = primitive(&c[1], &args, &self.b) else {
            // planes, monkeys and the like
            self.active = None;
            return Some(true);
        };
        let idx = self.b.construct(class, factor, span);
        for (key, field) in [("location", 0), ("rotation", 1), ("scale", 2)] {
            if let Some(v) = args.kw(key).and_then(|a| self.b.eval_vec3(a)) {
                let d = &mut self.b.drafts[idx];
                match field {
                    0 => d.position = v,
                    1 => d.rotation = v,
                    _ => d.scale = v,
                }
            }
        }
        self.active = Some(Target::Object(idx));
        Some(true)
    }

    fn rgb(&self, rhs: &str) -> Option<[f64; 3]> {
        let v = super::expr::eval_list(rhs, &self.b.lookup())?;
        (v.len() >= 3).then(|| [v[0], v[1], v[2]])
    }

    fn set_rgb(&mut self, var: &str, rgb: [f64; 3]) -> bool {
        let var = self.material_var(var).to_string();
        let var = var.as_str();
        let Some(m) = self.materials.get_mut(var) else {
            return false;
        };
        m.rgb = Some(rgb);
        let resolved = m.resolve();
        for &idx in self.users.get(var).into_iter().flatten() {
            self.b.drafts[idx].material = resolved.clone();
        }
        true
    }

    fn statement(&mut self, t: &str, span: std::ops::Range<usize>) -> bool {
        if t.starts_with("import ") || t.starts_with("from ") {
            return true;
        }
        if let Some(done) = self.add(t, span) {
            return done;
        }
        if let Some(c) = DECL.captures(t) {
            let (name, rhs) = (c[1].to_string(), c[2].trim());
            if let Some(target) = self.target(rhs) {
                self.vars.insert(name, target);
                return true;
            }
            if let Some(m) = NEW_MATERIAL.captures(rhs) {
                let args = CallArgs::parse(&m[1]);
                let mat_name = args
                    .get("name", 0)
                    .and_then(lex::unquote)
                    .map(str::to_string);
                // a rebound variable no longer refers to earlier objects' material
                self.users.remove(&name);
                self.node_aliases.remove(&name);
                self.materials.insert(
                    name,
                    Mat {
                        name: mat_name,
                        rgb: None,
                    },
                );
                return true;
            }
            if let Some(a) = NODE_ALIAS.captures(rhs) {
                let base = self.material_var(&a[1]).to_string();
                if self.materials.contains_key(&base) {
                    // a node (tree) of a material stands in for the material
                    self.node_aliases.insert(name, base);
                    return true;
                }
            }
            if name.contains("target") {
                if let Some(v) = self.b.eval_vec3(rhs) {
                    self.camera_target = Some(v);
                    return true;
                }
            }
            if self.b.remember_number(&name, rhs) {
                return true;
            }
        }
        if let Some(c) = ATTR.captures(t) {
            let Some(target) = self.target(&c[1]) else {
                return false;
            };
            let (field, axis, op, rhs) = (&c[2], c.get(3).map(|m| m.as_str()), &c[4], &c[5]);
            let idx = match target {
                Target::Camera => {
                    if field == "location" && axis.is_none() && op == "=" {
                        self.b.camera.position = self.b.eval_vec3(rhs);
                        return true;
                    }
                    return false;
                }
                Target::Object(i) => i,
            };
            if field == "dimensions" {
                // absolute size: express it as scale relative to the unit primitive
                let Some(v) = self.b.eval_vec3(rhs) else {
                    return false;
                };
                let d = &mut self.b.drafts[idx];
                d.factor = Vec3::ONE;
                d.scale = v;
                return true;
            }
            let d_val = match axis {
                Some(_) => self.b.eval(rhs).map(Vec3::splat),
                None if op == "*=" => self
                    .b
                    .eval(rhs)
                    .map(Vec3::splat)
                    .or_else(|| self.b.eval_vec3(rhs)),
                None => self.b.eval_vec3(rhs),
            };
            let Some(v) = d_val else { return false };
            let d = &mut self.b.drafts[idx];
            let slot = match field {
                "location" => &mut d.position,
                "rotation_euler" => &mut d.rotation,
                _ => &mut d.scale,
            };
            let apply = |cur: f64, v: f64| match op {
                "=" => v,
                "+=" => cur + v,
                "-=" => cur - v,
                _ => cur * v,
            };
            match axis {
                Some("x") => slot.x = apply(slot.x, v.x),
                Some("y") => slot.y = apply(slot.y, v.y),
                Some(_) => slot.z = apply(slot.z, v.z),
                None => {
                    *slot = Vec3::new(apply(slot.x, v.x), apply(slot.y, v.y), apply(slot.z, v.z))
                }
            }
            return true;
        }
        if let Some(c) = NAME.captures(t) {
            match self.target(&c[1]) {
                Some(Target::Object(idx)) => self.b.drafts[idx].name = Some(c[3].to_string()),
                Some(Target::Camera) => {}
                None => return false,
            }
            return true;
        }
        if let Some(c) = DIFFUSE.captures(t).or_else(|| BASE_COLOR.captures(t)) {
            let Some(rgb) = self.rgb(&c[2]) else {
                return false;
            };
            return self.set_rgb(&c[1], rgb);
        }
        if let Some(c) = ASSIGN_MAT.captures(t) {
            let Some(Target::Object(idx)) = self.target(&c[1]) else {
                return false;
            };
            let var = c
                .get(2)
                .or(c.get(3))
                .or(c.get(4))
                .map(|m| m.as_str().to_string());
            let Some(var) = var else { return false };
            let Some(m) = self.materials.get(&var) else {
                return false;
            };
            let explicit = m.rgb.is_some();
            let resolved = m.resolve();
            let d = &mut self.b.drafts[idx];
            if explicit || d.material.is_none() {
                d.material = resolved;
            }
            self.users.entry(var).or_default().push(idx);
            return true;
        }
        if let Some(c) = FOV.captures(t) {
            if self.target(&c[1]) == Some(Target::Camera) {
                self.b.camera.fov = self.b.eval(&c[2]).map(f64::to_degrees);
                return true;
            }
            return false;
        }
        false
    }

    fn material_var<'a>(&'a self, var: &'a str) -> &'a str {
        self.node_aliases
            .get(var)
            .map(String::as_str)
            .unwrap_or(var)
    }
}

fn primitive_call(class: &PrimitiveClass) -> String {
    match class {
        PrimitiveClass::Sphere => "primitive_uv_sphere_add(radius=0.5".to_string(),
        PrimitiveClass::Cylinder => "primitive_cylinder_add(radius=0.5, depth=1.0".to_string(),
        PrimitiveClass::Cone => "primitive_cone_add(radius1=0.5, depth=1.0".to_string(),
        PrimitiveClass::Pyramid => {
            "primitive_cone_add(vertices=4, radius1=0.5, depth=1.0".to_string()
        }
        PrimitiveClass::Torus => format!(
            "primitive_torus_add(major_radius={}, minor_radius={}",
            num(TORUS_MAJOR),
            num(TORUS_MINOR)
        ),
        PrimitiveClass::Cube | PrimitiveClass::Other(_) => {
            "primitive_cube_add(size=1.0".to_string()
        }
    }
}

fn py_string(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn objects(scene: &Scene, out: &mut String) {
    for (i, o) in scene.objects.iter().enumerate() {
        out.push('\n');
        if let PrimitiveClass::Other(_) = o.class_name {
            let _ = writeln!(out, "# @class {}", o.class_name);
        }
        if colors::unit_rgb(&o.material).is_none() {
            let _ = writeln!(out, "# @material {}", o.material);
        }
        let _ = writeln!(
            out,
            "bpy.ops.mesh.{}, location=({}), rotation=({}), scale=({}))",
            primitive_call(&o.class_name),
            vec_args(o.position),
            vec_args(o.rotation),
            vec_args(o.scale)
        );
        let _ = writeln!(out, "obj = bpy.context.active_object");
        let _ = writeln!(out, "obj.name = \"object_{i}\"");
        let _ = writeln!(
            out,
            "mat = bpy.data.materials.new(name={})",
            py_string(&o.material)
        );
        if let Some([r, g, b]) = colors::unit_rgb(&o.material) {
            let _ = writeln!(
                out,
                "mat.diffuse_color = ({}, {}, {}, 1.0)",
                num(r),
                num(g),
                num(b)
            );
        }
        let _ = writeln!(out, "obj.data.materials.append(mat)");
    }
}

fn camera(cam: &Camera, out: &mut String) {
    out.push('\n');
    let _ = writeln!(out, "camera_target = ({})", vec_args(cam.target));
    let _ = writeln!(
        out,
        "bpy.ops.object.camera_add(location=({}))",
        vec_args(cam.position)
    );
    let _ = writeln!(out, "cam = bpy.context.active_object");
    let _ = writeln!(out, "cam.data.angle = math.radians({})", num(cam.fov));
    out.push_str("direction = mathutils.Vector(camera_target) - cam.location\n");
    out.push_str("cam.rotation_euler = direction.to_track_quat('-Z', 'Y').to_euler()\n");
    out.push_str("bpy.context.scene.camera = cam\n");
}

pub(super) fn serialize(scene: &Scene, options: SerializeOptions) -> Result<String, CodecError> {
    check_representable(SceneCodeLanguage::BlenderPython, scene, options)?;
    let mut s = String::from("import bpy\nimport math\nimport mathutils\n\n");
    s.push_str("bpy.ops.object.select_all(action='SELECT')\nbpy.ops.object.delete()\n");
    objects(scene, &mut s);
    if let Some(cam) = &scene.camera {
        camera(cam, &mut s);
    }
    Ok(s)
}

/// A Blender script that rebuilds `scene`, places `camera`, and renders a
/// square image with the resolution used throughout the benchmark.
pub fn export_render_script(scene: &Scene, camera_pose: &Camera) -> Result<String, CodecError> {
    let mut with_cam = scene.clone();
    with_cam.camera = Some(*camera_pose);
    let mut s = serialize(&with_cam, SerializeOptions { box_fallback: true })?;
    let size = RENDER_SIZE as u32;
    s.push('\n');
    let _ = writeln!(s, "bpy.context.scene.render.resolution_x = {size}");
    let _ = writeln!(s, "bpy.context.scene.render.resolution_y = {size}");
    s.push_str("bpy.context.scene.render.resolution_percentage = 100\n");
    s.push_str("bpy.ops.object.light_add(type='SUN', location=(5.0, 10.0, 5.0))\n");
    let _ = writeln!(
        s,
        "bpy.context.scene.render.filepath = {}",
        py_string(&format!("//{}.png", scene.scene_id))
    );
    s.push_str("bpy.ops.render.render(write_still=True)\n");
    Ok(s)
}
