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
use crate::scene::{PrimitiveClass, Scene, Vec3};

fn re(p: &str) -> Regex {
    Regex::new(p).expect("valid regex")
}

static DECL: LazyLock<Regex> = LazyLock::new(|| re(r"^([A-Za-z_]\w*)\s*=\s*([^=][\s\S]*)$"));
static CREATE: LazyLock<Regex> =
    LazyLock::new(|| re(r"^(?:o3d|open3d)\.geometry\.TriangleMesh\.create_(\w+)\s*\(([\s\S]*)\)$"));
static CLONE: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^(?:copy\.deepcopy\(\s*([A-Za-z_]\w*)\s*\)|(?:o3d|open3d)\.geometry\.TriangleMesh\(\s*([A-Za-z_]\w*)\s*\))$",
    )
});
static METHOD: LazyLock<Regex> = LazyLock::new(|| {
    re(r"^([A-Za-z_]\w*)\.(translate|scale|rotate|paint_uniform_color)\s*\(([\s\S]*)\)$")
});
static ROT_MATRIX: LazyLock<Regex> =
    LazyLock::new(|| re(r"^(?:[A-Za-z_][\w.]*\.)?get_rotation_matrix_from_xyz\s*\(([\s\S]*)\)$"));
static VERTEX_SCALE: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"^([A-Za-z_]\w*)\.vertices\s*=\s*(?:o3d|open3d)\.utility\.Vector3dVector\s*\(\s*(?:np|numpy)\.asarray\s*\(\s*([A-Za-z_]\w*)\.vertices\s*\)\s*\*\s*([\s\S]+)\)$",
    )
});
static CAMERA_VAR: LazyLock<Regex> =
    LazyLock::new(|| re(r"^camera_(eye|position|lookat|target|fov)$"));

#[derive(Default)]
struct State {
    b: Builder,
    meshes: HashMap<String, usize>,
    rotations: HashMap<String, Vec3>,
}

fn create(kind: &str, args: &CallArgs, b: &Builder) -> Option<(PrimitiveClass, Vec3)> {
    let f = |name: &str, pos: usize, default: f64| match args.get(name, pos) {
        Some(v) => b.eval(v),
        None => Some(default),
    };
    Some(match kind {
        "box" => (
            PrimitiveClass::Cube,
            box_factor(
                f("width", 0, 1.0)?,
                f("height", 1, 1.0)?,
                f("depth", 2, 1.0)?,
            ),
        ),
        "sphere" => (PrimitiveClass::Sphere, sphere_factor(f("radius", 0, 1.0)?)),
        "cylinder" => (
            PrimitiveClass::Cylinder,
            round_factor(f("radius", 0, 1.0)?, f("height", 1, 2.0)?),
        ),
        "cone" => {
            let class = if f("resolution", 2, 20.0)? == 4.0 {
                PrimitiveClass::Pyramid
            } else {
                PrimitiveClass::Cone
            };
            (
                class,
                round_factor(f("radius", 0, 1.0)?, f("height", 1, 2.0)?),
            )
        }
        "torus" => (
            PrimitiveClass::Torus,
            torus_factor(f("torus_radius", 0, 1.0)?, f("tube_radius", 1, 0.5)?),
        ),
        "tetrahedron" => (PrimitiveClass::Pyramid, sphere_factor(f("radius", 0, 1.0)?)),
        "octahedron" | "icosahedron" => {
            (PrimitiveClass::Sphere, sphere_factor(f("radius", 0, 1.0)?))
        }
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
    st.b.finish()
}

impl State {
    fn rotation(&self, expr: &str) -> Option<Vec3> {
        let e = expr.trim();
        if let Some(r) = self.rotations.get(e) {
            return Some(*r);
        }
        let c = ROT_MATRIX.captures(e)?;
        self.b.eval_vec3(&c[1])
    }

    fn statement(&mut self, t: &str, span: std::ops::Range<usize>) -> bool {
        if t.starts_with("import ") || t.starts_with("from ") {
            return true;
        }
        if let Some(c) = DECL.captures(t) {
            let (name, rhs) = (c[1].to_string(), c[2].trim());
            if let Some(m) = CREATE.captures(rhs) {
                let args = CallArgs::parse(&m[2]);
                match create(&m[1], &args, &self.b) {
                    Some((class, factor)) => {
                        let idx = self.b.construct(class, factor, span);
                        self.meshes.insert(name, idx);
                        return true;
                    }
                    None => return false,
                }
            }
            if let Some(m) = CLONE.captures(rhs) {
                let src = m
                    .get(1)
                    .or(m.get(2))
                    .map(|g| g.as_str())
                    .unwrap_or_default();
                if let Some(&from) = self.meshes.get(src) {
                    let d = self.b.drafts[from].clone();
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
            if let Some(r) = self.rotation(rhs) {
                self.rotations.insert(name, r);
                return true;
            }
            if let Some(cam) = CAMERA_VAR.captures(&name) {
                match &cam[1] {
                    "eye" | "position" => self.b.camera.position = self.b.eval_vec3(rhs),
                    "lookat" | "target" => self.b.camera.target = self.b.eval_vec3(rhs),
                    _ => self.b.camera.fov = self.b.eval(rhs),
                }
                return true;
            }
            if self.b.remember_number(&name, rhs) {
                return true;
            }
        }
        if let Some(c) = VERTEX_SCALE.captures(t) {
            let Some(&idx) = self.meshes.get(&c[1]) else {
                return false;
            };
            let k = self
                .b
                .eval_vec3(&c[3])
                .or_else(|| self.b.eval(&c[3]).map(Vec3::splat));
            let Some(k) = k else { return false };
            let d = &mut self.b.drafts[idx];
            d.scale = d.scale.mul_elem(k);
            return true;
        }
        let Some(c) = METHOD.captures(t) else {
            return false;
        };
        let Some(&idx) = self.meshes.get(&c[1]) else {
            return false;
        };
        let args = CallArgs::parse(&c[3]);
        match &c[2] {
            "translate" => {
                let Some(v) = args.get("translation", 0).and_then(|a| self.b.eval_vec3(a)) else {
                    return false;
                };
                let absolute = args.get("relative", 1).is_some_and(|r| r.trim() == "False");
                let d = &mut self.b.drafts[idx];
                d.position = if absolute { v } else { d.position + v };
            }
            "scale" => {
                let Some(k) = args.get("scale", 0).and_then(|a| self.b.eval(a)) else {
                    return false;
                };
                let d = &mut self.b.drafts[idx];
                d.scale = d.scale * k;
            }
            "rotate" => {
                let Some(r) = args.get("R", 0).and_then(|a| self.rotation(a)) else {
                    return false;
                };
                let d = &mut self.b.drafts[idx];
                d.rotation = d.rotation + r;
            }
            _ => {
                let Some(v) = args.get("color", 0).and_then(|a| self.b.eval_vec3(a)) else {
                    return false;
                };
                self.b.drafts[idx].material = Some(colors::nearest_name(v.to_array()).to_string());
            }
        }
        true
    }
}

fn create_call(class: &PrimitiveClass) -> String {
    let body = match class {
        PrimitiveClass::Sphere => "create_sphere(radius=0.5)".to_string(),
        PrimitiveClass::Cylinder => "create_cylinder(radius=0.5, height=1.0)".to_string(),
        PrimitiveClass::Cone => "create_cone(radius=0.5, height=1.0)".to_string(),
        PrimitiveClass::Pyramid => "create_cone(radius=0.5, height=1.0, resolution=4)".to_string(),
        PrimitiveClass::Torus => {
            format!(
                "create_torus(torus_radius={}, tube_radius={})",
                num(TORUS_MAJOR),
                num(TORUS_MINOR)
            )
        }
        PrimitiveClass::Cube | PrimitiveClass::Other(_) => {
            "create_box(width=1.0, height=1.0, depth=1.0)".to_string()
        }
    };
    format!("o3d.geometry.TriangleMesh.{body}")
}

pub(super) fn serialize(scene: &Scene, options: SerializeOptions) -> Result<String, CodecError> {
    check_representable(SceneCodeLanguage::Open3dPython, scene, options)?;
    let mut s = String::from("import numpy as np\nimport open3d as o3d\n\nmeshes = []\n");
    for (i, o) in scene.objects.iter().enumerate() {
        let m = format!("mesh_{i}");
        s.push('\n');
        if let PrimitiveClass::Other(_) = o.class_name {
            let _ = writeln!(s, "# @class {}", o.class_name);
        }
        let rgb = colors::unit_rgb(&o.material);
        if rgb.is_none() {
            let _ = writeln!(s, "# @material {}", o.material);
        }
        let _ = writeln!(s, "{m} = {}", create_call(&o.class_name));
        let _ = writeln!(
            s,
            "{m}.vertices = o3d.utility.Vector3dVector(np.asarray({m}.vertices) * np.array([{}]))",
            vec_args(o.scale)
        );
        let _ = writeln!(
            s,
            "{m}.rotate({m}.get_rotation_matrix_from_xyz(({})), center=(0, 0, 0))",
            vec_args(o.rotation)
        );
        let _ = writeln!(
            s,
            "{m}.translate(({}), relative=False)",
            vec_args(o.position)
        );
        if let Some([r, g, b]) = rgb {
            let _ = writeln!(
                s,
                "{m}.paint_uniform_color([{}, {}, {}])",
                num(r),
                num(g),
                num(b)
            );
        }
        let _ = writeln!(s, "{m}.compute_vertex_normals()");
        let _ = writeln!(s, "meshes.append({m})");
    }
    if let Some(cam) = &scene.camera {
        s.push('\n');
        let _ = writeln!(s, "camera_eye = np.array([{}])", vec_args(cam.position));
        let _ = writeln!(s, "camera_lookat = np.array([{}])", vec_args(cam.target));
        let _ = writeln!(s, "camera_fov = {}", num(cam.fov));
        s.push_str(
            "front = (camera_eye - camera_lookat) / np.linalg.norm(camera_eye - camera_lookat)\n",
        );
        s.push_str("o3d.visualization.draw_geometries(meshes, lookat=camera_lookat, front=front, up=[0.0, 1.0, 0.0], zoom=0.7)\n");
    } else {
        s.push_str("\no3d.visualization.draw_geometries(meshes)\n");
    }
    Ok(s)
}
