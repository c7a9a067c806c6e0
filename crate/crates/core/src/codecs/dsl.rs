//! S-expression scene language:
//! `(scene (camera ...) (entity (class cube) (position x y z) ...) ...)`.

use std::fmt::Write as _;

use super::{expr, num, Builder, ParseOutcome, Severity, PREDICTED_SCENE_ID};
use crate::scene::{PrimitiveClass, Scene, Vec3};

const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Atom(String, std::ops::Range<usize>),
    List(Vec<Node>, std::ops::Range<usize>),
}

impl Node {
    fn span(&self) -> std::ops::Range<usize> {
        match self {
            Node::Atom(_, s) | Node::List(_, s) => s.clone(),
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Node::List(items, _) => match items.first() {
                Some(Node::Atom(a, _)) => Some(a.as_str()),
                _ => None,
            },
            Node::Atom(..) => None,
        }
    }

    fn args(&self) -> &[Node] {
        match self {
            Node::List(items, _) if !items.is_empty() => &items[1..],
            _ => &[],
        }
    }
}

/// Reads every top-level form. Unbalanced input is closed implicitly.
fn read(text: &str, b: &mut Builder) -> Vec<Node> {
    let bytes = text.as_bytes();
    let mut stack: Vec<(Vec<Node>, usize)> = vec![(Vec::new(), 0)];
    let mut i = 0;
    let mut too_deep = false;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' | b'[' => {
                if stack.len() > MAX_DEPTH {
                    too_deep = true;
                    // treat as an atom boundary; contents are flattened into the parent
                } else {
                    stack.push((Vec::new(), i));
                }
                i += 1;
            }
            b')' | b']' => {
                if stack.len() > 1 {
                    let (items, start) = stack.pop().expect("non-empty");
                    let node = Node::List(items, start..i + 1);
                    stack.last_mut().expect("root").0.push(node);
                }
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\\' && i + 1 < bytes.len() {
                        i += 1;
                    }
                    let len = utf8_len(bytes[i]);
                    s.push_str(&text[i..(i + len).min(bytes.len())]);
                    i += len;
                }
                i = (i + 1).min(bytes.len());
                stack
                    .last_mut()
                    .expect("root")
                    .0
                    .push(Node::Atom(s, start..i));
            }
            _ if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !b"()[];\"".contains(&bytes[i])
                {
                    i += 1;
                }
                stack
                    .last_mut()
                    .expect("root")
                    .0
                    .push(Node::Atom(text[start..i].to_string(), start..i));
            }
        }
    }
    if too_deep {
        b.diag(
            Severity::Warning,
            "nesting deeper than 64 levels flattened",
            0..text.len(),
        );
    }
    while stack.len() > 1 {
        let (items, start) = stack.pop().expect("non-empty");
        b.diag(Severity::Warning, "unclosed parenthesis", start..text.len());
        stack
            .last_mut()
            .expect("root")
            .0
            .push(Node::List(items, start..text.len()));
    }
    stack.pop().map(|(items, _)| items).unwrap_or_default()
}

fn utf8_len(first: u8) -> usize {
    match first {
        b if b >= 0xF0 => 4,
        b if b >= 0xE0 => 3,
        b if b >= 0xC0 => 2,
        _ => 1,
    }
}

fn atom_text(nodes: &[Node]) -> Option<String> {
    let parts: Vec<&str> = nodes
        .iter()
        .filter_map(|n| match n {
            Node::Atom(a, _) => Some(a.as_str()),
            Node::List(..) => None,
        })
        .collect();
    (!parts.is_empty()).then(|| parts.join(" "))
}

fn numbers(nodes: &[Node]) -> Option<Vec<f64>> {
    // allow both (position 1 2 3) and (position (1 2 3))
    let flat: Vec<&Node> = match nodes {
        [Node::List(inner, _)] => inner.iter().collect(),
        _ => nodes.iter().collect(),
    };
    flat.iter()
        .map(|n| match n {
            Node::Atom(a, _) => expr::eval(a).ok(),
            Node::List(..) => None,
        })
        .collect()
}

fn vec3(nodes: &[Node]) -> Option<Vec3> {
    match numbers(nodes)?.as_slice() {
        [x, y, z] => Some(Vec3::new(*x, *y, *z)),
        [k] => Some(Vec3::splat(*k)),
        _ => None,
    }
}

fn entity(node: &Node, b: &mut Builder) {
    let mut class = None;
    let mut position = None;
    let mut rotation = None;
    let mut scale = None;
    let mut material = None;
    for field in node.args() {
        let args = field.args();
        match field.head().map(str::to_lowercase).as_deref() {
            Some("class" | "class_name" | "type" | "shape") => class = atom_text(args),
            Some("position" | "pos" | "location") => position = vec3(args),
            Some("rotation" | "rot") => rotation = vec3(args),
            Some("scale" | "size") => scale = vec3(args),
            Some("material" | "color" | "colour") => material = atom_text(args),
            _ => b.diag(Severity::Info, "unknown entity field ignored", field.span()),
        }
    }
    let (Some(class), Some(position)) = (class, position) else {
        b.diag(
            Severity::Warning,
            "entity without class or position skipped",
            node.span(),
        );
        return;
    };
    let Ok(class) = PrimitiveClass::parse(&class) else {
        b.diag(
            Severity::Warning,
            "entity with empty class skipped",
            node.span(),
        );
        return;
    };
    let idx = b.construct(class, Vec3::ONE, node.span());
    let d = &mut b.drafts[idx];
    d.position = position;
    d.rotation = rotation.unwrap_or(Vec3::ZERO);
    d.scale = scale.unwrap_or(Vec3::ONE);
    if let Some(m) = material {
        d.material = Some(m.to_lowercase());
    }
}

fn camera(node: &Node, b: &mut Builder) {
    for field in node.args() {
        match field.head() {
            Some("position" | "pos" | "eye") => b.camera.position = vec3(field.args()),
            Some("target" | "look_at" | "lookat") => b.camera.target = vec3(field.args()),
            Some("fov") => b.camera.fov = numbers(field.args()).and_then(|v| v.first().copied()),
            _ => {}
        }
    }
}

pub(super) fn parse(text: &str) -> ParseOutcome {
    let mut b = Builder::default();
    let forms = read(text, &mut b);
    let mut scene_id = None;
    // iterative walk: entities may sit at any depth
    let mut todo: Vec<&Node> = forms.iter().rev().collect();
    while let Some(n) = todo.pop() {
        match n.head() {
            Some("entity" | "object") => entity(n, &mut b),
            Some("camera") => camera(n, &mut b),
            Some("id" | "scene_id") => scene_id = atom_text(n.args()),
            _ => {
                if let Node::List(items, _) = n {
                    todo.extend(items.iter().rev());
                }
            }
        }
    }
    let mut out = b.finish();
    if let (Some(scene), Some(id)) = (out.scene.as_mut(), scene_id) {
        scene.scene_id = id;
    }
    out
}

fn symbol(s: &str) -> String {
    let plain = !s.is_empty()
        && s.bytes()
            .all(|c| !c.is_ascii_whitespace() && !b"()[];\"".contains(&c))
        && expr::eval(s).is_err();
    if plain {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

fn v3(v: Vec3) -> String {
    format!("{} {} {}", num(v.x), num(v.y), num(v.z))
}

pub(super) fn serialize(scene: &Scene) -> String {
    let mut s = String::from("(scene\n");
    let id = if scene.scene_id.is_empty() {
        PREDICTED_SCENE_ID
    } else {
        scene.scene_id.as_str()
    };
    let _ = writeln!(s, "  (id {})", symbol(id));
    if let Some(c) = &scene.camera {
        let _ = writeln!(
            s,
            "  (camera (position {}) (target {}) (fov {}))",
            v3(c.position),
            v3(c.target),
            num(c.fov)
        );
    }
    for o in &scene.objects {
        let _ = writeln!(
            s,
            "  (entity (class {}) (position {}) (rotation {}) (scale {}) (material {}))",
            symbol(o.class_name.as_str()),
            v3(o.position),
            v3(o.rotation),
            v3(o.scale),
            symbol(&o.material)
        );
    }
    s.push_str(")\n");
    s
}
