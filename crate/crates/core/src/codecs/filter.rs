//! Structural screen applied to raw Three.js output before it is used as
//! pseudo ground truth.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{expr, lex, strip_code_fences};

pub const REQUIRED_TOKENS: [&str; 3] = ["THREE.Scene", "THREE.PerspectiveCamera", "THREE.Mesh"];
pub const MESH_COUNT_RANGE: (usize, usize) = (1, 50);
pub const POSITION_LIMIT: f64 = 30.0;

static MESH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"new\s+THREE\.Mesh\s*\(").expect("valid regex"));
static POSITION_SET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\.position\.set\s*\(").expect("valid regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MissingRequiredToken,
    ObjectCountOutOfRange,
    PositionOutOfRange,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::MissingRequiredToken => "missing_required_token",
            RejectReason::ObjectCountOutOfRange => "object_count_out_of_range",
            RejectReason::PositionOutOfRange => "position_out_of_range",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterOutcome {
    Accept,
    Reject(RejectReason),
}

impl FilterOutcome {
    pub fn is_accept(self) -> bool {
        self == FilterOutcome::Accept
    }
}

/// Checks, in order: required tokens, mesh-construction count in [1, 50],
/// and every evaluable `position.set(x, y, z)` within [-30, 30]. Setters
/// whose arguments are not plain arithmetic are not judged.
pub fn phase1_quality_filter(text: &str) -> FilterOutcome {
    let code = strip_code_fences(text);
    if REQUIRED_TOKENS.iter().any(|t| !code.contains(t)) {
        return FilterOutcome::Reject(RejectReason::MissingRequiredToken);
    }
    let meshes = MESH.find_iter(&code).count();
    if meshes < MESH_COUNT_RANGE.0 || meshes > MESH_COUNT_RANGE.1 {
        return FilterOutcome::Reject(RejectReason::ObjectCountOutOfRange);
    }
    for m in POSITION_SET.find_iter(&code) {
        let Some((inner, _)) = lex::balanced(&code[m.end()..]) else {
            continue;
        };
        let args = lex::split_args(inner);
        if args.len() != 3 {
            continue;
        }
        for a in &args {
            if let Ok(v) = expr::eval(a) {
                if v.abs() > POSITION_LIMIT {
                    return FilterOutcome::Reject(RejectReason::PositionOutOfRange);
                }
            }
        }
    }
    FilterOutcome::Accept
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "const scene = new THREE.Scene();\nconst camera = new THREE.PerspectiveCamera(60, 1, 0.1, 100);\n";

    fn mesh(x: f64) -> String {
        format!("const m = new THREE.Mesh(new THREE.BoxGeometry(1,1,1), mat);\nm.position.set({x}, 0.5, 0);\n")
    }

    #[test]
    fn accepts_minimal() {
        assert_eq!(
            phase1_quality_filter(&format!("{HEAD}{}", mesh(0.0))),
            FilterOutcome::Accept
        );
    }

    #[test]
    fn missing_camera() {
        let t = format!("const scene = new THREE.Scene();\n{}", mesh(0.0));
        assert_eq!(
            phase1_quality_filter(&t),
            FilterOutcome::Reject(RejectReason::MissingRequiredToken)
        );
    }

    #[test]
    fn mesh_count_bounds() {
        let many: String = (0..51).map(|_| mesh(0.0)).collect();
        assert_eq!(
            phase1_quality_filter(&format!("{HEAD}{many}")),
            FilterOutcome::Reject(RejectReason::ObjectCountOutOfRange)
        );
        let fifty: String = (0..50).map(|_| mesh(0.0)).collect();
        assert!(phase1_quality_filter(&format!("{HEAD}{fifty}")).is_accept());
        // THREE.Mesh present only as a material name
        let none = format!("{HEAD}const m = new THREE.MeshStandardMaterial();");
        assert_eq!(
            phase1_quality_filter(&none),
            FilterOutcome::Reject(RejectReason::ObjectCountOutOfRange)
        );
    }

    #[test]
    fn positions_bounds() {
        assert_eq!(
            phase1_quality_filter(&format!("{HEAD}{}", mesh(30.5))),
            FilterOutcome::Reject(RejectReason::PositionOutOfRange)
        );
        assert!(phase1_quality_filter(&format!("{HEAD}{}", mesh(-30.0))).is_accept());
        let symbolic =
            format!("{HEAD}const m = new THREE.Mesh(g, mat);\nm.position.set(i * 100, 0, 0);");
        assert!(phase1_quality_filter(&symbolic).is_accept());
    }
}
