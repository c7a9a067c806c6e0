use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::{PseudoGT, S3ftError, TaskTag, TrainingRecord};
use crate::canonical::{value_to_string, Layout};
use crate::codecs::SceneCodeLanguage;
use crate::geometry::{
    depth_order, object_aabb, scene_extent, spatial_relations, CameraFrame, RENDER_SIZE,
};
use crate::qa::templates::TEMPLATES;
use crate::qa::{build_reconstruction_prompt, generate_qa, Answer, PromptDomain};
use crate::scene::{Camera, SceneObject, Vec3};

const DECIMALS: usize = 3;

/// Offset from the scene centroid, as a fraction of the scene extent,
/// beyond which an object is described as off-center.
const LOCATION_MARGIN: f64 = 0.15;

fn label(o: &SceneObject) -> String {
    format!("{} {}", o.material, o.class_name.as_str())
}

fn vec(v: Vec3) -> Value {
    json!([v.x, v.y, v.z])
}

fn json_target(v: &Value) -> String {
    value_to_string(v, DECIMALS, Layout::Compact)
}

fn prompt(tag: TaskTag) -> String {
    TEMPLATES
        .dataset
        .prompts
        .get(tag.as_str())
        .cloned()
        .unwrap_or_default()
}

fn record(
    p: &PseudoGT,
    tag: TaskTag,
    suffix: Option<usize>,
    prompt: String,
    target: String,
) -> TrainingRecord {
    let record_id = match suffix {
        Some(k) => format!("{}_v{}_{}_{k}", p.scene_id, p.viewpoint, tag.as_str()),
        None => format!("{}_v{}_{}", p.scene_id, p.viewpoint, tag.as_str()),
    };
    TrainingRecord {
        record_id,
        scene_id: p.scene_id.clone(),
        viewpoint: p.viewpoint,
        image_ref: p.image_ref.clone(),
        task_tag: tag,
        prompt,
        target,
        view_invariant: tag.is_view_invariant(),
    }
}

fn codegen_prompt() -> String {
    build_reconstruction_prompt(SceneCodeLanguage::ThreeJs, &PromptDomain::default()).1
}

/// The nine structured-task records, every target computed from the parsed
/// pseudo-GT scene and the camera the image was rendered from.
pub fn derive_structured_tasks(
    p: &PseudoGT,
    camera: Option<&Camera>,
) -> Result<Vec<TrainingRecord>, S3ftError> {
    let camera = camera.ok_or_else(|| S3ftError::MissingCamera {
        scene_id: p.scene_id.clone(),
        viewpoint: p.viewpoint,
    })?;
    let objs = &p.parsed.objects;
    if objs.is_empty() {
        return Err(S3ftError::EmptyScene(p.scene_id.clone()));
    }
    let frame = CameraFrame::new(camera);

    let mut classes: BTreeMap<&str, usize> = BTreeMap::new();
    for o in objs {
        *classes.entry(o.class_name.as_str()).or_default() += 1;
    }
    let positions: Vec<Value> = objs
        .iter()
        .map(|o| json!({"class_name": o.class_name.as_str(), "material": o.material, "position": vec(o.position)}))
        .collect();
    let boxes3d: Vec<Value> = objs
        .iter()
        .map(|o| {
            let b = object_aabb(o);
            json!({"class_name": o.class_name.as_str(), "material": o.material, "min": vec(b.min), "max": vec(b.max)})
        })
        .collect();
    let size = RENDER_SIZE;
    let boxes2d: Vec<Value> = objs
        .iter()
        .filter_map(|o| {
            let r = frame
                .project_box(&object_aabb(o), size)?
                .map(|v| v.clamp(0.0, size));
            (r[2] > r[0] && r[3] > r[1]).then(
                || json!({"class_name": o.class_name.as_str(), "material": o.material, "bbox": r}),
            )
        })
        .collect();

    let mut relations = Vec::new();
    let mut edges = Vec::new();
    for i in 0..objs.len() {
        for j in (i + 1)..objs.len() {
            let rels = spatial_relations(&objs[i], &objs[j], camera);
            if rels.is_empty() {
                continue;
            }
            let names: Vec<&str> = rels.iter().map(|r| r.label()).collect();
            relations.push(
                json!({"subject": label(&objs[i]), "object": label(&objs[j]), "relations": names}),
            );
            edges.extend(
                names
                    .iter()
                    .map(|r| json!({"subject": i, "object": j, "relation": r})),
            );
        }
    }
    let order: Vec<String> = depth_order(&p.parsed, camera)
        .into_iter()
        .map(|i| label(&objs[i]))
        .collect();
    let nodes: Vec<Value> = objs
        .iter()
        .enumerate()
        .map(|(i, o)| {
            json!({"id": i, "class_name": o.class_name.as_str(), "material": o.material, "position": vec(o.position)})
        })
        .collect();

    let targets = [
        (TaskTag::ObjectCount, objs.len().to_string()),
        (TaskTag::Classes, json_target(&json!(classes))),
        (TaskTag::Positions3d, json_target(&Value::Array(positions))),
        (TaskTag::Bboxes3d, json_target(&Value::Array(boxes3d))),
        (TaskTag::Bboxes2d, json_target(&Value::Array(boxes2d))),
        (
            TaskTag::SpatialRelations,
            json_target(&Value::Array(relations)),
        ),
        (TaskTag::DepthOrder, json_target(&json!(order))),
        (
            TaskTag::SceneGraph,
            json_target(&json!({"objects": nodes, "relations": edges})),
        ),
        (TaskTag::CodeGeneration, p.code.clone()),
    ];
    Ok(targets
        .into_iter()
        .map(|(tag, target)| {
            let text = if tag == TaskTag::CodeGeneration {
                codegen_prompt()
            } else {
                prompt(tag)
            };
            record(p, tag, None, text, target)
        })
        .collect())
}

/// Coarse location of `position` in scene coordinates, relative to the
/// scene centroid: +Z is the front and -X the left of the scene.
pub fn coarse_location(position: Vec3, centroid: Vec3, extent: f64) -> &'static str {
    let t = LOCATION_MARGIN * extent;
    let d = position - centroid;
    let depth = if d.z > t {
        Some("front")
    } else if d.z < -t {
        Some("back")
    } else {
        None
    };
    let side = if d.x < -t {
        Some("left")
    } else if d.x > t {
        Some("right")
    } else {
        None
    };
    match (depth, side) {
        (Some("front"), Some("left")) => "at the front left",
        (Some("front"), Some(_)) => "at the front right",
        (Some(_), Some("left")) => "at the back left",
        (Some(_), Some(_)) => "at the back right",
        (Some("front"), None) => "at the front",
        (Some(_), None) => "at the back",
        (None, Some("left")) => "on the left",
        (None, Some(_)) => "on the right",
        (None, None) => "near the center",
    }
}

fn article(word: &str) -> &'static str {
    if word.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

fn description(p: &PseudoGT) -> Result<String, S3ftError> {
    let objs = &p.parsed.objects;
    let centroid = p
        .parsed
        .centroid()
        .ok_or_else(|| S3ftError::EmptyScene(p.scene_id.clone()))?;
    let extent = scene_extent(&p.parsed).map_err(|_| S3ftError::EmptyScene(p.scene_id.clone()))?;
    let parts: Vec<String> = objs
        .iter()
        .map(|o| {
            let l = label(o);
            format!(
                "{} {l} {}",
                article(&l),
                coarse_location(o.position, centroid, extent)
            )
        })
        .collect();
    let list = match parts.as_slice() {
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
        [] => unreachable!("checked non-empty"),
    };
    let noun = if objs.len() == 1 { "object" } else { "objects" };
    Ok(format!("The scene contains {} {noun}: {list}.", objs.len()))
}

fn answer_text(a: &Answer) -> String {
    match a {
        Answer::Point(v) => format!("({:.3}, {:.3}, {:.3})", v.x, v.y, v.z),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlSignals {
    pub records: Vec<TrainingRecord>,
    /// Substitution notes from QA generation.
    pub diagnostics: Vec<String>,
}

/// Eight QA records, one description paragraph and two paraphrased
/// code-generation requests.
pub fn generate_nl_signals(
    p: &PseudoGT,
    camera: &Camera,
    seed: u64,
) -> Result<NlSignals, S3ftError> {
    let mut scene = p.parsed.clone();
    scene.scene_id.clone_from(&p.scene_id);
    let qa = generate_qa(&scene, camera, seed)?;
    let mut records: Vec<TrainingRecord> = qa
        .items
        .iter()
        .enumerate()
        .map(|(k, item)| {
            record(
                p,
                TaskTag::Qa,
                Some(k),
                item.question.clone(),
                answer_text(&item.gt_answer),
            )
        })
        .collect();
    records.push(record(
        p,
        TaskTag::Description,
        None,
        prompt(TaskTag::Description),
        description(p)?,
    ));
    for (k, text) in TEMPLATES.dataset.codegen_paraphrases.iter().enumerate() {
        records.push(record(
            p,
            TaskTag::CodegenParaphrase,
            Some(k),
            text.clone(),
            p.code.clone(),
        ));
    }
    Ok(NlSignals {
        records,
        diagnostics: qa.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locations() {
        let c = Vec3::ZERO;
        assert_eq!(
            coarse_location(Vec3::new(-2.0, 0.0, 2.0), c, 4.0),
            "at the front left"
        );
        assert_eq!(
            coarse_location(Vec3::new(0.1, 0.0, -2.0), c, 4.0),
            "at the back"
        );
        assert_eq!(
            coarse_location(Vec3::new(0.1, 5.0, 0.0), c, 4.0),
            "near the center"
        );
        assert_eq!(
            coarse_location(Vec3::new(1.0, 0.0, 0.0), c, 4.0),
            "on the right"
        );
    }

    #[test]
    fn articles() {
        assert_eq!(article("orange cube"), "an");
        assert_eq!(article("red cube"), "a");
    }
}
