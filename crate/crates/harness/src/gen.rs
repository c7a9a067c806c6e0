use std::collections::BTreeMap;
use std::path::PathBuf;

use scenecode_core::qa::{generate_qa, templates_version};
use scenecode_core::scenegen::{camera_poses, frontal_camera, generate_scene, GenConfig};

use crate::split::{Split, SplitManifest, SPLIT_FORMAT_VERSION};
use crate::HarnessError;

/// Which scenes to generate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenPlan {
    pub tiers: Vec<u8>,
    pub seeds: std::ops::Range<u64>,
    pub qa_seed: u64,
}

/// Scenes, their ring cameras and eight questions each. The frontal camera
/// is stored on each scene.
pub fn generate_split(
    dir: impl Into<PathBuf>,
    plan: &GenPlan,
) -> Result<(Split, SplitManifest), HarnessError> {
    let mut scenes = Vec::new();
    let mut cameras = BTreeMap::new();
    let mut qa = Vec::new();
    for &tier in &plan.tiers {
        for seed in plan.seeds.clone() {
            let config = GenConfig::new(tier, seed);
            let mut scene = generate_scene(&config)?;
            let frontal = frontal_camera(&scene)?;
            scene.camera = Some(frontal);
            qa.extend(generate_qa(&scene, &frontal, plan.qa_seed)?.items);
            cameras.insert(scene.scene_id.clone(), camera_poses(&scene, &config)?);
            scenes.push(scene);
        }
    }
    scenes.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    qa.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    let manifest = SplitManifest {
        format_version: SPLIT_FORMAT_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        templates_version: templates_version(),
        scenes: scenes.len(),
        qa_items: qa.len(),
        qa_seed: plan.qa_seed,
    };
    Ok((
        Split {
            dir: dir.into(),
            scenes,
            cameras,
            qa,
        },
        manifest,
    ))
}
