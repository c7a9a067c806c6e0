//! A scene split on disk, as written by `scenecode gen`:
//!
//! ```text
//! <split>/manifest.json
//! <split>/scenes/<scene_id>.json     canonical JSON, frontal camera included
//! <split>/cameras.json               scene_id -> [camera per viewpoint]
//! <split>/qa.jsonl                   eight questions per scene
//! <split>/images/<scene_id>_v<k>.png rendered externally
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scenecode_core::codecs::{self, SceneCodeLanguage};
use scenecode_core::qa::{items_from_jsonl, items_to_jsonl, QAItem};
use scenecode_core::scene::{Camera, Scene};

use crate::HarnessError;

pub const SPLIT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub format_version: u32,
    pub toolkit_version: String,
    pub templates_version: u32,
    pub scenes: usize,
    pub qa_items: usize,
    pub qa_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub dir: PathBuf,
    /// Sorted by scene id.
    pub scenes: Vec<Scene>,
    pub cameras: BTreeMap<String, Vec<Camera>>,
    pub qa: Vec<QAItem>,
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn image_path(dir: &Path, scene_id: &str, viewpoint: u32) -> PathBuf {
    dir.join("images")
        .join(format!("{scene_id}_v{viewpoint}.png"))
}

impl Split {
    pub fn load(dir: impl Into<PathBuf>) -> Result<Split, HarnessError> {
        let dir = dir.into();
        let scene_dir = dir.join("scenes");
        let mut files: Vec<PathBuf> = fs::read_dir(&scene_dir)
            .map_err(|e| HarnessError::io(&scene_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut scenes = Vec::with_capacity(files.len());
        for f in files {
            let outcome = codecs::parse(SceneCodeLanguage::CanonicalJson, &read(&f)?);
            let scene = outcome.scene.ok_or_else(|| {
                HarnessError::Invalid(format!("{} does not hold a scene", f.display()))
            })?;
            scenes.push(scene);
        }
        scenes.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
        let cam_path = dir.join("cameras.json");
        let cameras = match fs::read_to_string(&cam_path) {
            Ok(t) => serde_json::from_str(&t)
                .map_err(|e| HarnessError::Invalid(format!("{}: {e}", cam_path.display())))?,
            Err(_) => BTreeMap::new(),
        };
        let qa_path = dir.join("qa.jsonl");
        let qa = match fs::read_to_string(&qa_path) {
            Ok(t) => items_from_jsonl(&t)
                .map_err(|e| HarnessError::Invalid(format!("{}: {e}", qa_path.display())))?,
            Err(_) => Vec::new(),
        };
        Ok(Split {
            dir,
            scenes,
            cameras,
            qa,
        })
    }

    pub fn save(&self, manifest: &SplitManifest) -> Result<(), HarnessError> {
        for s in &self.scenes {
            let text = codecs::serialize(SceneCodeLanguage::CanonicalJson, s)
                .map_err(|e| HarnessError::Invalid(format!("{}: {e}", s.scene_id)))?;
            write(
                &self.dir.join("scenes").join(format!("{}.json", s.scene_id)),
                &text,
            )?;
        }
        write(
            &self.dir.join("cameras.json"),
            &(serde_json::to_string_pretty(&self.cameras)? + "\n"),
        )?;
        write(&self.dir.join("qa.jsonl"), &items_to_jsonl(&self.qa))?;
        write(
            &self.dir.join("manifest.json"),
            &(serde_json::to_string_pretty(manifest)? + "\n"),
        )
    }

    /// The first `n` scenes by id, or all of them.
    pub fn head(&self, n: Option<usize>) -> Result<&[Scene], HarnessError> {
        match n {
            Some(n) if n > self.scenes.len() => Err(HarnessError::Invalid(format!(
                "n_scenes {n} exceeds the split size {}",
                self.scenes.len()
            ))),
            Some(n) => Ok(&self.scenes[..n]),
            None => Ok(&self.scenes),
        }
    }
}
