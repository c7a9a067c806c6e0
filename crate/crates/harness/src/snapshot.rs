use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scenecode_core::canonical::{self, Layout};
use scenecode_core::codecs::SceneCodeLanguage;
use scenecode_core::metrics::{CellAggregate, ComponentScores};
use scenecode_core::qa::{QAJudgment, QaAccuracy};

use crate::store::path_component;
use crate::HarnessError;

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;
const DECIMALS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Reconstruct,
    Qa,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Reconstruct => "reconstruct",
            Task::Qa => "qa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    /// A response was obtained and yielded something to score.
    Ok,
    /// A response was obtained but nothing could be extracted from it.
    EmptyParse,
    /// The client failed; counted as a parse failure.
    Errored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    pub item_id: String,
    pub status: ItemStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parsed_objects: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scores: Option<ComponentScores>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub judgment: Option<QAJudgment>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub retries: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub items: usize,
    pub parsed: usize,
    pub empty_parse: usize,
    pub errored: usize,
    pub retries: u32,
}

/// Results of one (model, language, mode) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSnapshot {
    pub format_version: u32,
    pub toolkit_version: String,
    /// Wall-clock seconds for live runs; absent for replay so that replays
    /// are byte-identical.
    pub timestamp_unix: Option<u64>,
    pub model_id: String,
    pub task: Task,
    pub language: Option<SceneCodeLanguage>,
    /// Inference mode actually run, e.g. `code_cot_canonical_json`.
    pub mode: String,
    /// Requested mode, e.g. `best_cc`.
    pub mode_label: String,
    /// False when too many client calls failed for the numbers to stand.
    pub valid: bool,
    pub counts: Counts,
    pub aggregate: Option<CellAggregate>,
    pub qa: Option<QaAccuracy>,
    pub rows: Vec<DetailRow>,
}

impl CellSnapshot {
    /// File stem unique per (task, language, mode) within a model.
    pub fn file_stem(&self) -> String {
        match (self.task, self.language) {
            (Task::Reconstruct, Some(l)) => format!("{}__{}", l.as_str(), self.mode_label),
            _ => self.mode_label.clone(),
        }
    }

    pub fn relative_path(&self) -> PathBuf {
        PathBuf::from(path_component(&self.model_id))
            .join(self.task.as_str())
            .join(format!("{}.json", path_component(&self.file_stem())))
    }

    pub fn to_json(&self) -> String {
        canonical::to_string(self, DECIMALS, Layout::Pretty).expect("snapshots serialize") + "\n"
    }

    pub fn save(&self, root: &Path) -> Result<PathBuf, HarnessError> {
        let path = root.join(self.relative_path());
        let dir = path.parent().expect("snapshot paths have a parent");
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        fs::write(&path, self.to_json()).map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }

    /// Every snapshot below `root`, sorted by path.
    pub fn load_all(root: &Path) -> Result<Vec<CellSnapshot>, HarnessError> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir).map_err(|e| HarnessError::io(&dir, e))? {
                let path = entry.map_err(|e| HarnessError::io(&dir, e))?.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path.extension().is_some_and(|e| e == "json") {
                    files.push(path);
                }
            }
        }
        files.sort();
        let mut out = Vec::new();
        for f in files {
            let text = fs::read_to_string(&f).map_err(|e| HarnessError::io(&f, e))?;
            // other JSON files (reports, manifests) may share the directory
            if let Ok(s) = serde_json::from_str::<CellSnapshot>(&text) {
                out.push(s);
            }
        }
        Ok(out)
    }
}
