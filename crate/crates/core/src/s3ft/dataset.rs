use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tasks::{derive_structured_tasks, generate_nl_signals};
use super::{PseudoGT, S3ftError, TrainingRecord};
use crate::qa::templates_version;
use crate::scene::Camera;

pub const DEFAULT_SEED: u64 = 42;
pub const VAL_FRACTION: f64 = 0.1;
const MIN_PSEUDO_GTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetMode {
    SingleView,
    CrossViewpoint,
}

impl DatasetMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetMode::SingleView => "single_view",
            DatasetMode::CrossViewpoint => "cross_viewpoint",
        }
    }
}

impl fmt::Display for DatasetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single_view" => Ok(DatasetMode::SingleView),
            "cross_viewpoint" => Ok(DatasetMode::CrossViewpoint),
            other => Err(format!("unknown dataset mode {other:?}")),
        }
    }
}

/// A rendered view of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub viewpoint: u32,
    pub image_ref: String,
    pub camera: Camera,
}

/// Rendered views per scene id.
pub type ViewpointTable = BTreeMap<String, Vec<ViewEntry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub mode: DatasetMode,
    pub seed: u64,
    pub train: Vec<TrainingRecord>,
    pub val: Vec<TrainingRecord>,
    /// QA substitution notes gathered while deriving records.
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub toolkit_version: String,
    pub templates_version: u32,
    pub mode: DatasetMode,
    pub seed: u64,
    pub pseudo_gts: usize,
    pub pass_rate: Option<f64>,
    pub train_records: usize,
    pub val_records: usize,
    pub train_scenes: usize,
    pub val_scenes: usize,
    pub task_counts: BTreeMap<String, usize>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scenes(records: &[TrainingRecord]) -> BTreeSet<&str> {
        records.iter().map(|r| r.scene_id.as_str()).collect()
    }

    pub fn manifest(&self, pseudo_gts: usize, pass_rate: Option<f64>) -> DatasetManifest {
        let mut task_counts = BTreeMap::new();
        for r in self.train.iter().chain(&self.val) {
            *task_counts
                .entry(r.task_tag.as_str().to_string())
                .or_default() += 1;
        }
        DatasetManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            templates_version: templates_version(),
            mode: self.mode,
            seed: self.seed,
            pseudo_gts,
            pass_rate,
            train_records: self.train.len(),
            val_records: self.val.len(),
            train_scenes: Self::scenes(&self.train).len(),
            val_scenes: Self::scenes(&self.val).len(),
            task_counts,
        }
    }
}

pub fn records_to_jsonl(records: &[TrainingRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

fn camera_for<'a>(p: &'a PseudoGT, table: &'a ViewpointTable) -> Option<&'a Camera> {
    table
        .get(&p.scene_id)
        .and_then(|views| views.iter().find(|v| v.viewpoint == p.viewpoint))
        .map(|v| &v.camera)
        .or(p.parsed.camera.as_ref())
}

type Derived = Result<(Vec<TrainingRecord>, Vec<String>), S3ftError>;

fn derive_one(p: &PseudoGT, table: &ViewpointTable, seed: u64) -> Derived {
    let camera = camera_for(p, table);
    let mut records = derive_structured_tasks(p, camera)?;
    let camera = camera.expect("checked by derive_structured_tasks");
    let nl = generate_nl_signals(p, camera, seed)?;
    records.extend(nl.records);
    Ok((records, nl.diagnostics))
}

fn derive_all(pgts: &[&PseudoGT], table: &ViewpointTable, seed: u64) -> Vec<Derived> {
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(pgts.len().max(1));
    let chunk = pgts.len().div_ceil(workers).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = pgts
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|p| derive_one(p, table, seed))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("derivation worker panicked"))
            .collect()
    })
}

/// Derives every record, replicates view-invariant ones onto the other
/// rendered viewpoints in cross-viewpoint mode, and splits 90/10 by scene.
/// Output depends only on the inputs and `seed`.
pub fn build_dataset(
    pseudo_gts: &[PseudoGT],
    mode: DatasetMode,
    table: &ViewpointTable,
    seed: u64,
) -> Result<DatasetSplit, S3ftError> {
    if pseudo_gts.len() < MIN_PSEUDO_GTS {
        return Err(S3ftError::TooFewPseudoGts {
            needed: MIN_PSEUDO_GTS,
            got: pseudo_gts.len(),
        });
    }
    let mut ordered: Vec<&PseudoGT> = pseudo_gts.iter().collect();
    ordered.sort_by(|a, b| {
        (&a.scene_id, a.viewpoint, &a.image_ref).cmp(&(&b.scene_id, b.viewpoint, &b.image_ref))
    });
    if mode == DatasetMode::CrossViewpoint {
        if let Some(p) = ordered.iter().find(|p| !table.contains_key(&p.scene_id)) {
            return Err(S3ftError::MissingViewpoints(p.scene_id.clone()));
        }
    }

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (p, derived) in ordered.iter().zip(derive_all(&ordered, table, seed)) {
        let (own, notes) = derived?;
        diagnostics.extend(
            notes
                .into_iter()
                .map(|n| format!("{} v{}: {n}", p.scene_id, p.viewpoint)),
        );
        let replicas: Vec<TrainingRecord> = match mode {
            DatasetMode::SingleView => Vec::new(),
            DatasetMode::CrossViewpoint => table[&p.scene_id]
                .iter()
                .filter(|v| v.viewpoint != p.viewpoint)
                .flat_map(|v| {
                    own.iter()
                        .filter(|r| r.view_invariant)
                        .map(move |r| TrainingRecord {
                            viewpoint: v.viewpoint,
                            image_ref: v.image_ref.clone(),
                            ..r.clone()
                        })
                })
                .collect(),
        };
        records.extend(own);
        records.extend(replicas);
    }

    let mut scenes: Vec<&str> = ordered.iter().map(|p| p.scene_id.as_str()).collect();
    scenes.dedup();
    scenes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = if scenes.len() < 2 {
        0
    } else {
        ((scenes.len() as f64 * VAL_FRACTION).round() as usize).max(1)
    };
    let val_scenes: BTreeSet<String> = scenes[..n_val].iter().map(|s| s.to_string()).collect();
    let (val, train) = records
        .into_iter()
        .partition(|r| val_scenes.contains(&r.scene_id));
    Ok(DatasetSplit {
        mode,
        seed,
        train,
        val,
        diagnostics,
    })
}
