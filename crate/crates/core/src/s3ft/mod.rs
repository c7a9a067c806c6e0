//! Self-supervised training data from a model's own scene code: curation of
//! raw outputs into pseudo ground truth, per-image task derivation, and
//! assembly into scene-grouped train/val splits.

mod curate;
mod dataset;
mod tasks;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qa::QaError;
use crate::scene::Scene;

pub use curate::{phase1_curate, CurationReport, RawOutput, PARSE_FAILURE};
pub use dataset::{
    build_dataset, records_to_jsonl, DatasetManifest, DatasetMode, DatasetSplit, ViewEntry,
    ViewpointTable, DEFAULT_SEED, VAL_FRACTION,
};
pub use tasks::{coarse_location, derive_structured_tasks, generate_nl_signals, NlSignals};

/// Records emitted per pseudo-GT in single-view mode.
pub const RECORDS_PER_PSEUDO_GT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum S3ftError {
    #[error("need at least {needed} pseudo-GTs, got {got}")]
    TooFewPseudoGts { needed: usize, got: usize },
    #[error("no camera for scene {scene_id} viewpoint {viewpoint}")]
    MissingCamera { scene_id: String, viewpoint: u32 },
    #[error("viewpoint table has no entry for scene {0}")]
    MissingViewpoints(String),
    #[error("pseudo-GT {0} has no objects")]
    EmptyScene(String),
    #[error(transparent)]
    Qa(#[from] QaError),
}

/// Accepted model output used as ground truth for its own image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoGT {
    pub scene_id: String,
    pub image_ref: String,
    pub code: String,
    pub parsed: Scene,
    pub viewpoint: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTag {
    ObjectCount,
    Classes,
    Positions3d,
    Bboxes3d,
    Bboxes2d,
    SpatialRelations,
    DepthOrder,
    SceneGraph,
    CodeGeneration,
    Qa,
    Description,
    CodegenParaphrase,
}

impl TaskTag {
    pub const STRUCTURED: [TaskTag; 9] = [
        TaskTag::ObjectCount,
        TaskTag::Classes,
        TaskTag::Positions3d,
        TaskTag::Bboxes3d,
        TaskTag::Bboxes2d,
        TaskTag::SpatialRelations,
        TaskTag::DepthOrder,
        TaskTag::SceneGraph,
        TaskTag::CodeGeneration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskTag::ObjectCount => "object_count",
            TaskTag::Classes => "classes",
            TaskTag::Positions3d => "positions_3d",
            TaskTag::Bboxes3d => "bboxes_3d",
            TaskTag::Bboxes2d => "bboxes_2d",
            TaskTag::SpatialRelations => "spatial_relations",
            TaskTag::DepthOrder => "depth_order",
            TaskTag::SceneGraph => "scene_graph",
            TaskTag::CodeGeneration => "code_generation",
            TaskTag::Qa => "qa",
            TaskTag::Description => "description",
            TaskTag::CodegenParaphrase => "codegen_paraphrase",
        }
    }

    /// Whether the target stays correct for any rendering of the scene.
    ///
    /// Targets expressed purely in scene coordinates (counts, classes,
    /// positions, world-frame boxes, the scene code itself) qualify, as do
    /// QA and the description. Targets measured through the image's camera
    /// (2D boxes, relations, depth order, the scene graph) do not.
    pub fn is_view_invariant(self) -> bool {
        !matches!(
            self,
            TaskTag::Bboxes2d
                | TaskTag::SpatialRelations
                | TaskTag::DepthOrder
                | TaskTag::SceneGraph
        )
    }

    pub fn is_structured(self) -> bool {
        !matches!(
            self,
            TaskTag::Qa | TaskTag::Description | TaskTag::CodegenParaphrase
        )
    }
}

impl fmt::Display for TaskTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One supervised example. Replicas of a view-invariant record keep its
/// `record_id` and differ only in `viewpoint` and `image_ref`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub record_id: String,
    pub scene_id: String,
    pub viewpoint: u32,
    pub image_ref: String,
    pub task_tag: TaskTag,
    pub prompt: String,
    pub target: String,
    pub view_invariant: bool,
}

impl TrainingRecord {
    pub fn is_well_formed(&self) -> bool {
        !self.target.is_empty()
            && self.view_invariant == self.task_tag.is_view_invariant()
            && (!self.task_tag.is_structured()
                || self.task_tag == TaskTag::CodeGeneration
                || serde_json::from_str::<serde_json::Value>(&self.target).is_ok())
    }
}
