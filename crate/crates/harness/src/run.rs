//! Evaluation runs over (language x mode x scene) cells.

use std::path::Path;
use std::thread;
use std::time::{SystemTime, UNIX_EPOCH};

use scenecode_core::codecs::{self, SceneCodeLanguage};
use scenecode_core::metrics::{aggregate_cell, component_scores, SceneOutcome, ScoreConfig};
use scenecode_core::qa::{
    build_prompt, build_reconstruction_prompt, judge_response, qa_cell_accuracy, ExtractionRule,
    InferenceMode, PromptDomain, QAItem, QAJudgment,
};
use scenecode_core::scene::{Aabb, Scene};

use crate::client::{ChatRequest, ClientError, ModelClient};
use crate::config::{ModeSpec, RunConfig};
use crate::snapshot::{CellSnapshot, Counts, DetailRow, ItemStatus, Task, SNAPSHOT_FORMAT_VERSION};
use crate::split::{image_path, Split};
use crate::HarnessError;

/// A cell whose client failure rate exceeds this is flagged invalid and
/// ends the run.
pub const MAX_ERROR_RATE: f64 = 0.2;

const QA_SYSTEM: &str =
    "You are a helpful assistant that answers questions about the 3D scene in the image.";
const RECONSTRUCT_NL_COT: &str = "Before writing any code, briefly list the objects you see with their classes, colors and approximate 3D positions. Then write the complete code.";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub snapshots: Vec<CellSnapshot>,
    /// True when a cell crossed the failure threshold; later cells were not run.
    pub aborted: bool,
}

fn domain_for(scene: &Scene) -> PromptDomain {
    if scene.objects.iter().all(|o| o.class_name.is_primitive()) {
        return PromptDomain::default();
    }
    let bounds = scene
        .extent
        .or_else(|| {
            Aabb::from_points(
                scene
                    .objects
                    .iter()
                    .flat_map(|o| scenecode_core::geometry::object_aabb(o).corners()),
            )
        })
        .unwrap_or_else(|| Aabb::new(Default::default(), Default::default()));
    PromptDomain::Hypersim { bounds }
}

fn scope(language: SceneCodeLanguage, spec: ModeSpec) -> String {
    match spec {
        ModeSpec::Direct => language.as_str().to_string(),
        other => format!("{}__{}", language.as_str(), other.label()),
    }
}

/// The request a reconstruction cell sends for `scene`.
pub fn reconstruct_request(
    config: &RunConfig,
    split_dir: &Path,
    language: SceneCodeLanguage,
    spec: ModeSpec,
    scene: &Scene,
) -> ChatRequest {
    let (system, mut user) = build_reconstruction_prompt(language, &domain_for(scene));
    if spec == ModeSpec::NlCot {
        user = format!("{user}\n\n{RECONSTRUCT_NL_COT}");
    }
    ChatRequest {
        model_id: config.model_id.clone(),
        scope: scope(language, spec),
        item: scene.scene_id.clone(),
        image: Some(image_path(split_dir, &scene.scene_id, 0)),
        system,
        user,
        temperature: config.decoding.temperature,
        max_new_tokens: config.decoding.max_new_tokens.code,
    }
}

/// The request a QA cell sends for `item`.
pub fn qa_request(
    config: &RunConfig,
    split_dir: &Path,
    mode: InferenceMode,
    item: &QAItem,
) -> ChatRequest {
    ChatRequest {
        model_id: config.model_id.clone(),
        scope: mode.to_string(),
        item: item.question_id.clone(),
        image: Some(image_path(split_dir, &item.scene_id, 0)),
        system: QA_SYSTEM.to_string(),
        user: build_prompt(mode, &item.question),
        temperature: config.decoding.temperature,
        max_new_tokens: config.qa_budget(mode),
    }
}

/// Runs `f` over `items` on up to `workers` threads; results keep input order.
fn dispatch<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let chunk = items.len().div_ceil(workers.max(1)).max(1);
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn timestamp(client: &dyn ModelClient) -> Option<u64> {
    client.is_live().then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    })
}

fn counts(rows: &[DetailRow]) -> Counts {
    let mut c = Counts {
        items: rows.len(),
        ..Counts::default()
    };
    for r in rows {
        match r.status {
            ItemStatus::Ok => c.parsed += 1,
            ItemStatus::EmptyParse => c.empty_parse += 1,
            ItemStatus::Errored => c.errored += 1,
        }
        c.retries += r.retries;
    }
    c
}

fn too_many_errors(c: &Counts) -> bool {
    c.items > 0 && c.errored as f64 > MAX_ERROR_RATE * c.items as f64
}

fn score_scene(
    config: &RunConfig,
    score_config: &ScoreConfig,
    language: SceneCodeLanguage,
    gt: &Scene,
    reply: Result<crate::client::ChatResponse, ClientError>,
) -> (SceneOutcome, DetailRow) {
    let id = gt.scene_id.clone();
    let response = match reply {
        Ok(r) => r,
        Err(e) => {
            let outcome = SceneOutcome {
                scene_id: id.clone(),
                parsed_objects: 0,
                scores: None,
            };
            let row = DetailRow {
                item_id: id,
                status: ItemStatus::Errored,
                parsed_objects: None,
                scores: None,
                judgment: None,
                error: Some(e.to_string()),
                retries: 0,
            };
            return (outcome, row);
        }
    };
    let parsed = codecs::parse(language, &response.text);
    let camera = if config.fov_filter {
        gt.camera.as_ref()
    } else {
        None
    };
    let (scores, error) = match &parsed.scene {
        Some(pred) if !parsed.is_failure() => {
            match component_scores(pred, gt, camera, score_config) {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
        _ => (None, None),
    };
    let status = if parsed.is_failure() {
        ItemStatus::EmptyParse
    } else {
        ItemStatus::Ok
    };
    let outcome = SceneOutcome::new(id.clone(), &parsed, scores.clone());
    let row = DetailRow {
        item_id: id,
        status,
        parsed_objects: Some(parsed.parsed_object_count),
        scores,
        judgment: None,
        error,
        retries: response.retries,
    };
    (outcome, row)
}

/// One snapshot per (language, reconstruction mode). Only `direct` and
/// `nl_cot` entries of `config.modes` apply.
pub fn run_reconstruct_eval(
    config: &RunConfig,
    split: &Split,
    client: &dyn ModelClient,
) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let scenes = split.head(config.n_scenes)?;
    let specs: Vec<ModeSpec> = config
        .modes
        .iter()
        .copied()
        .filter(|m| matches!(m, ModeSpec::Direct | ModeSpec::NlCot))
        .collect();
    if specs.is_empty() {
        return Err(HarnessError::Invalid(
            "reconstruction needs a direct or nl_cot mode".into(),
        ));
    }
    let score_config = ScoreConfig::default();
    let mut snapshots = Vec::new();
    for &language in &config.languages {
        for &spec in &specs {
            let results = dispatch(scenes, config.concurrency, |gt| {
                let reply =
                    client.send(&reconstruct_request(config, &split.dir, language, spec, gt));
                score_scene(config, &score_config, language, gt, reply)
            });
            let (outcomes, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
            let counts = counts(&rows);
            let aggregate = aggregate_cell(&outcomes, config.seed)?;
            let invalid = too_many_errors(&counts);
            snapshots.push(CellSnapshot {
                format_version: SNAPSHOT_FORMAT_VERSION,
                toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp_unix: timestamp(client),
                model_id: config.model_id.clone(),
                task: Task::Reconstruct,
                language: Some(language),
                mode: match spec {
                    ModeSpec::NlCot => InferenceMode::NlCot,
                    _ => InferenceMode::Direct,
                }
                .to_string(),
                mode_label: spec.label(),
                valid: !invalid,
                counts,
                aggregate: Some(aggregate),
                qa: None,
                rows,
            });
            if invalid {
                return Ok(RunOutcome {
                    snapshots,
                    aborted: true,
                });
            }
        }
    }
    Ok(RunOutcome {
        snapshots,
        aborted: false,
    })
}

fn judge_item(
    item: &QAItem,
    mode: InferenceMode,
    reply: Result<crate::client::ChatResponse, ClientError>,
) -> DetailRow {
    match reply {
        Ok(r) => {
            let j = judge_response(item, &r.text, mode);
            let status = if j.rule == ExtractionRule::NoExtraction {
                ItemStatus::EmptyParse
            } else {
                ItemStatus::Ok
            };
            DetailRow {
                item_id: item.question_id.clone(),
                status,
                parsed_objects: None,
                scores: None,
                judgment: Some(j),
                error: None,
                retries: r.retries,
            }
        }
        Err(e) => DetailRow {
            item_id: item.question_id.clone(),
            status: ItemStatus::Errored,
            parsed_objects: None,
            scores: None,
            judgment: Some(QAJudgment {
                question_id: item.question_id.clone(),
                category: item.category,
                correct: false,
                extracted: String::new(),
                rule: ExtractionRule::NoExtraction,
            }),
            error: Some(e.to_string()),
            retries: 0,
        },
    }
}

/// One snapshot per configured mode over the questions of the first
/// `n_scenes` scenes. Errored questions count as incorrect.
pub fn run_qa_eval(
    config: &RunConfig,
    split: &Split,
    items: &[QAItem],
    client: &dyn ModelClient,
) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let scenes = split.head(config.n_scenes)?;
    let wanted: std::collections::BTreeSet<&str> =
        scenes.iter().map(|s| s.scene_id.as_str()).collect();
    let mut items: Vec<&QAItem> = items
        .iter()
        .filter(|i| wanted.contains(i.scene_id.as_str()))
        .collect();
    items.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    if items.is_empty() {
        return Err(HarnessError::Invalid(
            "no QA items for the selected scenes".into(),
        ));
    }
    let mut snapshots = Vec::new();
    for &spec in &config.modes {
        let mode = config.resolve(spec)?;
        let rows = dispatch(&items, config.concurrency, |item| {
            judge_item(
                item,
                mode,
                client.send(&qa_request(config, &split.dir, mode, item)),
            )
        });
        let judgments: Vec<QAJudgment> = rows.iter().filter_map(|r| r.judgment.clone()).collect();
        let counts = counts(&rows);
        let invalid = too_many_errors(&counts);
        snapshots.push(CellSnapshot {
            format_version: SNAPSHOT_FORMAT_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: timestamp(client),
            model_id: config.model_id.clone(),
            task: Task::Qa,
            language: match mode {
                InferenceMode::CodeCot(l) => Some(l),
                _ => None,
            },
            mode: mode.to_string(),
            mode_label: spec.label(),
            valid: !invalid,
            counts,
            aggregate: None,
            qa: Some(qa_cell_accuracy(&judgments)),
            rows,
        });
        if invalid {
            return Ok(RunOutcome {
                snapshots,
                aborted: true,
            });
        }
    }
    Ok(RunOutcome {
        snapshots,
        aborted: false,
    })
}
