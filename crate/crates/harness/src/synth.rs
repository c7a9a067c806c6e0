//! Synthetic replay fixtures: responses written straight into a store
//! under the exact keys an evaluation run will look up.

use scenecode_core::codecs::{serialize, SceneCodeLanguage};
use scenecode_core::qa::{relation_phrase, Answer, InferenceMode, QAItem, Query};
use scenecode_core::scene::Scene;

use crate::config::{ModeSpec, RunConfig};
use crate::run::{qa_request, reconstruct_request};
use crate::split::Split;
use crate::store::ReplayStore;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    /// The ground truth, written the way a perfect model would.
    Oracle,
    /// Plausible but wrong: truncated code, or a wrong answer.
    Corrupted,
    Empty,
    /// Nothing recorded, so the replay client fails for this item.
    Missing,
}

/// Response kind per item index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    AllOracle,
    /// Out of every ten items: six oracle, two corrupted, one empty, one missing.
    Mixed,
}

impl Policy {
    pub fn pick(self, index: usize) -> Response {
        match (self, index % 10) {
            (Policy::AllOracle, _) => Response::Oracle,
            (Policy::Mixed, 0..=5) => Response::Oracle,
            (Policy::Mixed, 6 | 7) => Response::Corrupted,
            (Policy::Mixed, 8) => Response::Empty,
            (Policy::Mixed, _) => Response::Missing,
        }
    }
}

fn truncate_lines(text: &str, keep: f64) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let n = ((lines.len() as f64) * keep).ceil() as usize;
    lines[..n.min(lines.len())].join("\n")
}

fn reconstruction_text(
    language: SceneCodeLanguage,
    scene: &Scene,
    kind: Response,
) -> Result<String, HarnessError> {
    let code = serialize(language, scene).map_err(|e| HarnessError::Invalid(e.to_string()))?;
    Ok(match kind {
        Response::Oracle => format!("```\n{code}\n```\n"),
        Response::Corrupted => truncate_lines(&code, 0.6),
        Response::Empty | Response::Missing => String::new(),
    })
}

fn wrong_answer(item: &QAItem) -> String {
    match (&item.gt_answer, &item.query) {
        (Answer::Count(n), _) => (n + 1).to_string(),
        (Answer::YesNo(b), _) => if *b { "no" } else { "yes" }.to_string(),
        (Answer::Phrase(_), Query::Relation { relation, .. }) => {
            relation_phrase(relation.inverse()).to_string()
        }
        (Answer::Phrase(_), Query::Compare { first, second, .. }) => {
            // the other object of the pair
            if item.gt_answer.to_string() == *first {
                second.clone()
            } else {
                first.clone()
            }
        }
        (Answer::Phrase(p), _) => format!("not {p}"),
        (Answer::Point(p), _) => format!("({:.3}, {:.3}, {:.3})", p.x + 0.2, p.y, p.z),
    }
}

fn answer_text(item: &QAItem) -> String {
    match &item.gt_answer {
        Answer::Point(p) => format!("({:.3}, {:.3}, {:.3})", p.x, p.y, p.z),
        other => other.to_string(),
    }
}

fn qa_text(item: &QAItem, mode: InferenceMode, scene: Option<&Scene>, kind: Response) -> String {
    let answer = match kind {
        Response::Oracle => answer_text(item),
        Response::Corrupted => wrong_answer(item),
        Response::Empty | Response::Missing => return String::new(),
    };
    match mode {
        InferenceMode::Direct => answer,
        InferenceMode::NlCot => {
            format!("I look at each object in turn and compare them.\nFinal answer: {answer}")
        }
        InferenceMode::CodeCot(l) => {
            let code = scene.and_then(|s| serialize(l, s).ok()).unwrap_or_default();
            format!("```\n{code}\n```\nUsing the reconstruction above.\nFinal answer: {answer}")
        }
    }
}

/// Records reconstruction responses for every configured language and
/// reconstruction mode; returns how many were written.
pub fn synthesize_reconstruct(
    store: &ReplayStore,
    config: &RunConfig,
    split: &Split,
    policy: Policy,
) -> Result<usize, HarnessError> {
    let scenes = split.head(config.n_scenes)?;
    let mut written = 0;
    for &language in &config.languages {
        for &spec in config
            .modes
            .iter()
            .filter(|m| matches!(m, ModeSpec::Direct | ModeSpec::NlCot))
        {
            for (k, scene) in scenes.iter().enumerate() {
                let kind = policy.pick(k);
                if kind == Response::Missing {
                    continue;
                }
                let request = reconstruct_request(config, &split.dir, language, spec, scene);
                store.record(
                    &request.replay_key(),
                    &reconstruction_text(language, scene, kind)?,
                    0,
                )?;
                written += 1;
            }
        }
    }
    Ok(written)
}

/// Records QA responses for each mode in `modes`; returns how many were
/// written.
pub fn synthesize_qa(
    store: &ReplayStore,
    config: &RunConfig,
    split: &Split,
    modes: &[InferenceMode],
    policy: Policy,
) -> Result<usize, HarnessError> {
    let scenes = split.head(config.n_scenes)?;
    let mut written = 0;
    for &mode in modes {
        for (si, scene) in scenes.iter().enumerate() {
            let items = split.qa.iter().filter(|i| i.scene_id == scene.scene_id);
            for (qi, item) in items.enumerate() {
                let kind = policy.pick(si + qi);
                if kind == Response::Missing {
                    continue;
                }
                let request = qa_request(config, &split.dir, mode, item);
                store.record(
                    &request.replay_key(),
                    &qa_text(item, mode, Some(scene), kind),
                    0,
                )?;
                written += 1;
            }
        }
    }
    Ok(written)
}
