use std::collections::BTreeMap;

use scenecode_core::codecs::SceneCodeLanguage;

use crate::snapshot::{CellSnapshot, Task};
use crate::HarnessError;

/// Best and worst language by score. Ties go to the language listed first
/// in [`SceneCodeLanguage::ALL`].
pub fn best_worst_from_scores(
    scores: &BTreeMap<SceneCodeLanguage, f64>,
    subset: &[SceneCodeLanguage],
) -> Result<(SceneCodeLanguage, SceneCodeLanguage), HarnessError> {
    let mut ordered = Vec::new();
    for lang in SceneCodeLanguage::ALL
        .into_iter()
        .filter(|l| subset.contains(l))
    {
        let s = scores
            .get(&lang)
            .ok_or_else(|| HarnessError::MissingCell(format!("no score for {lang}")))?;
        ordered.push((lang, *s));
    }
    let first = *ordered
        .first()
        .ok_or_else(|| HarnessError::Invalid("empty language subset".into()))?;
    let (mut best, mut worst) = (first, first);
    for &(l, s) in &ordered[1..] {
        if s > best.1 {
            best = (l, s);
        }
        if s < worst.1 {
            worst = (l, s);
        }
    }
    Ok((best.0, worst.0))
}

/// Direct-mode reconstruction scores of one model, by language.
pub fn reconstruct_scores(
    snapshots: &[CellSnapshot],
    model_id: &str,
) -> BTreeMap<SceneCodeLanguage, f64> {
    snapshots
        .iter()
        .filter(|s| {
            s.task == Task::Reconstruct
                && s.model_id == model_id
                && s.mode_label == "direct"
                && s.valid
        })
        .filter_map(|s| Some((s.language?, s.aggregate.as_ref()?.reconstruct_score)))
        .collect()
}

pub fn select_best_worst_language(
    snapshots: &[CellSnapshot],
    model_id: &str,
    subset: &[SceneCodeLanguage],
) -> Result<(SceneCodeLanguage, SceneCodeLanguage), HarnessError> {
    best_worst_from_scores(&reconstruct_scores(snapshots, model_id), subset)
        .map_err(|e| HarnessError::MissingCell(format!("{model_id}: {e}")))
}
