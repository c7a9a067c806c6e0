use serde::{Deserialize, Serialize};

use super::matching::hungarian_match;
use super::stats::{bootstrap_ci, mean, Interval, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
use super::synonyms::{class_match, SynonymTable};
use super::MetricsError;
use crate::codecs::ParseOutcome;
use crate::geometry::{in_frustum, object_aabb, scene_extent};
use crate::scene::{Camera, Scene};

/// When a Hungarian pair counts as a true positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchAcceptance {
    /// Center distance at most `threshold` times the ground-truth extent.
    Distance { threshold: f64 },
    /// Axis-aligned box IoU of at least `threshold`.
    Iou { threshold: f64 },
}

impl Default for MatchAcceptance {
    fn default() -> Self {
        MatchAcceptance::Distance { threshold: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub match_acceptance: MatchAcceptance,
    pub synonym_table: SynonymTable,
    pub require_class_for_tp: bool,
}

impl ScoreConfig {
    /// Class-matched F1 at box IoU 0.5.
    pub fn iou_class_matched() -> Self {
        ScoreConfig {
            match_acceptance: MatchAcceptance::Iou { threshold: 0.5 },
            require_class_for_tp: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub class_accuracy: f64,
    pub position_fidelity: f64,
    pub scale_fidelity: f64,
    /// RMS pair distance over the ground-truth extent, before clipping.
    /// `None` when nothing was matched.
    pub d_pos: Option<f64>,
    /// Mean per-pair scale RMS error, before clipping.
    pub d_scale: Option<f64>,
    pub matched_count: usize,
    pub true_positives: usize,
    pub pred_count: usize,
    pub gt_count: usize,
}

/// `max(0, 1 - min(d, 1))`; NaN maps to 0.
pub fn fidelity(d: f64) -> f64 {
    if d.is_nan() {
        return 0.0;
    }
    (1.0 - d.min(1.0)).max(0.0)
}

/// Ground truth restricted to objects whose center lies inside the view.
pub fn fov_filter(gt: &Scene, camera: &Camera) -> Scene {
    let mut out = gt.clone();
    out.objects.retain(|o| in_frustum(camera, o.position));
    out
}

/// Scores one prediction against ground truth. With a camera, ground truth is
/// first restricted to the camera's view.
pub fn component_scores(
    pred: &Scene,
    gt: &Scene,
    camera: Option<&Camera>,
    config: &ScoreConfig,
) -> Result<ComponentScores, MetricsError> {
    let filtered;
    let gt = match camera {
        Some(c) => {
            filtered = fov_filter(gt, c);
            &filtered
        }
        None => gt,
    };
    if gt.objects.is_empty() {
        return Err(MetricsError::NoGroundTruth);
    }
    let extent = scene_extent(gt).map_err(|_| MetricsError::NoGroundTruth)?;
    let pred_pos: Vec<_> = pred.centers().collect();
    let gt_pos: Vec<_> = gt.centers().collect();
    let m = hungarian_match(&pred_pos, &gt_pos);

    let mut tp = 0usize;
    let mut class_hits = 0usize;
    let mut sq_dist = 0.0;
    let mut scale_err = 0.0;
    for pair in &m.pairs {
        let p = &pred.objects[pair.pred_index];
        let g = &gt.objects[pair.gt_index];
        let same_class = class_match(
            p.class_name.as_str(),
            g.class_name.as_str(),
            &config.synonym_table,
        );
        class_hits += usize::from(same_class);
        let accepted = match config.match_acceptance {
            MatchAcceptance::Distance { threshold } => pair.distance <= threshold * extent,
            MatchAcceptance::Iou { threshold } => object_aabb(p).iou(&object_aabb(g)) >= threshold,
        };
        if accepted && (same_class || !config.require_class_for_tp) {
            tp += 1;
        }
        sq_dist += pair.distance * pair.distance;
        let ds = p.scale - g.scale;
        scale_err += (ds.dot(ds) / 3.0).sqrt();
    }

    let n_pairs = m.pairs.len();
    let precision = if pred.objects.is_empty() {
        0.0
    } else {
        tp as f64 / pred.objects.len() as f64
    };
    let recall = tp as f64 / gt.objects.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let (d_pos, d_scale) = if n_pairs > 0 {
        (
            Some((sq_dist / n_pairs as f64).sqrt() / extent),
            Some(scale_err / n_pairs as f64),
        )
    } else {
        (None, None)
    };
    Ok(ComponentScores {
        f1,
        precision,
        recall,
        class_accuracy: if n_pairs > 0 {
            class_hits as f64 / n_pairs as f64
        } else {
            0.0
        },
        position_fidelity: d_pos.map_or(0.0, fidelity),
        scale_fidelity: d_scale.map_or(0.0, fidelity),
        d_pos,
        d_scale,
        matched_count: n_pairs,
        true_positives: tp,
        pred_count: pred.objects.len(),
        gt_count: gt.objects.len(),
    })
}

/// Mean of parse rate and the four cell means.
pub fn reconstruct_score(
    parse_rate: f64,
    f1: f64,
    class_accuracy: f64,
    position_fidelity: f64,
    scale_fidelity: f64,
) -> Result<f64, MetricsError> {
    let parts = [
        ("parse_rate", parse_rate),
        ("f1", f1),
        ("class_accuracy", class_accuracy),
        ("position_fidelity", position_fidelity),
        ("scale_fidelity", scale_fidelity),
    ];
    for (what, value) in parts {
        if !(0.0..=1.0).contains(&value) {
            return Err(MetricsError::OutOfRange { what, value });
        }
    }
    Ok(parts.iter().map(|p| p.1).sum::<f64>() / 5.0)
}

/// One scene's contribution to a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneOutcome {
    pub scene_id: String,
    pub parsed_objects: usize,
    pub scores: Option<ComponentScores>,
}

impl SceneOutcome {
    pub fn new(
        scene_id: impl Into<String>,
        parse: &ParseOutcome,
        scores: Option<ComponentScores>,
    ) -> Self {
        SceneOutcome {
            scene_id: scene_id.into(),
            parsed_objects: parse.parsed_object_count,
            scores,
        }
    }

    pub fn parsed(&self) -> bool {
        self.parsed_objects > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellIntervals {
    pub parse_rate: Option<Interval>,
    pub f1: Option<Interval>,
    pub class_accuracy: Option<Interval>,
    pub position_fidelity: Option<Interval>,
    pub scale_fidelity: Option<Interval>,
}

/// Fidelity means with unparsed or unmatched scenes counted as zero, kept so
/// the alternative convention can be read off any cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroFilledMeans {
    pub class_accuracy: f64,
    pub position_fidelity: f64,
    pub scale_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub n_scenes: usize,
    /// Scenes with at least one matched pair; the fidelity means run over these.
    pub n_matched_scenes: usize,
    pub parse_rate: f64,
    pub f1: f64,
    pub class_accuracy: f64,
    pub position_fidelity: f64,
    pub scale_fidelity: f64,
    pub reconstruct_score: f64,
    pub ci95: CellIntervals,
    pub zero_filled: ZeroFilledMeans,
}

fn ci(values: &[f64], seed: u64) -> Option<Interval> {
    bootstrap_ci(values, DEFAULT_RESAMPLES, DEFAULT_LEVEL, seed).ok()
}

/// Folds per-scene results in scene-id order, so the result does not depend
/// on the order scenes finished in.
pub fn aggregate_cell(outcomes: &[SceneOutcome], seed: u64) -> Result<CellAggregate, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::TooFewValues { needed: 1, got: 0 });
    }
    let mut sorted: Vec<&SceneOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));

    let parsed: Vec<f64> = sorted
        .iter()
        .map(|o| if o.parsed() { 1.0 } else { 0.0 })
        .collect();
    let f1: Vec<f64> = sorted
        .iter()
        .map(|o| {
            if o.parsed() {
                o.scores.as_ref().map_or(0.0, |s| s.f1)
            } else {
                0.0
            }
        })
        .collect();
    let matched: Vec<&ComponentScores> = sorted
        .iter()
        .filter(|o| o.parsed())
        .filter_map(|o| o.scores.as_ref())
        .filter(|s| s.matched_count > 0)
        .collect();
    let class: Vec<f64> = matched.iter().map(|s| s.class_accuracy).collect();
    let pos: Vec<f64> = matched.iter().map(|s| s.position_fidelity).collect();
    let scale: Vec<f64> = matched.iter().map(|s| s.scale_fidelity).collect();

    let m = |v: &[f64]| mean(v).unwrap_or(0.0);
    let n = sorted.len() as f64;
    let (parse_rate, f1_mean) = (m(&parsed), m(&f1));
    let (class_mean, pos_mean, scale_mean) = (m(&class), m(&pos), m(&scale));
    let score = reconstruct_score(parse_rate, f1_mean, class_mean, pos_mean, scale_mean)?;
    Ok(CellAggregate {
        n_scenes: sorted.len(),
        n_matched_scenes: matched.len(),
        parse_rate,
        f1: f1_mean,
        class_accuracy: class_mean,
        position_fidelity: pos_mean,
        scale_fidelity: scale_mean,
        reconstruct_score: score,
        ci95: CellIntervals {
            parse_rate: ci(&parsed, seed),
            f1: ci(&f1, seed),
            class_accuracy: ci(&class, seed),
            position_fidelity: ci(&pos, seed),
            scale_fidelity: ci(&scale, seed),
        },
        zero_filled: ZeroFilledMeans {
            class_accuracy: class.iter().sum::<f64>() / n,
            position_fidelity: pos.iter().sum::<f64>() / n,
            scale_fidelity: scale.iter().sum::<f64>() / n,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{PrimitiveClass, SceneObject, Vec3};

    fn obj(c: PrimitiveClass, x: f64, z: f64) -> SceneObject {
        SceneObject::new(c, Vec3::new(x, 0.5, z))
    }

    fn gt() -> Scene {
        Scene::new(
            "g",
            vec![
                obj(PrimitiveClass::Cube, -2.0, 0.0),
                obj(PrimitiveClass::Sphere, 0.0, 0.0),
                obj(PrimitiveClass::Cone, 2.0, 0.0),
            ],
        )
    }

    #[test]
    fn perfect_prediction() {
        let g = gt();
        let s = component_scores(&g, &g, None, &ScoreConfig::default()).unwrap();
        assert_eq!(
            (
                s.f1,
                s.class_accuracy,
                s.position_fidelity,
                s.scale_fidelity
            ),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn spurious_far_object() {
        let g = gt();
        let mut p = g.clone();
        p.objects.pop();
        p.objects.push(obj(PrimitiveClass::Cone, 500.0, 0.0));
        let s = component_scores(&p, &g, None, &ScoreConfig::default()).unwrap();
        assert_eq!(s.true_positives, 2);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.position_fidelity, 0.0);
    }

    #[test]
    fn empty_prediction_and_empty_gt() {
        let g = gt();
        let s =
            component_scores(&Scene::new("p", vec![]), &g, None, &ScoreConfig::default()).unwrap();
        assert_eq!((s.f1, s.matched_count, s.d_pos), (0.0, 0, None));
        assert_eq!(
            component_scores(&g, &Scene::new("e", vec![]), None, &ScoreConfig::default()),
            Err(MetricsError::NoGroundTruth)
        );
    }

    #[test]
    fn score_is_mean_of_five() {
        assert_eq!(reconstruct_score(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((reconstruct_score(0.8, 0.6, 0.5, 0.7, 0.9).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(reconstruct_score(0.0, 0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(reconstruct_score(1.2, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn iou_mode_requires_class() {
        let g = gt();
        let mut p = g.clone();
        p.objects[0].class_name = PrimitiveClass::Sphere;
        let s = component_scores(&p, &g, None, &ScoreConfig::iou_class_matched()).unwrap();
        assert_eq!(s.true_positives, 2);
    }

    #[test]
    fn fov_filter_drops_objects_behind() {
        let cam = Camera::default();
        let mut g = gt();
        g.objects.push(obj(PrimitiveClass::Torus, 0.0, 20.0));
        assert_eq!(fov_filter(&g, &cam).objects.len(), 3);
    }
}
