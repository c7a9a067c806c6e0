use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PseudoGT;
use crate::codecs::{parse, phase1_quality_filter, FilterOutcome, SceneCodeLanguage};

/// Rejection reason for outputs that pass the filter but yield no objects.
pub const PARSE_FAILURE: &str = "parse_failure";

/// One raw Three.js response for a rendered image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawOutput {
    pub scene_id: String,
    pub image_ref: String,
    pub code: String,
    #[serde(default)]
    pub viewpoint: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub total: usize,
    pub accepted: usize,
    pub pass_rate: f64,
    /// Count per rejection reason; reasons that never fired are absent.
    pub rejections: BTreeMap<String, usize>,
}

/// Keeps the outputs that pass the structural filter and then parse to at
/// least one object.
pub fn phase1_curate(raw: &[RawOutput]) -> (Vec<PseudoGT>, CurationReport) {
    let mut accepted = Vec::new();
    let mut rejections: BTreeMap<String, usize> = BTreeMap::new();
    for r in raw {
        if let FilterOutcome::Reject(reason) = phase1_quality_filter(&r.code) {
            *rejections.entry(reason.as_str().to_string()).or_default() += 1;
            continue;
        }
        match parse(SceneCodeLanguage::ThreeJs, &r.code)
            .scene
            .filter(|s| !s.objects.is_empty())
        {
            Some(mut parsed) => {
                parsed.scene_id.clone_from(&r.scene_id);
                accepted.push(PseudoGT {
                    scene_id: r.scene_id.clone(),
                    image_ref: r.image_ref.clone(),
                    code: r.code.clone(),
                    parsed,
                    viewpoint: r.viewpoint,
                });
            }
            None => *rejections.entry(PARSE_FAILURE.to_string()).or_default() += 1,
        }
    }
    let total = raw.len();
    let pass_rate = if total == 0 {
        0.0
    } else {
        accepted.len() as f64 / total as f64
    };
    let report = CurationReport {
        total,
        accepted: accepted.len(),
        pass_rate,
        rejections,
    };
    (accepted, report)
}
