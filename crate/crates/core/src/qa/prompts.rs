use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::templates::{fill, TEMPLATES};
use crate::codecs::SceneCodeLanguage;
use crate::scene::Aabb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InferenceMode {
    Direct,
    NlCot,
    CodeCot(SceneCodeLanguage),
}

impl fmt::Display for InferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InferenceMode::Direct => f.write_str("direct"),
            InferenceMode::NlCot => f.write_str("nl_cot"),
            InferenceMode::CodeCot(l) => write!(f, "code_cot_{}", l.as_str()),
        }
    }
}

impl FromStr for InferenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "direct" => return Ok(InferenceMode::Direct),
            "nl_cot" => return Ok(InferenceMode::NlCot),
            _ => {}
        }
        let lang = s
            .strip_prefix("code_cot_")
            .or_else(|| s.strip_prefix("code_cot:"))
            .ok_or_else(|| format!("unknown inference mode {s:?}"))?;
        lang.parse()
            .map(InferenceMode::CodeCot)
            .map_err(|e| e.to_string())
    }
}

impl Serialize for InferenceMode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InferenceMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How a language is named inside the code-CoT prompt.
pub fn language_rendering(language: SceneCodeLanguage) -> String {
    let t = &TEMPLATES;
    let raw = &t.qa_prompt.language[language.as_str()];
    let schema = t
        .reconstruction
        .schema
        .get("canonical_json")
        .map(String::as_str)
        .unwrap_or_default();
    fill(raw, &[("schema", schema)])
}

pub fn build_prompt(mode: InferenceMode, question: &str) -> String {
    let t = &TEMPLATES.qa_prompt;
    match mode {
        InferenceMode::Direct => fill(&t.direct, &[("question", question)]),
        InferenceMode::NlCot => fill(&t.nl_cot, &[("question", question)]),
        InferenceMode::CodeCot(l) => {
            let lang = language_rendering(l);
            fill(&t.code_cot, &[("question", question), ("language", &lang)])
        }
    }
}

/// What kind of scene the reconstruction prompt describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "domain")]
pub enum PromptDomain {
    /// Primitive scenes on a square ground plane of the given half width.
    Primitive { ground_half_extent: f64 },
    /// Indoor scenes with per-scene bounds in meters.
    Hypersim { bounds: Aabb },
}

impl Default for PromptDomain {
    fn default() -> Self {
        PromptDomain::Primitive {
            ground_half_extent: 3.0,
        }
    }
}

fn one_decimal(v: f64) -> String {
    format!("{v:.1}")
}

/// Returns `(system, user)` texts for a reconstruction request.
pub fn build_reconstruction_prompt(
    language: SceneCodeLanguage,
    domain: &PromptDomain,
) -> (String, String) {
    let r = &TEMPLATES.reconstruction;
    let (hint, coordinates) = match domain {
        PromptDomain::Primitive {
            ground_half_extent: h,
        } => {
            let low = one_decimal(-h);
            let high = format!("{h:+.1}");
            (
                r.primitive_hint.as_str(),
                fill(&r.primitive_coordinates, &[("low", &low), ("high", &high)]),
            )
        }
        PromptDomain::Hypersim { bounds } => {
            let v = [
                bounds.min.x,
                bounds.max.x,
                bounds.min.y,
                bounds.max.y,
                bounds.min.z,
                bounds.max.z,
            ]
            .map(one_decimal);
            let coords = fill(
                &r.hypersim_coordinates,
                &[
                    ("x_low", &v[0]),
                    ("x_high", &v[1]),
                    ("y_low", &v[2]),
                    ("y_high", &v[3]),
                    ("z_low", &v[4]),
                    ("z_high", &v[5]),
                ],
            );
            (r.hypersim_hint.as_str(), coords)
        }
    };
    let schema = r
        .schema
        .get("canonical_json")
        .map(String::as_str)
        .unwrap_or_default();
    let user = fill(
        &r.body[language.as_str()],
        &[
            ("hint", hint),
            ("coordinates", &coordinates),
            ("camera", &r.camera),
            ("schema", schema),
        ],
    );
    (r.system.clone(), user)
}
