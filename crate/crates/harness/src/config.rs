use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use scenecode_core::codecs::SceneCodeLanguage;
use scenecode_core::qa::InferenceMode;

use crate::client::LiveConfig;
use crate::HarnessError;

/// Languages over which best and worst code-CoT languages are chosen.
pub const QA_LANGUAGE_SUBSET: [SceneCodeLanguage; 4] = [
    SceneCodeLanguage::ThreeJs,
    SceneCodeLanguage::BlenderPython,
    SceneCodeLanguage::CanonicalJson,
    SceneCodeLanguage::SceneDsl,
];

/// A requested mode. Code-CoT may name its language directly or defer to
/// the model's best or worst reconstruction language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeSpec {
    Direct,
    NlCot,
    CodeCotBest,
    CodeCotWorst,
    CodeCot(SceneCodeLanguage),
}

impl ModeSpec {
    /// Column label in reports.
    pub fn label(self) -> String {
        match self {
            ModeSpec::Direct => "direct".into(),
            ModeSpec::NlCot => "nl_cot".into(),
            ModeSpec::CodeCotBest => "best_cc".into(),
            ModeSpec::CodeCotWorst => "worst_cc".into(),
            ModeSpec::CodeCot(l) => format!("code_cot_{}", l.as_str()),
        }
    }

    pub fn is_code_cot(self) -> bool {
        matches!(
            self,
            ModeSpec::CodeCotBest | ModeSpec::CodeCotWorst | ModeSpec::CodeCot(_)
        )
    }
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ModeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "best_cc" | "code_cot_best" => Ok(ModeSpec::CodeCotBest),
            "worst_cc" | "code_cot_worst" => Ok(ModeSpec::CodeCotWorst),
            other => match other.parse::<InferenceMode>()? {
                InferenceMode::Direct => Ok(ModeSpec::Direct),
                InferenceMode::NlCot => Ok(ModeSpec::NlCot),
                InferenceMode::CodeCot(l) => Ok(ModeSpec::CodeCot(l)),
            },
        }
    }
}

impl Serialize for ModeSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxNewTokens {
    pub code: u32,
    pub nl_cot: u32,
    pub direct: u32,
}

impl Default for MaxNewTokens {
    fn default() -> Self {
        MaxNewTokens {
            code: 2048,
            nl_cot: 1024,
            direct: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub max_new_tokens: MaxNewTokens,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            max_new_tokens: MaxNewTokens::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ClientConfig {
    Replay {
        dir: PathBuf,
    },
    Live {
        #[serde(flatten)]
        live: LiveConfig,
        /// Store that every live response is also written to.
        record_to: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model_id: String,
    #[serde(default = "all_languages")]
    pub languages: Vec<SceneCodeLanguage>,
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeSpec>,
    /// Resolves `best_cc`; usually filled by language selection.
    #[serde(default)]
    pub best_language: Option<SceneCodeLanguage>,
    #[serde(default)]
    pub worst_language: Option<SceneCodeLanguage>,
    pub scene_split: PathBuf,
    #[serde(default)]
    pub n_scenes: Option<usize>,
    #[serde(default)]
    pub decoding: Decoding,
    pub client: ClientConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Drop ground-truth objects outside the scene's camera before scoring.
    #[serde(default)]
    pub fov_filter: bool,
}

fn all_languages() -> Vec<SceneCodeLanguage> {
    SceneCodeLanguage::ALL.to_vec()
}

fn default_modes() -> Vec<ModeSpec> {
    vec![ModeSpec::Direct]
}

fn default_concurrency() -> usize {
    4
}

impl RunConfig {
    pub fn replay(
        model_id: impl Into<String>,
        scene_split: impl Into<PathBuf>,
        dir: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            model_id: model_id.into(),
            languages: all_languages(),
            modes: default_modes(),
            best_language: None,
            worst_language: None,
            scene_split: scene_split.into(),
            n_scenes: None,
            decoding: Decoding::default(),
            client: ClientConfig::Replay { dir: dir.into() },
            seed: 0,
            concurrency: default_concurrency(),
            fov_filter: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let t = self.decoding.max_new_tokens;
        if t.code == 0 || t.nl_cot == 0 || t.direct == 0 {
            return Err(HarnessError::Invalid(
                "decoding limits must be positive".into(),
            ));
        }
        if self.decoding.temperature.is_nan() || self.decoding.temperature < 0.0 {
            return Err(HarnessError::Invalid(
                "temperature must be non-negative".into(),
            ));
        }
        if self.concurrency == 0 {
            return Err(HarnessError::Invalid("concurrency must be positive".into()));
        }
        if self.n_scenes == Some(0) {
            return Err(HarnessError::Invalid("n_scenes must be positive".into()));
        }
        Ok(())
    }

    /// The concrete inference mode behind a spec.
    pub fn resolve(&self, spec: ModeSpec) -> Result<InferenceMode, HarnessError> {
        let need = |l: Option<SceneCodeLanguage>, which: &str| {
            l.map(InferenceMode::CodeCot).ok_or_else(|| {
                HarnessError::Invalid(format!("{which} code-CoT language not configured"))
            })
        };
        match spec {
            ModeSpec::Direct => Ok(InferenceMode::Direct),
            ModeSpec::NlCot => Ok(InferenceMode::NlCot),
            ModeSpec::CodeCot(l) => Ok(InferenceMode::CodeCot(l)),
            ModeSpec::CodeCotBest => need(self.best_language, "best"),
            ModeSpec::CodeCotWorst => need(self.worst_language, "worst"),
        }
    }

    /// Token budget for a QA mode; reconstruction always uses the code budget.
    pub fn qa_budget(&self, mode: InferenceMode) -> u32 {
        let t = self.decoding.max_new_tokens;
        match mode {
            InferenceMode::Direct => t.direct,
            InferenceMode::NlCot => t.nl_cot,
            InferenceMode::CodeCot(_) => t.code,
        }
    }
}
