//! Spatial question answering over scene graphs: question generation,
//! prompt construction and answer judging.

mod evaluate;
mod generate;
mod prompts;
pub(crate) mod templates;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::Relation;
use crate::scene::Vec3;

pub use evaluate::{
    committed_segment, evaluate_qa_answer, extract_final_answer, judge_response, qa_cell_accuracy,
    CategoryAccuracy, ExtractionRule, QAJudgment, QaAccuracy,
};
pub use generate::{generate_qa, relation_phrase, QaSet, QUESTIONS_PER_SCENE};
pub use prompts::{
    build_prompt, build_reconstruction_prompt, language_rendering, InferenceMode, PromptDomain,
};
pub use templates::templates_version;

/// Localization tolerance in scene units.
pub const DEFAULT_TOLERANCE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QaError {
    #[error("scene needs at least 1 object, has {0}")]
    TooFewObjects(usize),
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error("invalid QA record: {0}")]
    Record(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Localization,
    Relationship,
    Counting,
    Existence,
    Comparison,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Localization,
        Category::Relationship,
        Category::Counting,
        Category::Existence,
        Category::Comparison,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Localization => "localization",
            Category::Relationship => "relationship",
            Category::Counting => "counting",
            Category::Existence => "existence",
            Category::Comparison => "comparison",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ground-truth answer; its shape follows the question category.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    Count(u64),
    YesNo(bool),
    Phrase(String),
    Point(Vec3),
}

impl Answer {
    fn fits(&self, category: Category) -> bool {
        matches!(
            (self, category),
            (Answer::Count(_), Category::Counting)
                | (Answer::YesNo(_), Category::Existence)
                | (
                    Answer::Phrase(_),
                    Category::Relationship | Category::Comparison
                )
                | (Answer::Point(_), Category::Localization)
        )
    }

    fn to_value(&self) -> Value {
        match self {
            Answer::Count(n) => Value::from(*n),
            Answer::YesNo(b) => Value::from(if *b { "yes" } else { "no" }),
            Answer::Phrase(p) => Value::from(p.as_str()),
            Answer::Point(p) => Value::from(p.to_array().to_vec()),
        }
    }

    fn from_value(v: &Value, category: Category) -> Option<Answer> {
        match category {
            Category::Counting => v.as_u64().map(Answer::Count),
            Category::Existence => match v.as_str()? {
                "yes" => Some(Answer::YesNo(true)),
                "no" => Some(Answer::YesNo(false)),
                _ => None,
            },
            Category::Relationship | Category::Comparison => {
                v.as_str().map(|s| Answer::Phrase(s.to_string()))
            }
            Category::Localization => {
                let a = v.as_array()?;
                match a.as_slice() {
                    [x, y, z] => Some(Answer::Point(Vec3::new(
                        x.as_f64()?,
                        y.as_f64()?,
                        z.as_f64()?,
                    ))),
                    _ => None,
                }
            }
        }
    }
}

impl fmt::Display for Answer {
    /// The plain answer text a perfect respondent would give.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Count(n) => write!(f, "{n}"),
            Answer::YesNo(b) => f.write_str(if *b { "yes" } else { "no" }),
            Answer::Phrase(p) => f.write_str(p),
            Answer::Point(p) => write!(f, "({}, {}, {})", p.x, p.y, p.z),
        }
    }
}

/// Axis a relationship question asks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationAxis {
    Horizontal,
    Vertical,
    Depth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareKind {
    Larger,
    Closer,
}

/// Structured form of a question: what an independent checker needs to
/// recompute the answer from the scene graph. Objects are named by their
/// unique "color class" description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Query {
    CountAll,
    CountColor {
        color: String,
    },
    CountClass {
        class_name: String,
    },
    Exists {
        color: String,
        class_name: String,
    },
    Relation {
        subject: String,
        reference: String,
        axis: RelationAxis,
        relation: Relation,
    },
    Compare {
        first: String,
        second: String,
        by: CompareKind,
    },
    Locate {
        object: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QaRecord", into = "QaRecord")]
pub struct QAItem {
    pub scene_id: String,
    pub question_id: String,
    pub category: Category,
    pub question: String,
    pub gt_answer: Answer,
    /// Present iff the category is localization.
    pub tolerance: Option<f64>,
    pub query: Query,
}

/// On-disk line of a QA set.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct QaRecord {
    scene_id: String,
    question_id: String,
    category: Category,
    question: String,
    gt_answer: Value,
    tolerance: Option<f64>,
    query: Query,
}

impl TryFrom<QaRecord> for QAItem {
    type Error = QaError;

    fn try_from(r: QaRecord) -> Result<Self, QaError> {
        let gt_answer = Answer::from_value(&r.gt_answer, r.category).ok_or_else(|| {
            QaError::Record(format!(
                "{}: answer does not fit {}",
                r.question_id, r.category
            ))
        })?;
        if r.tolerance.is_some() != (r.category == Category::Localization) {
            return Err(QaError::Record(format!(
                "{}: tolerance only belongs to localization",
                r.question_id
            )));
        }
        Ok(QAItem {
            scene_id: r.scene_id,
            question_id: r.question_id,
            category: r.category,
            question: r.question,
            gt_answer,
            tolerance: r.tolerance,
            query: r.query,
        })
    }
}

impl From<QAItem> for QaRecord {
    fn from(i: QAItem) -> Self {
        QaRecord {
            gt_answer: i.gt_answer.to_value(),
            scene_id: i.scene_id,
            question_id: i.question_id,
            category: i.category,
            question: i.question,
            tolerance: i.tolerance,
            query: i.query,
        }
    }
}

impl QAItem {
    pub fn is_well_formed(&self) -> bool {
        self.gt_answer.fits(self.category)
            && self.tolerance.is_some() == (self.category == Category::Localization)
    }
}

/// One JSON object per line.
pub fn items_to_jsonl(items: &[QAItem]) -> String {
    let mut out = String::new();
    for i in items {
        out.push_str(&serde_json::to_string(i).expect("QA items serialize"));
        out.push('\n');
    }
    out
}

pub fn items_from_jsonl(text: &str) -> Result<Vec<QAItem>, QaError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| QaError::Record(format!("line {}: {e}", n + 1)))
        })
        .collect()
}
