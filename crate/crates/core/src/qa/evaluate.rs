use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Answer, Category, InferenceMode, QAItem, DEFAULT_TOLERANCE};

static FINAL_ANSWER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)final\s+answer\s*[*_`]*\s*:").expect("valid regex"));
static ANSWER_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:final\s+)?answer\s*[*_`]*\s*:").expect("valid regex"));
static COUNT_MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:final\s+answer|the\s+answer\s+is|total)\s*[*_`]*\s*:?\s*[*_`]*\s*(-?\d+(?:\.\d+)?)")
        .expect("valid regex")
});
static YES_NO_MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)(?:final\s+answer|the\s+answer\s+is|answer)\s*[*_`]*\s*:?\s*[*_`]*\s*\b(yes|no)\b",
    )
    .expect("valid regex")
});
static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?").expect("valid regex")
});
static YES_NO: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(yes|no)\b").expect("valid regex"));

const MARKDOWN: &[char] = &['*', '_', '`', '#', '>', ' ', '\t'];

fn trim_markdown(s: &str) -> &str {
    s.trim_matches(MARKDOWN).trim()
}

fn last_lines(text: &str, n: usize) -> String {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let start = lines.len().saturating_sub(n);
    lines[start..].join("\n")
}

/// Text after the last match of `marker`: the rest of its line, or the next
/// non-empty line when the marker ends its line.
fn after_last(text: &str, marker: &Regex) -> Option<String> {
    let m = marker.find_iter(text).last()?;
    let rest = &text[m.end()..];
    let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
    let line = trim_markdown(line);
    if !line.is_empty() {
        return Some(line.to_string());
    }
    tail.lines()
        .map(trim_markdown)
        .find(|l| !l.is_empty())
        .map(str::to_string)
        .or(Some(String::new()))
}

/// Content after the last "Final answer:" marker (markdown emphasis
/// tolerated), else the last two non-empty lines.
pub fn extract_final_answer(response: &str) -> String {
    after_last(response, &FINAL_ANSWER).unwrap_or_else(|| last_lines(response, 2))
}

/// The trailing committed answer: the last "Final answer:" or "Answer:"
/// line, else the last two non-empty lines.
pub fn committed_segment(response: &str) -> String {
    after_last(response, &ANSWER_LINE).unwrap_or_else(|| last_lines(response, 2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionRule {
    MarkerInteger,
    LastInteger,
    MarkerYesNo,
    LastYesNo,
    CommittedSegment,
    FirstThreeNumbers,
    NoExtraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAJudgment {
    pub question_id: String,
    pub category: Category,
    pub correct: bool,
    pub extracted: String,
    pub rule: ExtractionRule,
}

fn integer_token(tok: &str) -> Option<i64> {
    if tok.contains(['.', 'e', 'E']) {
        return None;
    }
    tok.trim_start_matches('+').parse().ok()
}

fn normalize(s: &str) -> String {
    s.to_lowercase()
        .replace(['-', '_'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Phrases counted as stating a relation answer.
fn accepted_phrases(gt: &str) -> Vec<String> {
    let extra: &[&str] = match gt {
        "left of" => &["left"],
        "right of" => &["right"],
        "above" => &["on top of"],
        "below" => &["beneath", "under"],
        "in front of" => &["in front"],
        _ => &[],
    };
    std::iter::once(gt)
        .chain(extra.iter().copied())
        .map(normalize)
        .collect()
}

fn judgment(
    item: &QAItem,
    correct: bool,
    extracted: impl Into<String>,
    rule: ExtractionRule,
) -> QAJudgment {
    QAJudgment {
        question_id: item.question_id.clone(),
        category: item.category,
        correct,
        extracted: extracted.into(),
        rule,
    }
}

/// Judges one response with the category's extraction rule.
pub fn evaluate_qa_answer(item: &QAItem, response: &str) -> QAJudgment {
    match (&item.gt_answer, item.category) {
        (Answer::Count(gt), _) => {
            // a committed final answer is judged exactly as if it stood alone
            let scoped = after_last(response, &FINAL_ANSWER).filter(|s| !s.is_empty());
            let response = scoped.as_deref().unwrap_or(response);
            if let Some(c) = COUNT_MARKER.captures_iter(response).last() {
                let tok = c.get(1).expect("group").as_str();
                if let Some(n) = integer_token(tok) {
                    return judgment(
                        item,
                        n >= 0 && n as u64 == *gt,
                        tok,
                        ExtractionRule::MarkerInteger,
                    );
                }
            }
            let last = NUMBER
                .find_iter(response)
                .filter_map(|m| integer_token(m.as_str()).map(|n| (m, n)))
                .last();
            match last {
                Some((m, n)) => {
                    let rule = if scoped.is_some() {
                        ExtractionRule::MarkerInteger
                    } else {
                        ExtractionRule::LastInteger
                    };
                    judgment(item, n >= 0 && n as u64 == *gt, m.as_str(), rule)
                }
                None => judgment(item, false, "", ExtractionRule::NoExtraction),
            }
        }
        (Answer::YesNo(gt), _) => {
            let scoped = after_last(response, &FINAL_ANSWER).filter(|s| !s.is_empty());
            let response = scoped.as_deref().unwrap_or(response);
            let (tok, rule) = match YES_NO_MARKER.captures_iter(response).last() {
                Some(c) => (
                    c.get(1).expect("group").as_str(),
                    ExtractionRule::MarkerYesNo,
                ),
                None => match YES_NO.find_iter(response).last() {
                    Some(m) if scoped.is_some() => (m.as_str(), ExtractionRule::MarkerYesNo),
                    Some(m) => (m.as_str(), ExtractionRule::LastYesNo),
                    None => return judgment(item, false, "", ExtractionRule::NoExtraction),
                },
            };
            let said_yes = tok.eq_ignore_ascii_case("yes");
            judgment(item, said_yes == *gt, tok, rule)
        }
        (Answer::Phrase(gt), _) => {
            let segment = committed_segment(response);
            if segment.trim().is_empty() {
                return judgment(item, false, "", ExtractionRule::NoExtraction);
            }
            let seg = normalize(&segment);
            let phrases = match item.category {
                Category::Relationship => accepted_phrases(gt),
                _ => vec![normalize(gt)],
            };
            let correct = phrases.iter().any(|p| seg.contains(p.as_str()));
            judgment(item, correct, segment, ExtractionRule::CommittedSegment)
        }
        (Answer::Point(gt), _) => {
            let nums: Vec<(&str, f64)> = NUMBER
                .find_iter(response)
                .filter_map(|m| m.as_str().parse::<f64>().ok().map(|v| (m.as_str(), v)))
                .take(3)
                .collect();
            if nums.len() < 3 {
                return judgment(item, false, "", ExtractionRule::NoExtraction);
            }
            let tol = item.tolerance.unwrap_or(DEFAULT_TOLERANCE);
            let err = (nums[0].1 - gt.x)
                .abs()
                .max((nums[1].1 - gt.y).abs())
                .max((nums[2].1 - gt.z).abs());
            let extracted = nums.iter().map(|n| n.0).collect::<Vec<_>>().join(", ");
            judgment(
                item,
                err <= tol,
                extracted,
                ExtractionRule::FirstThreeNumbers,
            )
        }
    }
}

/// Judges a response produced under `mode`; code-CoT answers are first
/// reduced to their committed final answer.
pub fn judge_response(item: &QAItem, response: &str, mode: InferenceMode) -> QAJudgment {
    match mode {
        InferenceMode::CodeCot(_) => evaluate_qa_answer(item, &extract_final_answer(response)),
        _ => evaluate_qa_answer(item, response),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAccuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaAccuracy {
    pub overall: CategoryAccuracy,
    pub per_category: BTreeMap<Category, CategoryAccuracy>,
}

fn acc(correct: usize, total: usize) -> CategoryAccuracy {
    let accuracy = if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    };
    CategoryAccuracy {
        correct,
        total,
        accuracy,
    }
}

pub fn qa_cell_accuracy(judgments: &[QAJudgment]) -> QaAccuracy {
    let mut per: BTreeMap<Category, (usize, usize)> = BTreeMap::new();
    for j in judgments {
        let e = per.entry(j.category).or_default();
        e.0 += usize::from(j.correct);
        e.1 += 1;
    }
    let correct = judgments.iter().filter(|j| j.correct).count();
    QaAccuracy {
        overall: acc(correct, judgments.len()),
        per_category: per.into_iter().map(|(k, (c, t))| (k, acc(c, t))).collect(),
    }
}
