//! Cross-model tables: per-language reconstruction rows with best/worst
//! marks and the max-min gap, QA mode rows, and reconstruction-vs-QA
//! correlations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use scenecode_core::canonical::{self, Layout};
use scenecode_core::codecs::SceneCodeLanguage;
use scenecode_core::metrics::{pearson, spearman, RankTies};
use scenecode_core::qa::Category;

use crate::snapshot::{CellSnapshot, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconCell {
    pub model_id: String,
    pub mode_label: String,
    pub language: SceneCodeLanguage,
    pub score: f64,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaCell {
    pub model_id: String,
    pub mode_label: String,
    /// Fraction correct in [0, 1].
    pub overall: f64,
    pub per_category: BTreeMap<Category, f64>,
}

/// Numbers a report is built from, either read off snapshots or typed in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportInput {
    pub reconstruct: Vec<ReconCell>,
    pub qa: Vec<QaCell>,
}

impl ReportInput {
    /// Valid snapshots only.
    pub fn from_snapshots(snapshots: &[CellSnapshot]) -> Self {
        let mut input = ReportInput::default();
        for s in snapshots.iter().filter(|s| s.valid) {
            match (s.task, s.language, &s.aggregate, &s.qa) {
                (Task::Reconstruct, Some(language), Some(a), _) => {
                    input.reconstruct.push(ReconCell {
                        model_id: s.model_id.clone(),
                        mode_label: s.mode_label.clone(),
                        language,
                        score: a.reconstruct_score,
                        f1: Some(a.f1),
                    })
                }
                (Task::Qa, _, _, Some(q)) => input.qa.push(QaCell {
                    model_id: s.model_id.clone(),
                    mode_label: s.mode_label.clone(),
                    overall: q.overall.accuracy,
                    per_category: q
                        .per_category
                        .iter()
                        .map(|(k, v)| (*k, v.accuracy))
                        .collect(),
                }),
                _ => {}
            }
        }
        input
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageScore {
    pub language: SceneCodeLanguage,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconRow {
    pub model_id: String,
    pub mode_label: String,
    /// In canonical language order.
    pub scores: Vec<LanguageScore>,
    pub best: SceneCodeLanguage,
    pub worst: SceneCodeLanguage,
    /// Max minus min score within the row.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAccuracy {
    pub mode_label: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRow {
    pub model_id: String,
    pub accuracies: Vec<ModeAccuracy>,
    pub best_mode: String,
    pub worst_mode: String,
    /// Best-language code-CoT accuracy minus direct accuracy.
    pub delta_best_direct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationLine {
    pub x: String,
    pub y: String,
    pub n: usize,
    pub pearson: f64,
    /// Average ranks for ties.
    pub spearman: f64,
    /// First-occurrence ranks for ties.
    pub spearman_ordinal: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub reconstruct: Vec<ReconRow>,
    pub qa: Vec<QaRow>,
    pub correlations: Vec<CorrelationLine>,
}

const MODE_ORDER: [&str; 4] = ["direct", "nl_cot", "best_cc", "worst_cc"];

fn mode_rank(label: &str) -> (usize, &str) {
    (
        MODE_ORDER
            .iter()
            .position(|m| *m == label)
            .unwrap_or(MODE_ORDER.len()),
        label,
    )
}

fn recon_rows(cells: &[ReconCell]) -> Vec<ReconRow> {
    let mut grouped: BTreeMap<(&str, &str), BTreeMap<SceneCodeLanguage, f64>> = BTreeMap::new();
    for c in cells {
        grouped
            .entry((&c.model_id, &c.mode_label))
            .or_default()
            .insert(c.language, c.score);
    }
    grouped
        .into_iter()
        .map(|((model, mode), by_lang)| {
            let scores: Vec<LanguageScore> = SceneCodeLanguage::ALL
                .into_iter()
                .filter_map(|l| {
                    by_lang
                        .get(&l)
                        .map(|&score| LanguageScore { language: l, score })
                })
                .collect();
            let (mut best, mut worst) = (&scores[0], &scores[0]);
            for s in &scores[1..] {
                if s.score > best.score {
                    best = s;
                }
                if s.score < worst.score {
                    worst = s;
                }
            }
            ReconRow {
                model_id: model.to_string(),
                mode_label: mode.to_string(),
                delta: best.score - worst.score,
                best: best.language,
                worst: worst.language,
                scores,
            }
        })
        .collect()
}

fn qa_rows(cells: &[QaCell]) -> Vec<QaRow> {
    let mut grouped: BTreeMap<&str, Vec<ModeAccuracy>> = BTreeMap::new();
    for c in cells {
        grouped.entry(&c.model_id).or_default().push(ModeAccuracy {
            mode_label: c.mode_label.clone(),
            accuracy: c.overall,
        });
    }
    grouped
        .into_iter()
        .map(|(model, mut accuracies)| {
            accuracies.sort_by(|a, b| mode_rank(&a.mode_label).cmp(&mode_rank(&b.mode_label)));
            let get = |m: &str| {
                accuracies
                    .iter()
                    .find(|a| a.mode_label == m)
                    .map(|a| a.accuracy)
            };
            let delta_best_direct = get("best_cc").zip(get("direct")).map(|(b, d)| b - d);
            let (mut best, mut worst) = (&accuracies[0], &accuracies[0]);
            for a in &accuracies[1..] {
                if a.accuracy > best.accuracy {
                    best = a;
                }
                if a.accuracy < worst.accuracy {
                    worst = a;
                }
            }
            QaRow {
                model_id: model.to_string(),
                best_mode: best.mode_label.clone(),
                worst_mode: worst.mode_label.clone(),
                delta_best_direct,
                accuracies,
            }
        })
        .collect()
}

/// Pearson and Spearman of paired values; `None` when undefined.
pub fn correlation_line(x: &str, y: &str, xs: &[f64], ys: &[f64]) -> Option<CorrelationLine> {
    if xs.len() < 3 {
        return None;
    }
    Some(CorrelationLine {
        x: x.to_string(),
        y: y.to_string(),
        n: xs.len(),
        pearson: pearson(xs, ys).ok()?,
        spearman: spearman(xs, ys, RankTies::Average).ok()?,
        spearman_ordinal: spearman(xs, ys, RankTies::Ordinal).ok()?,
    })
}

/// Mean direct-mode F1 per model against direct QA accuracy, over models
/// that have both.
fn correlations(input: &ReportInput) -> Vec<CorrelationLine> {
    let mut f1: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for c in input
        .reconstruct
        .iter()
        .filter(|c| c.mode_label == "direct")
    {
        if let Some(v) = c.f1 {
            f1.entry(&c.model_id).or_default().push(v);
        }
    }
    let direct: BTreeMap<&str, &QaCell> = input
        .qa
        .iter()
        .filter(|c| c.mode_label == "direct")
        .map(|c| (c.model_id.as_str(), c))
        .collect();
    let mut rows: Vec<(&str, f64, f64, f64)> = f1
        .iter()
        .filter_map(|(model, v)| {
            let q = direct.get(model)?;
            let rel = q
                .per_category
                .get(&Category::Relationship)
                .copied()
                .unwrap_or(0.0);
            Some((
                *model,
                v.iter().sum::<f64>() / v.len() as f64,
                rel,
                q.overall,
            ))
        })
        .collect();
    // ordinal ranks break ties in row order: highest F1 first, then model id
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let xs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let rel: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let overall: Vec<f64> = rows.iter().map(|r| r.3).collect();
    [
        correlation_line("reconstruct_f1_mean", "qa_relationship", &xs, &rel),
        correlation_line("reconstruct_f1_mean", "qa_overall", &xs, &overall),
    ]
    .into_iter()
    .flatten()
    .collect()
}

pub fn build_report(input: &ReportInput) -> Report {
    Report {
        reconstruct: recon_rows(&input.reconstruct),
        qa: qa_rows(&input.qa),
        correlations: correlations(input),
    }
}

pub fn report(snapshots: &[CellSnapshot]) -> Report {
    build_report(&ReportInput::from_snapshots(snapshots))
}

fn score_text(v: f64) -> String {
    let s = format!("{v:.3}");
    s.strip_prefix("0").map(str::to_string).unwrap_or(s)
}

impl Report {
    /// Plain-text tables. `^` marks a row's best cell and `v` its worst.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut modes: Vec<&str> = self
            .reconstruct
            .iter()
            .map(|r| r.mode_label.as_str())
            .collect();
        modes.sort_by_key(|m| mode_rank(m));
        modes.dedup();
        for mode in modes {
            let rows: Vec<&ReconRow> = self
                .reconstruct
                .iter()
                .filter(|r| r.mode_label == mode)
                .collect();
            let _ = writeln!(out, "Reconstruct Score ({mode})");
            let _ = write!(out, "{:<24}", "model");
            for l in SceneCodeLanguage::ALL {
                let _ = write!(out, " {:>15}", l.as_str());
            }
            let _ = writeln!(out, " {:>7}", "delta");
            for r in rows {
                let _ = write!(out, "{:<24}", r.model_id);
                for l in SceneCodeLanguage::ALL {
                    let cell = match r.scores.iter().find(|s| s.language == l) {
                        Some(s) => {
                            let mark = if l == r.best {
                                "^"
                            } else if l == r.worst {
                                "v"
                            } else {
                                " "
                            };
                            format!("{}{mark}", score_text(s.score))
                        }
                        None => "-".to_string(),
                    };
                    let _ = write!(out, " {cell:>15}");
                }
                let _ = writeln!(out, " {:>7}", score_text(r.delta));
            }
            out.push('\n');
        }
        if !self.qa.is_empty() {
            let mut labels: Vec<&str> = self
                .qa
                .iter()
                .flat_map(|r| r.accuracies.iter().map(|a| a.mode_label.as_str()))
                .collect();
            labels.sort_by_key(|m| mode_rank(m));
            labels.dedup();
            let _ = writeln!(out, "QA accuracy (%)");
            let _ = write!(out, "{:<24}", "model");
            for l in &labels {
                let _ = write!(out, " {l:>18}");
            }
            let _ = writeln!(out, " {:>18}", "delta_best_direct");
            for r in &self.qa {
                let _ = write!(out, "{:<24}", r.model_id);
                for l in &labels {
                    let cell = match r.accuracies.iter().find(|a| a.mode_label == *l) {
                        Some(a) => {
                            let mark = if a.mode_label == r.best_mode {
                                "^"
                            } else {
                                " "
                            };
                            format!("{:.1}{mark}", 100.0 * a.accuracy)
                        }
                        None => "-".into(),
                    };
                    let _ = write!(out, " {cell:>18}");
                }
                let delta = r
                    .delta_best_direct
                    .map_or("-".to_string(), |d| format!("{:+.1}", 100.0 * d));
                let _ = writeln!(out, " {delta:>18}");
            }
            out.push('\n');
        }
        for c in &self.correlations {
            let _ = writeln!(
                out,
                "{} vs {} (n={}): pearson {:.3}, spearman {:.3} (ordinal ties {:.3})",
                c.x, c.y, c.n, c.pearson, c.spearman, c.spearman_ordinal
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        canonical::to_string(self, 6, Layout::Pretty).expect("reports serialize") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_has_zero_delta() {
        let input = ReportInput {
            reconstruct: vec![ReconCell {
                model_id: "m".into(),
                mode_label: "direct".into(),
                language: SceneCodeLanguage::ThreeJs,
                score: 0.7,
                f1: Some(0.8),
            }],
            qa: vec![],
        };
        let r = build_report(&input);
        assert_eq!(r.reconstruct.len(), 1);
        assert_eq!(r.reconstruct[0].delta, 0.0);
        assert!(r.correlations.is_empty());
        assert!(r.to_text().contains(".700^"));
    }
}
