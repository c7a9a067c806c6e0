use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::Deserialize;

const SHIPPED: &str = include_str!("../../data/templates.toml");

#[derive(Debug, Deserialize)]
pub(crate) struct Templates {
    pub version: u32,
    pub reconstruction: Reconstruction,
    pub qa_prompt: QaPrompt,
    pub questions: Questions,
    pub dataset: Dataset,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Dataset {
    pub prompts: BTreeMap<String, String>,
    pub codegen_paraphrases: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Reconstruction {
    pub system: String,
    pub primitive_hint: String,
    pub hypersim_hint: String,
    pub primitive_coordinates: String,
    pub hypersim_coordinates: String,
    pub camera: String,
    pub body: BTreeMap<String, String>,
    pub schema: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct QaPrompt {
    pub direct: String,
    pub nl_cot: String,
    pub code_cot: String,
    pub language: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Questions {
    pub count_total: String,
    pub count_color: String,
    pub count_class: String,
    pub exists: String,
    pub relation_horizontal: String,
    pub relation_vertical: String,
    pub relation_depth: String,
    pub compare_size: String,
    pub compare_depth: String,
    pub localize: String,
}

pub(crate) static TEMPLATES: LazyLock<Templates> =
    LazyLock::new(|| toml::from_str(SHIPPED).expect("shipped templates are valid"));

/// Template version recorded in manifests.
pub fn templates_version() -> u32 {
    TEMPLATES.version
}

/// Replaces each `{key}` with its value. Unknown placeholders stay as written.
pub(crate) fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        match after.find('}') {
            Some(end) if vars.iter().any(|(k, _)| *k == &after[..end]) => {
                let key = &after[..end];
                out.push_str(
                    vars.iter()
                        .find(|(k, _)| *k == key)
                        .map(|(_, v)| *v)
                        .unwrap_or_default(),
                );
                rest = &after[end + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_templates_load() {
        assert_eq!(TEMPLATES.version, 1);
        assert_eq!(TEMPLATES.reconstruction.body.len(), 6);
        assert_eq!(TEMPLATES.qa_prompt.language.len(), 6);
    }

    #[test]
    fn fill_leaves_unknown_braces() {
        assert_eq!(
            fill("a {x} {\"k\": 1} {y}", &[("x", "1")]),
            "a 1 {\"k\": 1} {y}"
        );
    }
}
