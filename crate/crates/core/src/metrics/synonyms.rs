use std::collections::HashMap;

use serde::{Deserialize, Serialize};

const SHIPPED: &str = include_str!("../../data/synonyms.txt");

/// Lowercase, trim, read `_`/`-` as spaces and collapse runs of whitespace.
pub fn normalize_class(name: &str) -> String {
    name.to_lowercase()
        .replace(['_', '-'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Groups of interchangeable class names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct SynonymTable {
    groups: Vec<Vec<String>>,
    index: HashMap<String, usize>,
}

impl From<Vec<Vec<String>>> for SynonymTable {
    fn from(groups: Vec<Vec<String>>) -> Self {
        Self::from_groups(groups)
    }
}

impl From<SynonymTable> for Vec<Vec<String>> {
    fn from(t: SynonymTable) -> Self {
        t.groups
    }
}

impl SynonymTable {
    /// Parses the plain-text format: one comma-separated group per line,
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let groups = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .map(|l| {
                l.split(',')
                    .map(normalize_class)
                    .filter(|n| !n.is_empty())
                    .collect::<Vec<_>>()
            })
            .filter(|g| !g.is_empty())
            .collect();
        Self::from_groups(groups)
    }

    pub fn from_groups(groups: Vec<Vec<String>>) -> Self {
        let groups: Vec<Vec<String>> = groups
            .into_iter()
            .map(|g| g.iter().map(|n| normalize_class(n)).collect())
            .collect();
        let mut index = HashMap::new();
        for (gi, g) in groups.iter().enumerate() {
            for name in g {
                // first group wins when a name is listed twice
                index.entry(name.clone()).or_insert(gi);
            }
        }
        SynonymTable { groups, index }
    }

    pub fn empty() -> Self {
        Self::from_groups(Vec::new())
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn group_of(&self, name: &str) -> Option<usize> {
        self.index.get(&normalize_class(name)).copied()
    }
}

impl Default for SynonymTable {
    /// The table shipped in `data/synonyms.txt`.
    fn default() -> Self {
        Self::parse(SHIPPED)
    }
}

pub fn class_match(pred: &str, gt: &str, table: &SynonymTable) -> bool {
    let (a, b) = (normalize_class(pred), normalize_class(gt));
    if a == b {
        return true;
    }
    matches!((table.group_of(&a), table.group_of(&b)), (Some(x), Some(y)) if x == y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_groups() {
        let t = SynonymTable::default();
        for (a, b) in [
            ("box", "cube"),
            ("Ball", "sphere"),
            ("tube", "cylinder"),
            ("tetrahedron", "pyramid"),
            ("donut", "ring"),
            ("sofa", "couch"),
            ("light", "lamp"),
            ("Cube", "cube"),
            ("coffee_table", "coffee table"),
        ] {
            assert!(class_match(a, b, &t), "{a} {b}");
        }
        assert!(!class_match("cone", "cylinder", &t));
        assert!(!class_match("chair", "sofa", &t));
    }
}
