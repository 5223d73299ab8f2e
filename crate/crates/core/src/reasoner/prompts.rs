use std::path::Path;

use crate::error::Result;
use crate::util::read_to_string;

/// Prompt templates. Placeholders are `{NAME}` in upper case; any other brace
/// text is left alone.
///
/// | template         | placeholders                                                          |
/// |------------------|-----------------------------------------------------------------------|
/// | `join_adjacency` | `{SCHEMA}` `{TABLE_LIST}` `{LAST_TABLE}`                              |
/// | `phrase_mapping` | `{SCHEMA}` `{QUERY}`                                                  |
/// | `direct_rerank`  | `{QUESTION_ID}` `{QUERY}` `{N}` `{M}` `{RANKING}` `{SCHEMAS}` `{OUTPUT_SLOTS}` |
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub join_adjacency: String,
    pub phrase_mapping: String,
    pub direct_rerank: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            join_adjacency: include_str!("../../prompts/join_adjacency.v1.txt").to_string(),
            phrase_mapping: include_str!("../../prompts/phrase_mapping.v1.txt").to_string(),
            direct_rerank: include_str!("../../prompts/direct_rerank.v1.txt").to_string(),
        }
    }
}

fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in values {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

impl PromptSet {
    /// Loads `join_adjacency.v1.txt`, `phrase_mapping.v1.txt` and
    /// `direct_rerank.v1.txt` from `dir`; missing files keep the built-in text.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut set = Self::default();
        for (name, slot) in [
            ("join_adjacency.v1.txt", &mut set.join_adjacency),
            ("phrase_mapping.v1.txt", &mut set.phrase_mapping),
            ("direct_rerank.v1.txt", &mut set.direct_rerank),
        ] {
            let path = dir.join(name);
            if path.exists() {
                *slot = read_to_string(&path)?;
            }
        }
        Ok(set)
    }

    pub fn render_join(&self, schema: &str, table_list: &str, last_table: usize) -> String {
        fill(
            &self.join_adjacency,
            &[
                ("SCHEMA", schema),
                ("TABLE_LIST", table_list),
                ("LAST_TABLE", &last_table.to_string()),
            ],
        )
    }

    pub fn render_phrases(&self, schema: &str, query: &str) -> String {
        fill(
            &self.phrase_mapping,
            &[("SCHEMA", schema), ("QUERY", query)],
        )
    }

    pub fn render_direct(
        &self,
        question_id: &str,
        query: &str,
        ids: &[String],
        docs: &[String],
        keep: usize,
    ) -> String {
        let ranking: Vec<String> = ids
            .iter()
            .enumerate()
            .map(|(i, d)| format!("Rank {}: {d}", i + 1))
            .collect();
        let schemas: Vec<String> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| format!("Schema {}:\n{}", i + 1, d.trim_end()))
            .collect();
        let slots: Vec<String> = (1..=keep).map(|i| format!("[DB_{i}]")).collect();
        fill(
            &self.direct_rerank,
            &[
                ("QUESTION_ID", question_id),
                ("N", &ids.len().to_string()),
                ("M", &keep.to_string()),
                ("RANKING", &ranking.join("\n")),
                ("SCHEMAS", &schemas.join("\n")),
                ("OUTPUT_SLOTS", &slots.join(", ")),
                ("QUERY", query),
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_braces_survive() {
        let p = PromptSet::default().render_join("S", "0: a", 0);
        assert!(p.contains("{0: {1, 2}; 1: {0}; 2: {0}}"));
        assert!(p.contains("from 0 to 0,"));
        assert!(!p.contains("{SCHEMA}"));
    }

    #[test]
    fn load_dir_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("phrase_mapping.v1.txt"), "Q={QUERY}").unwrap();
        let set = PromptSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.render_phrases("s", "hi"), "Q=hi");
        assert_eq!(set.join_adjacency, PromptSet::default().join_adjacency);
    }
}
