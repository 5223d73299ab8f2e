use std::collections::BTreeSet;
use std::sync::Mutex;

use super::{DecodingParams, ReasonerProvider};
use crate::error::{Error, Result};
use crate::retrieval::{is_stopword, tokens};
use crate::schema::{build_join_graph_from_keys, parse_ddl, DatabaseSchema};

/// Answers from a fixed list of rules: the first rule whose needles all occur
/// in the prompt wins. Every prompt received is kept for inspection.
#[derive(Debug, Default)]
pub struct ScriptedReasoner {
    model_id: String,
    rules: Vec<(Vec<String>, String)>,
    fallback: Option<String>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedReasoner {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            ..Self::default()
        }
    }

    pub fn respond_when(mut self, needles: &[&str], response: impl Into<String>) -> Self {
        self.rules.push((
            needles.iter().map(|s| s.to_string()).collect(),
            response.into(),
        ));
        self
    }

    /// Response used when no rule matches. Without one, unmatched prompts fail.
    pub fn otherwise(mut self, response: impl Into<String>) -> Self {
        self.fallback = Some(response.into());
        self
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log").clone()
    }
}

impl ReasonerProvider for ScriptedReasoner {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, prompt: &str, _params: &DecodingParams) -> Result<String> {
        self.prompts
            .lock()
            .expect("prompt log")
            .push(prompt.to_string());
        self.rules
            .iter()
            .find(|(needles, _)| needles.iter().all(|n| prompt.contains(n.as_str())))
            .map(|(_, r)| r.clone())
            .or_else(|| self.fallback.clone())
            .ok_or_else(|| Error::Provider {
                message: "no scripted response matches the prompt".into(),
                retryable: false,
            })
    }
}

/// Words that state what to compute rather than what to look at.
const INTENT_WORDS: &[&str] = &[
    "average",
    "count",
    "different",
    "display",
    "distinct",
    "each",
    "find",
    "get",
    "least",
    "most",
    "number",
    "per",
    "return",
    "tell",
    "total",
];

fn stem(word: &str) -> String {
    if let Some(base) = word.strip_suffix("ies").filter(|b| b.len() >= 2) {
        return format!("{base}y");
    }
    if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}

/// A deterministic offline stand-in for a language model.
///
/// Recognizes the three built-in prompts. Joins come from declared keys plus
/// shared key names. Phrases are single question words matched against
/// column and table name parts after crude plural stripping. The direct
/// re-rank orders candidates by word overlap with their schema text.
#[derive(Debug, Clone)]
pub struct LexicalReasoner {
    model_id: String,
}

impl Default for LexicalReasoner {
    fn default() -> Self {
        Self {
            model_id: "lexical-v1".into(),
        }
    }
}

impl LexicalReasoner {
    pub fn new() -> Self {
        Self::default()
    }
}

fn schema_from_prompt(prompt: &str) -> Result<DatabaseSchema> {
    let db_id = prompt
        .lines()
        .find_map(|l| l.strip_prefix("Database: "))
        .map(|s| s.trim().trim_end_matches(':').to_string())
        .unwrap_or_else(|| "unknown".into());
    let ddl: Vec<&str> = prompt
        .lines()
        .filter(|l| l.starts_with("CREATE TABLE"))
        .collect();
    parse_ddl(&db_id, &ddl.join(";\n"))
}

fn map_phrases(question: &str, schema: &DatabaseSchema) -> String {
    let mut seen = BTreeSet::new();
    let mut lines = Vec::new();
    for word in tokens(question) {
        if word.len() < 3 || word.chars().all(|c| c.is_ascii_digit()) {
            continue;
        }
        if is_stopword(&word) || INTENT_WORDS.contains(&word.as_str()) || !seen.insert(word.clone())
        {
            continue;
        }
        let s = stem(&word);
        let mut targets = Vec::new();
        for table in &schema.tables {
            for col in &table.columns {
                if tokens(&col.name).any(|p| stem(&p) == s) {
                    targets.push(format!("{}.{}", table.name, col.name));
                }
            }
        }
        if targets.is_empty() {
            for table in &schema.tables {
                if tokens(&table.name).any(|p| stem(&p) == s) {
                    let col = table.primary_key.first().copied().unwrap_or(0);
                    if let Some(c) = table.columns.get(col) {
                        targets.push(format!("{}.{}", table.name, c.name));
                    }
                }
            }
        }
        if targets.is_empty() {
            lines.push(format!("{word} -> N/A"));
        } else {
            lines.push(format!("{word} -> {}", targets.join(", ")));
        }
    }
    lines.join("\n")
}

fn direct_answer(prompt: &str) -> Result<String> {
    let format_err = || Error::Provider {
        message: "unrecognized re-rank prompt".into(),
        retryable: false,
    };
    let input = prompt
        .lines()
        .find_map(|l| l.strip_prefix("Input: Question "))
        .ok_or_else(format_err)?;
    let (qid, query) = input.split_once(": Text: ").ok_or_else(format_err)?;
    let keep = prompt
        .lines()
        .find(|l| l.starts_with("Output: Q "))
        .map(|l| l.matches("[DB_").count())
        .ok_or_else(format_err)?;
    let ids: Vec<&str> = prompt
        .lines()
        .filter_map(|l| {
            l.strip_prefix("Rank ")
                .and_then(|r| r.split_once(": "))
                .map(|(_, id)| id.trim())
        })
        .collect();
    let schemas = prompt
        .split_once("\nSchemas:\n")
        .map(|(_, s)| s)
        .unwrap_or("");
    let blocks: Vec<&str> = schemas.split("\nSchema ").collect();
    let words: BTreeSet<String> = tokens(query)
        .filter(|w| !is_stopword(w))
        .map(|w| stem(&w))
        .collect();
    let mut scored: Vec<(usize, usize, &str)> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let block = blocks.get(i).copied().unwrap_or("");
            let doc: BTreeSet<String> = tokens(block).map(|w| stem(&w)).collect();
            (words.intersection(&doc).count(), i, *id)
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let top: Vec<&str> = scored.iter().take(keep).map(|s| s.2).collect();
    Ok(format!("Q {qid}: {}", top.join(", ")))
}

impl ReasonerProvider for LexicalReasoner {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, prompt: &str, _params: &DecodingParams) -> Result<String> {
        if prompt.contains("Output: Q ") && prompt.contains("Ranking (Top ") {
            return direct_answer(prompt);
        }
        if prompt.contains("adjacency list") {
            let schema = schema_from_prompt(prompt)?;
            return Ok(build_join_graph_from_keys(&schema, true).to_string());
        }
        if let Some(question) = prompt.lines().find_map(|l| l.strip_prefix("Question: ")) {
            let schema = schema_from_prompt(prompt)?;
            return Ok(map_phrases(question, &schema));
        }
        Err(Error::Provider {
            message: "prompt not recognized".into(),
            retryable: false,
        })
    }
}
