//! LLM-backed sub-tasks: join-graph inference, question-phrase to column
//! mapping and the direct top-k re-rank baseline.
//!
//! Every task builds its prompt from a template in [`PromptSet`], sends it to
//! a [`ReasonerProvider`] and parses the answer strictly. Format violations are
//! retried with a one-line reminder appended to the prompt.

mod direct;
mod http;
mod join;
mod mock;
mod phrases;
mod prompts;
mod transcript;

pub use direct::{parse_direct_rerank, DirectRerankResult};
pub use http::{HttpReasoner, HttpReasonerConfig};
pub use join::parse_adjacency;
pub use mock::{LexicalReasoner, ScriptedReasoner};
pub use phrases::{parse_phrase_mappings, MappingTarget, MatchKind, PhraseMapping};
pub use prompts::PromptSet;
pub use transcript::{RecordReplayReasoner, TranscriptEntry, TranscriptMode};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::QuerySample;
use crate::error::{Error, Result};
use crate::ranking::RankedList;
use crate::schema::{document, DatabaseSchema, DocumentStyle, SchemaGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_output_tokens: 1024,
        }
    }
}

/// A text-completion back-end.
pub trait ReasonerProvider: Send + Sync {
    fn model_id(&self) -> &str;

    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String>;
}

impl<P: ReasonerProvider + ?Sized> ReasonerProvider for Arc<P> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String> {
        (**self).complete(prompt, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReasonerOptions {
    pub params: DecodingParams,
    /// Attempts per task, including the first.
    pub max_attempts: u32,
    /// Render column descriptions and evidence into prompts.
    pub include_metadata: bool,
}

impl Default for ReasonerOptions {
    fn default() -> Self {
        Self {
            params: DecodingParams::default(),
            max_attempts: 3,
            include_metadata: true,
        }
    }
}

/// A provider plus the prompt templates and options for the three tasks.
#[derive(Clone)]
pub struct Reasoner {
    provider: Arc<dyn ReasonerProvider>,
    prompts: PromptSet,
    options: ReasonerOptions,
}

fn is_format_violation(e: &Error) -> bool {
    matches!(
        e,
        Error::Format(_) | Error::NotACandidate(_) | Error::IndexOutOfRange { .. }
    )
}

impl Reasoner {
    pub fn new(provider: Arc<dyn ReasonerProvider>) -> Self {
        Self {
            provider,
            prompts: PromptSet::default(),
            options: ReasonerOptions::default(),
        }
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    pub fn with_options(mut self, options: ReasonerOptions) -> Self {
        self.options = options;
        self
    }

    pub fn provider(&self) -> &Arc<dyn ReasonerProvider> {
        &self.provider
    }

    pub fn options(&self) -> &ReasonerOptions {
        &self.options
    }

    fn schema_text(&self, schema: &DatabaseSchema) -> String {
        document::render(schema, self.options.include_metadata, DocumentStyle::Ddl)
    }

    /// Sends `prompt` and parses the answer, retrying format violations.
    fn ask<T>(&self, prompt: &str, reminder: &str, parse: impl Fn(&str) -> Result<T>) -> Result<T> {
        let attempts = self.options.max_attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            let text = if attempt == 0 {
                prompt.to_string()
            } else {
                format!("{prompt}\n\nReminder: {reminder}")
            };
            let response = self.provider.complete(&text, &self.options.params)?;
            match parse(&response) {
                Ok(v) => return Ok(v),
                Err(e) if is_format_violation(&e) => {
                    log::warn!("attempt {}/{attempts}: {e}", attempt + 1);
                    last = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// Asks for the join adjacency list of `schema`. The answer is
    /// symmetrized and checked against the table count.
    pub fn infer_join_adjacency(&self, schema: &DatabaseSchema) -> Result<SchemaGraph> {
        let table_list: Vec<String> = schema
            .tables
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{i}: {}", t.name))
            .collect();
        let prompt = self.prompts.render_join(
            &self.schema_text(schema),
            &table_list.join("\n"),
            schema.tables.len().saturating_sub(1),
        );
        let n = schema.tables.len();
        self.ask(
            &prompt,
            "answer only with an adjacency list such as {0: {1}; 1: {0}} using table numbers in range.",
            |text| {
                let lists = parse_adjacency(text, n)?;
                SchemaGraph::from_adjacency(schema.db_id.clone(), n, &lists)
            },
        )
    }

    /// Extracts question phrases and the columns they map to in `schema`.
    pub fn map_query_phrases(
        &self,
        query: &str,
        schema: &DatabaseSchema,
    ) -> Result<Vec<PhraseMapping>> {
        let prompt = self
            .prompts
            .render_phrases(&self.schema_text(schema), query);
        self.ask(
            &prompt,
            "answer only with lines of the form `span -> Table.Column` or `span -> N/A`.",
            |text| parse_phrase_mappings(text, query, schema),
        )
    }

    /// The direct re-rank baseline: the model picks the best three of the
    /// candidates in one prompt.
    pub fn direct_rerank(
        &self,
        query: &QuerySample,
        candidates: &RankedList,
        schemas: &BTreeMap<String, DatabaseSchema>,
    ) -> Result<DirectRerankResult> {
        if candidates.is_empty() {
            return Err(Error::InvalidInput("no candidates to re-rank".into()));
        }
        let ids: Vec<String> = candidates.db_ids().map(str::to_string).collect();
        let docs = ids
            .iter()
            .map(|id| {
                schemas
                    .get(id)
                    .map(|s| self.schema_text(s))
                    .ok_or_else(|| Error::UnknownDatabase(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let keep = ids.len().min(3);
        let prompt = self
            .prompts
            .render_direct(&query.query_id, &query.text, &ids, &docs, keep);
        let reminder = format!(
            "answer with exactly one line `Q {}: ` followed by {keep} distinct DB ids from the initial ranking, comma separated.",
            query.query_id
        );
        self.ask(&prompt, &reminder, |text| {
            parse_direct_rerank(text, &query.query_id, &ids, keep)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::{RankedItem, Stage};
    use crate::schema::fixtures;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Returns scripted responses in order, then repeats the last one.
    struct Sequence {
        responses: Vec<&'static str>,
        calls: AtomicUsize,
    }

    impl ReasonerProvider for Sequence {
        fn model_id(&self) -> &str {
            "sequence"
        }

        fn complete(&self, _prompt: &str, _params: &DecodingParams) -> Result<String> {
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.responses[i.min(self.responses.len() - 1)].to_string())
        }
    }

    fn schemas(list: &RankedList) -> BTreeMap<String, DatabaseSchema> {
        list.db_ids()
            .map(|id| {
                let mut s = fixtures::activity();
                s.db_id = id.to_string();
                (id.to_string(), s)
            })
            .collect()
    }

    fn sequence(responses: Vec<&'static str>) -> Arc<Sequence> {
        Arc::new(Sequence {
            responses,
            calls: AtomicUsize::new(0),
        })
    }

    #[test]
    fn join_adjacency_from_numbered_list() {
        let r = Reasoner::new(sequence(vec![
            "{0: {1, 2}; 1: {0, 3}; 2: {0, 4}; 3: {1}; 4: {2}}",
        ]));
        let g = r.infer_join_adjacency(&fixtures::activity()).unwrap();
        assert_eq!(
            g.to_string(),
            "{0: {1, 2}, 1: {0, 3}, 2: {0, 4}, 3: {1}, 4: {2}}"
        );
    }

    #[test]
    fn join_adjacency_is_symmetrized() {
        let schema =
            crate::schema::parse_ddl("d", "CREATE TABLE a (x INT); CREATE TABLE b (y INT);")
                .unwrap();
        let r = Reasoner::new(sequence(vec!["{0:{1}}"]));
        assert_eq!(
            r.infer_join_adjacency(&schema).unwrap().to_string(),
            "{0: {1}, 1: {0}}"
        );

        let single = crate::schema::parse_ddl("d", "CREATE TABLE a (x INT)").unwrap();
        let r = Reasoner::new(sequence(vec!["{0: {}}"]));
        assert_eq!(
            r.infer_join_adjacency(&single).unwrap().to_string(),
            "{0: {}}"
        );
    }

    #[test]
    fn retries_then_succeeds() {
        let provider = sequence(vec![
            "sorry, I cannot",
            "{0: {1, 2}, 1: {0}, 2: {0}, 3: {}, 4: {}}",
        ]);
        let r = Reasoner::new(provider.clone());
        let g = r.infer_join_adjacency(&fixtures::activity()).unwrap();
        assert!(g.has_edge(0, 2));
        assert_eq!(provider.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn gives_up_after_max_attempts() {
        let provider = sequence(vec!["{0: {9}}"]);
        let r = Reasoner::new(provider.clone());
        assert!(matches!(
            r.infer_join_adjacency(&fixtures::activity()),
            Err(Error::IndexOutOfRange { index: 9, .. })
        ));
        assert_eq!(provider.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn direct_rerank_paths() {
        let candidates = RankedList::from_scores(
            "7",
            Stage::Retrieval,
            ["book_2", "book_review", "book_press", "music_1", "pets_1"]
                .iter()
                .enumerate()
                .map(|(i, d)| RankedItem::new(*d, 1.0 - i as f64 * 0.1))
                .collect(),
        );
        let lookup = schemas(&candidates);
        let q = QuerySample::new("7", "How many books are there?", "book_2");

        let ok = Reasoner::new(sequence(vec!["Q 7: book_2, book_review, book_press"]));
        let res = ok.direct_rerank(&q, &candidates, &lookup).unwrap();
        assert_eq!(res.top, ["book_2", "book_review", "book_press"]);

        let two = Reasoner::new(sequence(vec!["Q 7: book_2, book_review"]));
        assert!(matches!(
            two.direct_rerank(&q, &candidates, &lookup),
            Err(Error::Format(_))
        ));

        let outside = Reasoner::new(sequence(vec!["Q 7: book_2, book_review, geo"]));
        assert!(matches!(
            outside.direct_rerank(&q, &candidates, &lookup),
            Err(Error::NotACandidate(id)) if id == "geo"
        ));
    }

    #[test]
    fn direct_prompt_matches_template() {
        let provider =
            Arc::new(ScriptedReasoner::new("scripted").respond_when(&["Q 7:"], "Q 7: a, b, c"));
        let r = Reasoner::new(provider.clone());
        let candidates = RankedList::from_scores(
            "7",
            Stage::Retrieval,
            ["a", "b", "c", "d", "e"]
                .iter()
                .map(|d| RankedItem::new(*d, 0.5))
                .collect(),
        );
        let lookup = schemas(&candidates);
        r.direct_rerank(&QuerySample::new("7", "q?", "a"), &candidates, &lookup)
            .unwrap();
        let prompt = provider.prompts().pop().unwrap();
        assert!(prompt.starts_with("You are an expert DB Administrator"));
        assert!(prompt.contains("an initial ranking of the top 5 DBs deemed most relevant"));
        assert!(prompt.contains("provide a revised ranking of the top 3 DBs"));
        assert!(prompt
            .contains("Input: Question 7: Text: q?\nRanking (Top 5):\nRank 1: a\nRank 2: b\n"));
        assert!(prompt.contains("Schemas:\nSchema 1:\nDatabase: a:\n"));
        assert!(prompt.contains("Output: Q 7: [DB_1], [DB_2], [DB_3]\n"));
        assert!(prompt.contains(
            "Rules: Rank 1 must be the *undisputed* best match. All 3 DBs must be distinct and from the initial ranking. Do not violate the output format or add extra text."
        ));
    }
}
