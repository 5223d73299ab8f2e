//! End-to-end routing: retrieval, optional re-ranking and batch evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::QuerySample;
use crate::error::{Error, Result};
use crate::eval::{ablate_metadata, ConfigEcho, EvalRecord, EvalReport, MetadataAblation};
use crate::ranking::{top_k, RankedItem, RankedList, Stage};
use crate::reasoner::{PromptSet, Reasoner, ReasonerOptions, ReasonerProvider};
use crate::retrieval::{
    build_index, rank_by_similarity, EmbeddingProvider, IndexOptions, RepositoryIndex,
};
use crate::schema::{build_join_graph_from_keys, validate_repository, DatabaseSchema, SchemaGraph};
use crate::scoring::{modular_rerank, RerankConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Retrieval,
    DirectRerank,
    #[default]
    ModularRerank,
}

impl Mode {
    pub fn stage(self) -> Stage {
        match self {
            Mode::Retrieval => Stage::Retrieval,
            Mode::DirectRerank => Stage::DirectRerank,
            Mode::ModularRerank => Stage::ModularRerank,
        }
    }

    pub fn needs_reasoner(self) -> bool {
        self != Mode::Retrieval
    }
}

/// Where join graphs come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphSource {
    /// Ask the reasoner; failures are errors.
    Llm,
    /// Declared foreign keys plus shared key-column names.
    Keys,
    /// Ask the reasoner and fall back to keys when it fails.
    #[default]
    LlmWithKeyFallback,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouterConfig {
    pub mode: Mode,
    pub rerank: RerankConfig,
    pub index: IndexOptions,
    pub graph_source: GraphSource,
    pub reasoner: ReasonerOptions,
    /// Put the gold database into the re-rank candidates when retrieval missed it.
    pub oracle_injection: bool,
}

impl RouterConfig {
    /// Sets metadata use for both documents and prompts.
    pub fn with_metadata(mut self, include: bool) -> Self {
        self.index.include_metadata = include;
        self.reasoner.include_metadata = include;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.rerank.validate()
    }
}

/// Result of routing one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOutcome {
    /// Full first-stage ranking.
    pub retrieval: RankedList,
    /// Ranking produced by the configured mode.
    pub output: RankedList,
}

pub struct Router {
    config: RouterConfig,
    schemas: BTreeMap<String, DatabaseSchema>,
    index: RepositoryIndex,
    embedder: Arc<dyn EmbeddingProvider>,
    reasoner: Option<Reasoner>,
    graphs: Mutex<BTreeMap<String, SchemaGraph>>,
}

impl Router {
    /// Embeds the repository and prepares routing.
    pub fn new(
        repository: Vec<DatabaseSchema>,
        embedder: Arc<dyn EmbeddingProvider>,
        reasoner: Option<Arc<dyn ReasonerProvider>>,
        config: RouterConfig,
    ) -> Result<Self> {
        let index = build_index(&repository, embedder.as_ref(), config.index)?;
        Self::with_index(repository, index, embedder, reasoner, config)
    }

    /// Uses a previously built index, which must cover the repository and
    /// come from the same embedding model.
    pub fn with_index(
        repository: Vec<DatabaseSchema>,
        index: RepositoryIndex,
        embedder: Arc<dyn EmbeddingProvider>,
        reasoner: Option<Arc<dyn ReasonerProvider>>,
        config: RouterConfig,
    ) -> Result<Self> {
        config.validate()?;
        validate_repository(&repository)?;
        if index.model_id != embedder.model_id() {
            return Err(Error::ModelMismatch {
                index: index.model_id.clone(),
                provider: embedder.model_id().to_string(),
            });
        }
        let schemas: BTreeMap<String, DatabaseSchema> = repository
            .into_iter()
            .map(|s| (s.db_id.clone(), s))
            .collect();
        let indexed: BTreeSet<&String> = index.entries.keys().collect();
        if let Some(missing) = schemas.keys().find(|id| !indexed.contains(id)) {
            return Err(Error::InvalidInput(format!(
                "index has no entry for `{missing}`"
            )));
        }
        if config.mode.needs_reasoner() && reasoner.is_none() {
            return Err(Error::InvalidInput(format!(
                "{:?} needs a reasoner",
                config.mode
            )));
        }
        let reasoner = reasoner.map(|p| Reasoner::new(p).with_options(config.reasoner));
        Ok(Self {
            config,
            schemas,
            index,
            embedder,
            reasoner,
            graphs: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.reasoner = self.reasoner.map(|r| r.with_prompts(prompts));
        self
    }

    pub fn config(&self) -> &RouterConfig {
        &self.config
    }

    pub fn index(&self) -> &RepositoryIndex {
        &self.index
    }

    pub fn schemas(&self) -> &BTreeMap<String, DatabaseSchema> {
        &self.schemas
    }

    pub fn config_echo(&self) -> ConfigEcho {
        ConfigEcho {
            stage: self.config.mode.stage(),
            k: self.config.rerank.k,
            n: self.config.rerank.n,
            embedder_id: self.embedder.model_id().to_string(),
            reasoner_id: self
                .reasoner
                .as_ref()
                .filter(|_| self.config.mode.needs_reasoner())
                .map(|r| r.provider().model_id().to_string()),
            include_metadata: self.config.index.include_metadata,
            allow_steiner_tables: self.config.rerank.allow_steiner_tables,
            oracle_injection: self.config.oracle_injection,
        }
    }

    fn reasoner(&self) -> Result<&Reasoner> {
        self.reasoner
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("no reasoner configured".into()))
    }

    /// Join graph of `db_id`, inferred once and cached.
    pub fn graph(&self, db_id: &str) -> Result<SchemaGraph> {
        if let Some(g) = self.graphs.lock().expect("graph cache").get(db_id) {
            return Ok(g.clone());
        }
        let schema = self
            .schemas
            .get(db_id)
            .ok_or_else(|| Error::UnknownDatabase(db_id.to_string()))?;
        let graph = match self.config.graph_source {
            GraphSource::Keys => build_join_graph_from_keys(schema, true),
            GraphSource::Llm => self.reasoner()?.infer_join_adjacency(schema)?,
            GraphSource::LlmWithKeyFallback => {
                match self.reasoner()?.infer_join_adjacency(schema) {
                    Ok(g) => g,
                    Err(e @ Error::MissingRecording { .. }) => return Err(e),
                    Err(e) => {
                        log::warn!("{db_id}: join inference failed ({e}); using declared keys");
                        build_join_graph_from_keys(schema, true)
                    }
                }
            }
        };
        self.graphs
            .lock()
            .expect("graph cache")
            .insert(db_id.to_string(), graph.clone());
        Ok(graph)
    }

    fn candidates(&self, query: &QuerySample, retrieval: &RankedList) -> RankedList {
        let mut candidates = top_k(retrieval, self.config.rerank.k);
        let gold = query.gold_db_id.as_str();
        if self.config.oracle_injection && candidates.rank_of(gold).is_none() {
            if let Some(item) = retrieval.items.iter().find(|i| i.db_id == gold) {
                candidates.items.pop();
                candidates.items.push(item.clone());
            }
        }
        candidates
    }

    pub fn route(&self, query: &QuerySample) -> Result<RouteOutcome> {
        let retrieval = rank_by_similarity(
            &query.query_id,
            &query.text,
            &self.index,
            self.embedder.as_ref(),
        )?;
        let output = match self.config.mode {
            Mode::Retrieval => retrieval.clone(),
            Mode::DirectRerank => {
                let candidates = self.candidates(query, &retrieval);
                match self
                    .reasoner()?
                    .direct_rerank(query, &candidates, &self.schemas)
                {
                    Ok(result) => {
                        let n = result.top.len();
                        RankedList {
                            query_id: query.query_id.clone(),
                            stage: Stage::DirectRerank,
                            items: result
                                .top
                                .into_iter()
                                .enumerate()
                                .map(|(i, db)| RankedItem::new(db, (n - i) as f64 / n as f64))
                                .collect(),
                        }
                    }
                    Err(e) if !matches!(e, Error::MissingRecording { .. }) => {
                        log::warn!(
                            "query {}: direct re-rank failed ({e}); keeping retrieval order",
                            query.query_id
                        );
                        let mut kept = top_k(&candidates, 3);
                        kept.stage = Stage::DirectRerank;
                        kept
                    }
                    Err(e) => return Err(e),
                }
            }
            Mode::ModularRerank => {
                let candidates = self.candidates(query, &retrieval);
                let graphs = candidates
                    .db_ids()
                    .map(|id| Ok((id.to_string(), self.graph(id)?)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                modular_rerank(
                    self.reasoner()?,
                    self.embedder.as_ref(),
                    query,
                    &candidates,
                    &self.schemas,
                    &graphs,
                    &self.config.rerank,
                )?
            }
        };
        Ok(RouteOutcome { retrieval, output })
    }

    /// Routes every query, in input order.
    pub fn route_all(&self, queries: &[QuerySample]) -> Result<Vec<RouteOutcome>> {
        queries.par_iter().map(|q| self.route(q)).collect()
    }

    pub fn evaluate(&self, queries: &[QuerySample]) -> Result<EvalReport> {
        self.evaluate_with_outcomes(queries).map(|(r, _)| r)
    }

    pub fn evaluate_with_outcomes(
        &self,
        queries: &[QuerySample],
    ) -> Result<(EvalReport, Vec<RouteOutcome>)> {
        if queries.is_empty() {
            return Err(Error::InvalidInput("no queries to evaluate".into()));
        }
        if let Some(q) = queries
            .iter()
            .find(|q| !self.schemas.contains_key(&q.gold_db_id))
        {
            return Err(Error::UnknownDatabase(q.gold_db_id.clone()));
        }
        let outcomes = self.route_all(queries)?;
        let records = queries
            .iter()
            .zip(&outcomes)
            .map(|(q, o)| {
                EvalRecord::from_rankings(
                    &o.output,
                    &o.retrieval,
                    &q.gold_db_id,
                    self.config.rerank.k,
                )
            })
            .collect();
        Ok((EvalReport::new(self.config_echo(), records)?, outcomes))
    }
}

/// Evaluates `queries` twice, with and without metadata in documents and
/// prompts; the index is rebuilt for each run.
pub fn run_metadata_ablation(
    repository: &[DatabaseSchema],
    embedder: Arc<dyn EmbeddingProvider>,
    reasoner: Option<Arc<dyn ReasonerProvider>>,
    config: &RouterConfig,
    queries: &[QuerySample],
) -> Result<MetadataAblation> {
    ablate_metadata(|include| {
        let router = Router::new(
            repository.to_vec(),
            embedder.clone(),
            reasoner.clone(),
            config.clone().with_metadata(include),
        )?;
        router.evaluate(queries)
    })
}
