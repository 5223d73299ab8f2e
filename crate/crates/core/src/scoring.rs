//! Coverage, connectivity, total and semantic scores, and the modular re-rank
//! that orders candidate databases by them.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::QuerySample;
use crate::error::{Error, Result};
use crate::ranking::{RankedItem, RankedList, Stage};
use crate::reasoner::{MappingTarget, PhraseMapping, Reasoner};
use crate::retrieval::{cosine_similarity, EmbeddingProvider};
use crate::schema::{is_connected_subset, ColumnRef, DatabaseSchema, SchemaGraph};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPhrasePolicy {
    /// No phrases means no evidence: total 0.
    #[default]
    Invalid,
    /// No phrases scores as fully covered and connected.
    Neutral,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticMode {
    /// Mean over every (phrase, candidate column) pair.
    #[default]
    AllPairs,
    /// Mean over phrases of the best candidate similarity.
    PhraseMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankConfig {
    /// Penalty exponent, at least 1.
    pub n: f64,
    /// Candidates taken from the first stage.
    pub k: usize,
    /// Let tables outside the chosen mapping connect the mapped ones.
    pub allow_steiner_tables: bool,
    pub zero_phrase_policy: ZeroPhrasePolicy,
    pub semantic_mode: SemanticMode,
    /// Assignments tried in strict mode before falling back to the relaxed check.
    pub connectivity_cap: usize,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            n: 1.0,
            k: 5,
            allow_steiner_tables: true,
            zero_phrase_policy: ZeroPhrasePolicy::Invalid,
            semantic_mode: SemanticMode::AllPairs,
            connectivity_cap: 10_000,
        }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.n.is_finite() || self.n < 1.0 {
            return Err(Error::InvalidInput(format!(
                "n must be a finite number >= 1, got {}",
                self.n
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.connectivity_cap == 0 {
            return Err(Error::InvalidInput(
                "connectivity_cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageInput {
    pub total_mappings: usize,
    pub na_mappings: usize,
    pub n: f64,
}

impl CoverageInput {
    pub fn from_mappings(mappings: &[PhraseMapping], n: f64) -> Self {
        Self {
            total_mappings: mappings.len(),
            na_mappings: mappings.iter().filter(|m| !m.is_mapped()).count(),
            n,
        }
    }
}

/// `exp(-n * na / total)`.
pub fn coverage_score(input: CoverageInput) -> Result<f64> {
    if input.total_mappings == 0 {
        return Err(Error::InvalidInput(
            "coverage of zero phrases is undefined".into(),
        ));
    }
    if input.na_mappings > input.total_mappings {
        return Err(Error::InvalidInput(format!(
            "{} unmapped phrases out of {}",
            input.na_mappings, input.total_mappings
        )));
    }
    if input.n.is_nan() || input.n < 1.0 {
        return Err(Error::InvalidInput(format!(
            "n must be >= 1, got {}",
            input.n
        )));
    }
    let x = input.na_mappings as f64 / input.total_mappings as f64;
    Ok((-input.n * x).exp())
}

pub fn total_score(coverage: f64, connectivity: u8) -> f64 {
    coverage * f64::from(connectivity)
}

/// One phrase pinned to one column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessChoice {
    pub phrase: String,
    pub column: ColumnRef,
}

/// A candidate assignment proving connectivity, with every table needed to
/// join the chosen columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub choices: Vec<WitnessChoice>,
    pub tables: BTreeSet<usize>,
}

struct Mapped<'a> {
    phrase: &'a str,
    /// First candidate column per distinct table, in candidate order.
    by_table: Vec<(usize, ColumnRef)>,
}

fn mapped_phrases<'a>(
    mappings: &'a [PhraseMapping],
    graph: &SchemaGraph,
) -> Result<Vec<Mapped<'a>>> {
    let mut out = Vec::new();
    for m in mappings {
        let mut by_table: Vec<(usize, ColumnRef)> = Vec::new();
        for c in m.column_refs() {
            if c.table_index >= graph.table_count() {
                return Err(Error::IndexOutOfRange {
                    what: "table",
                    index: c.table_index,
                    limit: graph.table_count(),
                });
            }
            if !by_table.iter().any(|(t, _)| *t == c.table_index) {
                by_table.push((c.table_index, c));
            }
        }
        if !by_table.is_empty() {
            out.push(Mapped {
                phrase: &m.phrase,
                by_table,
            });
        }
    }
    Ok(out)
}

/// Whether some one-candidate-per-phrase assignment of the mapped phrases
/// lands on joinable tables.
///
/// In Steiner mode the chosen tables need only be mutually reachable in the
/// full graph. In strict mode the subgraph induced by the chosen tables must
/// itself be connected; after `connectivity_cap` assignments the Steiner check
/// is used instead. Unmapped phrases are ignored, and at most one distinct
/// table among all candidates counts as connected.
pub fn connectivity_score(
    mappings: &[PhraseMapping],
    graph: &SchemaGraph,
    config: &RerankConfig,
) -> Result<(u8, Option<Witness>)> {
    let mapped = mapped_phrases(mappings, graph)?;
    if mapped.is_empty() {
        return Ok((1, None));
    }
    let distinct: BTreeSet<usize> = mapped
        .iter()
        .flat_map(|m| m.by_table.iter().map(|(t, _)| *t))
        .collect();
    if distinct.len() <= 1 {
        let choices = mapped
            .iter()
            .map(|m| WitnessChoice {
                phrase: m.phrase.to_string(),
                column: m.by_table[0].1,
            })
            .collect();
        return Ok((
            1,
            Some(Witness {
                choices,
                tables: distinct,
            }),
        ));
    }
    if !config.allow_steiner_tables {
        match strict_search(&mapped, graph, config.connectivity_cap)? {
            Some(found) => return Ok(found),
            None => log::warn!(
                "{}: strict connectivity gave up after {} assignments; using the relaxed check",
                graph.db_id,
                config.connectivity_cap
            ),
        }
    }
    steiner_search(&mapped, graph)
}

/// `Some` when the search finished, `None` when the cap was hit.
fn strict_search(
    mapped: &[Mapped<'_>],
    graph: &SchemaGraph,
    cap: usize,
) -> Result<Option<(u8, Option<Witness>)>> {
    let mut odometer = vec![0usize; mapped.len()];
    let mut tried = 0usize;
    loop {
        if tried == cap {
            return Ok(None);
        }
        tried += 1;
        let tables: BTreeSet<usize> = mapped
            .iter()
            .zip(&odometer)
            .map(|(m, &i)| m.by_table[i].0)
            .collect();
        if is_connected_subset(graph, &tables)? {
            let choices = mapped
                .iter()
                .zip(&odometer)
                .map(|(m, &i)| WitnessChoice {
                    phrase: m.phrase.to_string(),
                    column: m.by_table[i].1,
                })
                .collect();
            return Ok(Some((1, Some(Witness { choices, tables }))));
        }
        let mut pos = 0;
        loop {
            if pos == mapped.len() {
                return Ok(Some((0, None)));
            }
            odometer[pos] += 1;
            if odometer[pos] < mapped[pos].by_table.len() {
                break;
            }
            odometer[pos] = 0;
            pos += 1;
        }
    }
}

/// Exact for reachability: an assignment exists iff one connected component
/// holds a candidate table of every phrase.
fn steiner_search(mapped: &[Mapped<'_>], graph: &SchemaGraph) -> Result<(u8, Option<Witness>)> {
    let comp = graph.components();
    let shared = mapped
        .iter()
        .map(|m| {
            m.by_table
                .iter()
                .map(|(t, _)| comp[*t])
                .collect::<BTreeSet<_>>()
        })
        .reduce(|a, b| a.intersection(&b).copied().collect())
        .unwrap_or_default();
    let Some(&c) = shared.iter().next() else {
        return Ok((0, None));
    };
    let choices: Vec<WitnessChoice> = mapped
        .iter()
        .map(|m| {
            let (_, col) = m
                .by_table
                .iter()
                .find(|(t, _)| comp[*t] == c)
                .expect("component shared by all phrases");
            WitnessChoice {
                phrase: m.phrase.to_string(),
                column: *col,
            }
        })
        .collect();
    let terminals: BTreeSet<usize> = choices.iter().map(|w| w.column.table_index).collect();
    let tables = graph
        .connecting_tables(&terminals)?
        .expect("terminals share a component");
    Ok((1, Some(Witness { choices, tables })))
}

/// `Table.column — description`, or `Table.column` without a description.
pub fn column_document(schema: &DatabaseSchema, col: ColumnRef) -> String {
    let name = schema.qualified_name(col);
    match schema.column(col).and_then(|c| c.description.as_deref()) {
        Some(d) if !d.trim().is_empty() => format!("{name} — {d}"),
        _ => name,
    }
}

/// Mean cosine similarity between phrases and their candidate column
/// documents; 0 when no phrase is mapped.
pub fn semantic_score(
    mappings: &[PhraseMapping],
    schema: &DatabaseSchema,
    embedder: &dyn EmbeddingProvider,
    mode: SemanticMode,
) -> Result<f64> {
    let mapped: Vec<&PhraseMapping> = mappings.iter().filter(|m| m.is_mapped()).collect();
    if mapped.is_empty() {
        return Ok(0.0);
    }
    let mut texts: Vec<String> = mapped.iter().map(|m| m.phrase.clone()).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut doc_slot: BTreeMap<ColumnRef, usize> = BTreeMap::new();
    for (p, m) in mapped.iter().enumerate() {
        for c in m.column_refs() {
            let slot = *doc_slot.entry(c).or_insert_with(|| {
                texts.push(column_document(schema, c));
                texts.len() - 1
            });
            pairs.push((p, slot));
        }
    }
    let vectors = embedder.embed_batch(&texts)?;
    if vectors.len() != texts.len() {
        return Err(Error::Provider {
            message: format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                vectors.len()
            ),
            retryable: false,
        });
    }
    let sims = pairs
        .iter()
        .map(|&(p, d)| Ok((p, cosine_similarity(&vectors[p], &vectors[d])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(match mode {
        SemanticMode::AllPairs => sims.iter().map(|(_, s)| s).sum::<f64>() / sims.len() as f64,
        SemanticMode::PhraseMax => {
            let mut best = vec![f64::NEG_INFINITY; mapped.len()];
            for (p, s) in sims {
                best[p] = best[p].max(s);
            }
            best.iter().sum::<f64>() / best.len() as f64
        }
    })
}

/// Score components for one (query, database) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingScore {
    pub db_id: String,
    pub coverage: f64,
    pub connectivity: u8,
    pub total: f64,
    pub semantic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub mappings: Vec<PhraseMapping>,
    pub total_mappings: usize,
    pub na_mappings: usize,
    /// Set when scoring this database failed; the total is then 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RoutingScore {
    fn failed(db_id: &str, error: &Error) -> Self {
        Self {
            db_id: db_id.to_string(),
            coverage: 1.0,
            connectivity: 0,
            total: 0.0,
            semantic: 0.0,
            witness: None,
            mappings: Vec::new(),
            total_mappings: 0,
            na_mappings: 0,
            error: Some(error.to_string()),
        }
    }
}

/// Scores one database from its phrase mappings.
pub fn score_mappings(
    db_id: &str,
    mappings: Vec<PhraseMapping>,
    schema: &DatabaseSchema,
    graph: &SchemaGraph,
    embedder: &dyn EmbeddingProvider,
    config: &RerankConfig,
) -> Result<RoutingScore> {
    let cov = CoverageInput::from_mappings(&mappings, config.n);
    if mappings.is_empty() {
        let connectivity = match config.zero_phrase_policy {
            ZeroPhrasePolicy::Invalid => 0,
            ZeroPhrasePolicy::Neutral => 1,
        };
        return Ok(RoutingScore {
            db_id: db_id.to_string(),
            coverage: 1.0,
            connectivity,
            total: total_score(1.0, connectivity),
            semantic: 0.0,
            witness: None,
            mappings,
            total_mappings: 0,
            na_mappings: 0,
            error: None,
        });
    }
    let coverage = coverage_score(cov)?;
    let (connectivity, witness) = connectivity_score(&mappings, graph, config)?;
    let semantic = semantic_score(&mappings, schema, embedder, config.semantic_mode)?;
    Ok(RoutingScore {
        db_id: db_id.to_string(),
        coverage,
        connectivity,
        total: total_score(coverage, connectivity),
        semantic,
        witness,
        mappings,
        total_mappings: cov.total_mappings,
        na_mappings: cov.na_mappings,
        error: None,
    })
}

/// Orders scores by total, then semantic (both descending), then db id.
pub fn order_scores(scores: &mut [RoutingScore]) {
    scores.sort_by(|a, b| {
        b.total
            .total_cmp(&a.total)
            .then(b.semantic.total_cmp(&a.semantic))
            .then_with(|| a.db_id.cmp(&b.db_id))
    });
}

/// Re-ranks `candidates` by mapping the query onto each candidate schema.
///
/// A database whose mapping or scoring fails is kept with total 0 and the
/// error recorded in its score. A replay miss aborts the whole query.
pub fn modular_rerank(
    reasoner: &Reasoner,
    embedder: &dyn EmbeddingProvider,
    query: &QuerySample,
    candidates: &RankedList,
    schemas: &BTreeMap<String, DatabaseSchema>,
    graphs: &BTreeMap<String, SchemaGraph>,
    config: &RerankConfig,
) -> Result<RankedList> {
    config.validate()?;
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidates to re-rank".into()));
    }
    let ids: Vec<&str> = candidates.db_ids().collect();
    let mut scores: Vec<RoutingScore> = ids
        .par_iter()
        .map(|id| {
            let scored = (|| {
                let schema = schemas
                    .get(*id)
                    .ok_or_else(|| Error::UnknownDatabase(id.to_string()))?;
                let graph = graphs
                    .get(*id)
                    .ok_or_else(|| Error::UnknownDatabase(id.to_string()))?;
                let mappings = reasoner.map_query_phrases(&query.text, schema)?;
                score_mappings(id, mappings, schema, graph, embedder, config)
            })();
            match scored {
                Err(e @ Error::MissingRecording { .. }) => Err(e),
                Err(e) => {
                    log::warn!("query {} on {id}: {e}", query.query_id);
                    Ok(RoutingScore::failed(id, &e))
                }
                ok => ok,
            }
        })
        .collect::<Result<_>>()?;
    order_scores(&mut scores);
    Ok(RankedList {
        query_id: candidates.query_id.clone(),
        stage: Stage::ModularRerank,
        items: scores
            .into_iter()
            .map(|s| RankedItem {
                db_id: s.db_id.clone(),
                score: s.total,
                details: Some(s),
            })
            .collect(),
    })
}

/// Every table reachable from every other, by transitive closure. Used as an
/// independent reference in tests.
#[doc(hidden)]
pub fn brute_force_connectivity(
    mappings: &[PhraseMapping],
    graph: &SchemaGraph,
    steiner: bool,
) -> u8 {
    let n = graph.table_count();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    let closure = |allowed: &dyn Fn(usize) -> bool| {
        let mut r = reach.clone();
        for (a, b) in graph.edges() {
            if allowed(a) && allowed(b) {
                r[a][b] = true;
                r[b][a] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if r[i][k] && r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        r
    };
    let lists: Vec<Vec<usize>> = mappings
        .iter()
        .map(|m| m.column_refs().map(|c| c.table_index).collect::<Vec<_>>())
        .filter(|l| !l.is_empty())
        .collect();
    let full = closure(&|_| true);
    let total: usize = lists.iter().map(Vec::len).product();
    for mut code in 0..total {
        let mut chosen = BTreeSet::new();
        for l in &lists {
            chosen.insert(l[code % l.len()]);
            code /= l.len();
        }
        let r = if steiner {
            full.clone()
        } else {
            closure(&|t| chosen.contains(&t))
        };
        if chosen.iter().all(|&a| chosen.iter().all(|&b| r[a][b])) {
            return 1;
        }
    }
    u8::from(total == 0 || lists.is_empty())
}

/// Builds a mapping from `(table, column)` index pairs; handy in tests.
#[doc(hidden)]
pub fn mapping_from_refs(
    schema: &DatabaseSchema,
    phrase: &str,
    refs: &[ColumnRef],
) -> PhraseMapping {
    if refs.is_empty() {
        return PhraseMapping::not_mapped(phrase);
    }
    PhraseMapping {
        phrase: phrase.to_string(),
        candidates: refs
            .iter()
            .map(|&c| MappingTarget::Column {
                table: schema.tables[c.table_index].name.clone(),
                column: schema.tables[c.table_index].columns[c.column_index]
                    .name
                    .clone(),
                column_ref: c,
                kind: crate::reasoner::MatchKind::Column,
            })
            .collect(),
    }
}
