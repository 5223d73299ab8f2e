//! Natural-language query routing over a repository of relational databases.
//!
//! Given a question and a set of database schemas, the router ranks the
//! databases by how likely each one is to answer the question. Ranking is done
//! in two stages:
//!
//! 1. **Retrieval**: schema documents and the question are embedded and the
//!    repository is ordered by cosine similarity.
//! 2. **Re-ranking** of the top-k candidates, either by a single direct LLM
//!    prompt or by the modular scorer: a join graph per database, a
//!    phrase-to-column mapping per (question, database), and a score built from
//!    phrase coverage, table connectivity and a semantic tie-break.
//!
//! The [`corpus`] module builds routing benchmarks from Spider/BIRD style
//! inputs and [`eval`] computes Recall@k, mAP and cluster confusion statistics.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod ranking;
pub mod reasoner;
pub mod retrieval;
pub mod schema;
pub mod scoring;
pub(crate) mod util;

pub use util::write_atomic;

pub use corpus::{EvidenceSet, QuerySample, RoutingDataset, Split};
pub use error::{Error, Result};
pub use pipeline::{GraphSource, Mode, Router, RouterConfig};
pub use ranking::{RankedItem, RankedList, Stage};
pub use reasoner::{PhraseMapping, ReasonerProvider};
pub use retrieval::{EmbeddingProvider, EmbeddingVector, RepositoryIndex};
pub use schema::{ColumnMeta, ColumnRef, DatabaseSchema, ForeignKey, SchemaGraph, TableMeta};
pub use scoring::{RerankConfig, RoutingScore};
