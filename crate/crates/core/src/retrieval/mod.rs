//! Embedding providers, the repository index and stage-1 similarity ranking.

mod embedding;
pub(crate) mod http;
mod index;

pub use embedding::{
    cosine_similarity, truncate_document, CachedEmbedder, EmbeddingProvider, EmbeddingVector,
    HashingEmbedder,
};
pub(crate) use embedding::{is_stopword, tokens};
pub use http::{HttpEmbedder, HttpEmbedderConfig};
pub use index::{
    build_index, rank_by_similarity, IndexEntry, IndexOptions, RepositoryIndex,
    INDEX_FORMAT_VERSION,
};
