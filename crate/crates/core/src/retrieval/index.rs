use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{RankedItem, RankedList, Stage};
use crate::schema::{document, DatabaseSchema, DocumentStyle};
use crate::util::write_atomic;

use super::{cosine_similarity, truncate_document, EmbeddingProvider, EmbeddingVector};

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexOptions {
    pub include_metadata: bool,
    pub document_style: DocumentStyle,
    /// Documents longer than this many characters are cut, keeping the head.
    pub max_document_chars: Option<usize>,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            include_metadata: true,
            document_style: DocumentStyle::Ddl,
            max_document_chars: None,
        }
    }
}

impl IndexOptions {
    pub fn document(&self, schema: &DatabaseSchema) -> String {
        let doc = document::render(schema, self.include_metadata, self.document_style);
        match self.max_document_chars {
            Some(max) => truncate_document(&doc, max).into_owned(),
            None => doc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub document: String,
    pub vector: EmbeddingVector,
}

/// Embedded schema documents for a whole repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepositoryIndex {
    pub format_version: u32,
    pub model_id: String,
    pub dimension: usize,
    pub options: IndexOptions,
    pub entries: BTreeMap<String, IndexEntry>,
}

impl RepositoryIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let index: Self = serde_json::from_str(&crate::util::read_to_string(path)?)?;
        if index.format_version != INDEX_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "{}: unsupported index format {}",
                path.display(),
                index.format_version
            )));
        }
        if let Some((id, _)) = index
            .entries
            .iter()
            .find(|(_, e)| e.vector.dimension() != index.dimension)
        {
            return Err(Error::InvalidInput(format!(
                "index entry `{id}` has the wrong dimension"
            )));
        }
        Ok(index)
    }
}

/// Serializes and embeds every schema in `repo`.
pub fn build_index(
    repo: &[DatabaseSchema],
    provider: &dyn EmbeddingProvider,
    options: IndexOptions,
) -> Result<RepositoryIndex> {
    if repo.is_empty() {
        return Err(Error::InvalidInput("empty repository".into()));
    }
    crate::schema::validate_repository(repo)?;
    let documents: Vec<String> = repo.iter().map(|s| options.document(s)).collect();
    let vectors = provider.embed_batch(&documents)?;
    if vectors.len() != repo.len() {
        return Err(Error::Provider {
            message: format!("asked for {} embeddings, got {}", repo.len(), vectors.len()),
            retryable: false,
        });
    }
    let dimension = vectors[0].dimension();
    if let Some(v) = vectors.iter().find(|v| v.dimension() != dimension) {
        return Err(Error::DimensionMismatch {
            left: dimension,
            right: v.dimension(),
        });
    }
    let entries = repo
        .iter()
        .zip(documents)
        .zip(vectors)
        .map(|((s, document), vector)| (s.db_id.clone(), IndexEntry { document, vector }))
        .collect();
    Ok(RepositoryIndex {
        format_version: INDEX_FORMAT_VERSION,
        model_id: provider.model_id().to_string(),
        dimension,
        options,
        entries,
    })
}

/// Orders every indexed database by cosine similarity to the question,
/// descending, ties broken by ascending `db_id`.
pub fn rank_by_similarity(
    query_id: &str,
    query: &str,
    index: &RepositoryIndex,
    provider: &dyn EmbeddingProvider,
) -> Result<RankedList> {
    if provider.model_id() != index.model_id {
        return Err(Error::ModelMismatch {
            index: index.model_id.clone(),
            provider: provider.model_id().to_string(),
        });
    }
    let q = provider.embed(query)?;
    let items = index
        .entries
        .iter()
        .map(|(id, e)| {
            Ok(RankedItem::new(
                id.clone(),
                cosine_similarity(&q, &e.vector)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedList::from_scores(query_id, Stage::Retrieval, items))
}
