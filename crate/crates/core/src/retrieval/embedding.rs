use std::borrow::Cow;
use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{sha256_hex, write_atomic};

/// A dense embedding. Always non-empty and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty embedding".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "embedding has non-finite values".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.values
    }
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// A text embedding back-end.
///
/// Implementations must return the same vector for the same text within one
/// session; wrap non-deterministic services in [`CachedEmbedder`].
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    /// Output dimension, when known before the first call.
    fn dimension(&self) -> Option<usize>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut out = self.embed_batch(&[text.to_string()])?;
        out.pop().ok_or_else(|| Error::Provider {
            message: "empty embedding response".into(),
            retryable: false,
        })
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for std::sync::Arc<P> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn dimension(&self) -> Option<usize> {
        (**self).dimension()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed_batch(texts)
    }
}

const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "all",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "by",
    "can",
    "create",
    "database",
    "did",
    "do",
    "does",
    "for",
    "foreign",
    "from",
    "give",
    "has",
    "have",
    "how",
    "i",
    "in",
    "integer",
    "is",
    "it",
    "key",
    "list",
    "many",
    "me",
    "much",
    "of",
    "on",
    "or",
    "primary",
    "real",
    "references",
    "show",
    "table",
    "text",
    "that",
    "the",
    "their",
    "there",
    "these",
    "this",
    "those",
    "to",
    "was",
    "were",
    "what",
    "when",
    "where",
    "which",
    "who",
    "whose",
    "with",
];

/// Lowercased alphanumeric tokens, split on every other character.
pub(crate) fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

pub(crate) fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Deterministic offline embedder: hashed bag of tokens, L2-normalized.
///
/// Tokens are lowercased alphanumeric runs minus a short list of English and
/// SQL stopwords; each token adds one to bucket `fnv1a(token) % dimension`.
/// Texts without tokens map to a fixed unit vector.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
    model_id: String,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self {
            dimension,
            model_id: format!("hashing-bow-{dimension}"),
        }
    }

    pub fn embed_text(&self, text: &str) -> EmbeddingVector {
        let mut values = vec![0.0; self.dimension];
        for token in tokens(text).filter(|t| !is_stopword(t)) {
            values[(fnv1a(token.as_bytes()) % self.dimension as u64) as usize] += 1.0;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            values[(fnv1a(b"") % self.dimension as u64) as usize] = 1.0;
        } else {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector { values }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(256)
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.dimension)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.embed_text(t)).collect())
    }
}

/// Cuts `text` to at most `max_chars` characters, keeping the head.
pub fn truncate_document(text: &str, max_chars: usize) -> Cow<'_, str> {
    match text.char_indices().nth(max_chars) {
        Some((cut, _)) => {
            log::warn!(
                "document truncated from {} to {max_chars} characters",
                text.chars().count()
            );
            Cow::Owned(text[..cut].to_string())
        }
        None => Cow::Borrowed(text),
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    model_id: String,
    values: Vec<f64>,
}

/// Content-addressed cache in front of any provider.
///
/// Entries are keyed by SHA-256 of `(model_id, text)` and kept in memory and,
/// optionally, as one JSON file per entry under a cache directory. Misses are
/// sent to the inner provider in batches of `batch_size`, at most
/// `parallelism` batches at a time.
pub struct CachedEmbedder<P> {
    inner: P,
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, EmbeddingVector>>,
    batch_size: usize,
    parallelism: usize,
    misses: AtomicUsize,
}

impl<P: EmbeddingProvider> CachedEmbedder<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            dir: None,
            memory: Mutex::new(HashMap::new()),
            batch_size: 32,
            parallelism: 1,
            misses: AtomicUsize::new(0),
        }
    }

    pub fn with_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dir = Some(dir.into());
        self
    }

    pub fn with_batching(mut self, batch_size: usize, parallelism: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self.parallelism = parallelism.max(1);
        self
    }

    /// Texts that had to be sent to the inner provider so far.
    pub fn miss_count(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    fn key(&self, text: &str) -> String {
        let mut material = self.inner.model_id().as_bytes().to_vec();
        material.push(0);
        material.extend_from_slice(text.as_bytes());
        sha256_hex(&material)
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(&key[..2]).join(format!("{key}.json")))
    }

    fn lookup(&self, key: &str) -> Option<EmbeddingVector> {
        if let Some(v) = self.memory.lock().unwrap().get(key) {
            return Some(v.clone());
        }
        let path = self.path(key)?;
        let bytes = fs::read(&path).ok()?;
        let file: CacheFile = serde_json::from_slice(&bytes).ok()?;
        if file.model_id != self.inner.model_id() {
            return None;
        }
        let v = EmbeddingVector::new(file.values).ok()?;
        self.memory
            .lock()
            .unwrap()
            .insert(key.to_string(), v.clone());
        Some(v)
    }

    fn store(&self, key: &str, v: &EmbeddingVector) -> Result<()> {
        if let Some(path) = self.path(key) {
            let file = CacheFile {
                model_id: self.inner.model_id().to_string(),
                values: v.values.clone(),
            };
            write_atomic(&path, &serde_json::to_vec(&file)?)?;
        }
        self.memory
            .lock()
            .unwrap()
            .insert(key.to_string(), v.clone());
        Ok(())
    }

    fn fetch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let batches: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in batches.chunks(self.parallelism) {
            let results: Vec<Result<Vec<EmbeddingVector>>> = if wave.len() == 1 {
                vec![self.inner.embed_batch(wave[0])]
            } else {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = wave
                        .iter()
                        .map(|batch| scope.spawn(move || self.inner.embed_batch(batch)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("embedding worker panicked"))
                        .collect()
                })
            };
            for (batch, r) in wave.iter().zip(results) {
                let vectors = r?;
                if vectors.len() != batch.len() {
                    return Err(Error::Provider {
                        message: format!(
                            "asked for {} embeddings, got {}",
                            batch.len(),
                            vectors.len()
                        ),
                        retryable: false,
                    });
                }
                out.extend(vectors);
            }
        }
        Ok(out)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedEmbedder<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn dimension(&self) -> Option<usize> {
        self.inner.dimension()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let keys: Vec<String> = texts.iter().map(|t| self.key(t)).collect();
        let mut found: Vec<Option<EmbeddingVector>> = keys.iter().map(|k| self.lookup(k)).collect();

        let mut missing: Vec<(String, String)> = Vec::new();
        for ((key, text), slot) in keys.iter().zip(texts).zip(&found) {
            if slot.is_none() && !missing.iter().any(|(k, _)| k == key) {
                missing.push((key.clone(), text.clone()));
            }
        }
        if !missing.is_empty() {
            self.misses.fetch_add(missing.len(), Ordering::Relaxed);
            let miss_texts: Vec<String> = missing.iter().map(|(_, t)| t.clone()).collect();
            let vectors = self.fetch(&miss_texts)?;
            for ((key, _), v) in missing.iter().zip(&vectors) {
                self.store(key, v)?;
            }
            for (key, slot) in keys.iter().zip(found.iter_mut()) {
                if slot.is_none() {
                    *slot = self.memory.lock().unwrap().get(key).cloned();
                }
            }
        }
        found
            .into_iter()
            .map(|v| {
                v.ok_or_else(|| Error::Provider {
                    message: "cache lost an entry".into(),
                    retryable: false,
                })
            })
            .collect()
    }
}
