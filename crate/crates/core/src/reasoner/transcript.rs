use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{DecodingParams, ReasonerProvider};
use crate::error::{Error, Result};
use crate::util::sha256_hex;

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt_sha256: String,
    pub model_id: String,
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptMode {
    /// Serve known prompts from the file and forward the rest, appending them.
    Record,
    /// Serve only from the file; an unknown prompt is an error.
    Replay,
}

/// Wraps a provider with a JSON-lines transcript keyed by prompt hash.
pub struct RecordReplayReasoner {
    mode: TranscriptMode,
    model_id: String,
    inner: Option<Arc<dyn ReasonerProvider>>,
    path: PathBuf,
    entries: Mutex<HashMap<String, String>>,
    live_calls: AtomicUsize,
}

fn read_entries(path: &Path) -> Result<Vec<TranscriptEntry>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::file(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: TranscriptEntry = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

impl RecordReplayReasoner {
    pub fn record(inner: Arc<dyn ReasonerProvider>, path: impl Into<PathBuf>) -> Result<Self> {
        let model_id = inner.model_id().to_string();
        Self::open(TranscriptMode::Record, model_id, Some(inner), path.into())
    }

    pub fn replay(path: impl Into<PathBuf>, model_id: impl Into<String>) -> Result<Self> {
        Self::open(TranscriptMode::Replay, model_id.into(), None, path.into())
    }

    fn open(
        mode: TranscriptMode,
        model_id: String,
        inner: Option<Arc<dyn ReasonerProvider>>,
        path: PathBuf,
    ) -> Result<Self> {
        if mode == TranscriptMode::Replay && !path.exists() {
            return Err(Error::file(
                &path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "transcript not found"),
            ));
        }
        let entries = read_entries(&path)?
            .into_iter()
            .filter(|e| e.model_id == model_id)
            .map(|e| (e.prompt_sha256, e.response))
            .collect();
        Ok(Self {
            mode,
            model_id,
            inner,
            path,
            entries: Mutex::new(entries),
            live_calls: AtomicUsize::new(0),
        })
    }

    pub fn mode(&self) -> TranscriptMode {
        self.mode
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Calls forwarded to the wrapped provider since construction.
    pub fn live_calls(&self) -> usize {
        self.live_calls.load(Ordering::SeqCst)
    }

    /// Number of distinct prompts known for this model.
    pub fn len(&self) -> usize {
        self.entries.lock().expect("transcript lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ReasonerProvider for RecordReplayReasoner {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String> {
        let key = sha256_hex(prompt.as_bytes());
        if let Some(r) = self.entries.lock().expect("transcript lock").get(&key) {
            return Ok(r.clone());
        }
        let inner = match (self.mode, &self.inner) {
            (TranscriptMode::Record, Some(inner)) => inner,
            _ => {
                return Err(Error::MissingRecording {
                    prompt_sha256: key,
                    model_id: self.model_id.clone(),
                })
            }
        };
        self.live_calls.fetch_add(1, Ordering::SeqCst);
        let response = inner.complete(prompt, params)?;
        let mut entries = self.entries.lock().expect("transcript lock");
        if let Some(existing) = entries.get(&key) {
            return Ok(existing.clone());
        }
        let entry = TranscriptEntry {
            prompt_sha256: key.clone(),
            model_id: self.model_id.clone(),
            response: response.clone(),
        };
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        if let Some(parent) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::file(parent, e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::file(&self.path, e))?;
        file.write_all(line.as_bytes())
            .map_err(|e| Error::file(&self.path, e))?;
        entries.insert(key, response.clone());
        Ok(response)
    }
}
