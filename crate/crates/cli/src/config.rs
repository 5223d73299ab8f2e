use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use dbroute::reasoner::{HttpReasoner, HttpReasonerConfig, LexicalReasoner, RecordReplayReasoner};
use dbroute::retrieval::{CachedEmbedder, HashingEmbedder, HttpEmbedder, HttpEmbedderConfig};
use dbroute::scoring::RerankConfig;
use dbroute::{EmbeddingProvider, GraphSource, Mode, ReasonerProvider, RouterConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbedderConfig {
    Hashing {
        #[serde(default = "default_dimension")]
        dimension: usize,
    },
    Http(HttpEmbedderConfig),
}

fn default_dimension() -> usize {
    256
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Hashing {
            dimension: default_dimension(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReasonerConfig {
    #[default]
    Lexical,
    Http(HttpReasonerConfig),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub repository: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
}

impl Paths {
    fn overlay(&mut self, other: Paths) {
        let Paths {
            repository,
            questions,
            split,
            index,
            cache,
            prompts,
        } = other;
        self.repository = repository.or(self.repository.take());
        self.questions = questions.or(self.questions.take());
        self.split = split.or(self.split.take());
        self.index = index.or(self.index.take());
        self.cache = cache.or(self.cache.take());
        self.prompts = prompts.or(self.prompts.take());
    }
}

/// Contents of a `--config` TOML file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub mode: Option<Mode>,
    pub k: Option<usize>,
    pub n: Option<f64>,
    pub graph_source: Option<GraphSource>,
    pub include_metadata: Option<bool>,
    pub oracle_injection: Option<bool>,
    pub rerank: Option<RerankConfig>,
    pub max_attempts: Option<u32>,
    pub paths: Paths,
    pub embedder: Option<EmbedderConfig>,
    pub reasoner: Option<ReasonerConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Settings from `DBROUTE_*` environment variables.
    pub fn from_env() -> Result<Self> {
        fn var<T: std::str::FromStr>(name: &str) -> Result<Option<T>>
        where
            T::Err: std::fmt::Display,
        {
            match std::env::var(name) {
                Ok(v) => v
                    .parse()
                    .map(Some)
                    .map_err(|e| anyhow::anyhow!("{name}={v}: {e}")),
                Err(_) => Ok(None),
            }
        }
        let mode = match std::env::var("DBROUTE_MODE") {
            Ok(v) => Some(parse_mode(&v)?),
            Err(_) => None,
        };
        Ok(Self {
            seed: var("DBROUTE_SEED")?,
            parallelism: var("DBROUTE_PARALLELISM")?,
            mode,
            k: var("DBROUTE_K")?,
            n: var("DBROUTE_N")?,
            paths: Paths {
                repository: var("DBROUTE_REPOSITORY")?,
                index: var("DBROUTE_INDEX")?,
                cache: var("DBROUTE_CACHE")?,
                ..Paths::default()
            },
            ..Self::default()
        })
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    Ok(match s {
        "retrieval" | "retrieval-only" => Mode::Retrieval,
        "direct-rerank" | "direct" => Mode::DirectRerank,
        "modular-rerank" | "modular" => Mode::ModularRerank,
        other => {
            bail!("unknown mode `{other}` (expected retrieval, direct-rerank or modular-rerank)")
        }
    })
}

/// Command-line values that override everything else.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub mode: Option<Mode>,
    pub k: Option<usize>,
    pub n: Option<f64>,
    pub include_metadata: Option<bool>,
    pub oracle_injection: Option<bool>,
    pub paths: Paths,
}

/// Effective configuration after merging every source.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub seed: u64,
    pub parallelism: Option<usize>,
    pub router: RouterConfig,
    pub paths: Paths,
    pub embedder: EmbedderConfig,
    pub reasoner: ReasonerConfig,
    pub replay: Option<PathBuf>,
    pub record: Option<PathBuf>,
}

impl Settings {
    /// Layers defaults, environment, config file and flags, in increasing
    /// priority.
    pub fn resolve(env: FileConfig, file: Option<FileConfig>, flags: Overrides) -> Result<Self> {
        let mut s = Settings {
            seed: 0,
            parallelism: None,
            router: RouterConfig::default(),
            paths: Paths::default(),
            embedder: EmbedderConfig::default(),
            reasoner: ReasonerConfig::default(),
            replay: None,
            record: None,
        };
        for layer in [Some(env), file].into_iter().flatten() {
            s.apply(layer);
        }
        s.apply(FileConfig {
            seed: flags.seed,
            parallelism: flags.parallelism,
            mode: flags.mode,
            k: flags.k,
            n: flags.n,
            include_metadata: flags.include_metadata,
            oracle_injection: flags.oracle_injection,
            paths: flags.paths,
            ..FileConfig::default()
        });
        s.router.validate()?;
        if s.parallelism == Some(0) {
            bail!("parallelism must be at least 1");
        }
        Ok(s)
    }

    fn apply(&mut self, layer: FileConfig) {
        if let Some(r) = layer.rerank {
            self.router.rerank = r;
        }
        self.seed = layer.seed.unwrap_or(self.seed);
        self.parallelism = layer.parallelism.or(self.parallelism);
        self.router.mode = layer.mode.unwrap_or(self.router.mode);
        self.router.rerank.k = layer.k.unwrap_or(self.router.rerank.k);
        self.router.rerank.n = layer.n.unwrap_or(self.router.rerank.n);
        self.router.graph_source = layer.graph_source.unwrap_or(self.router.graph_source);
        if let Some(m) = layer.include_metadata {
            self.router = self.router.clone().with_metadata(m);
        }
        self.router.oracle_injection = layer
            .oracle_injection
            .unwrap_or(self.router.oracle_injection);
        self.router.reasoner.max_attempts = layer
            .max_attempts
            .unwrap_or(self.router.reasoner.max_attempts);
        self.paths.overlay(layer.paths);
        if let Some(e) = layer.embedder {
            self.embedder = e;
        }
        if let Some(r) = layer.reasoner {
            self.reasoner = r;
        }
    }

    pub fn embedder(&self) -> Result<Arc<dyn EmbeddingProvider>> {
        let batch_parallelism = self.parallelism.unwrap_or(4);
        Ok(match &self.embedder {
            EmbedderConfig::Hashing { dimension } => Arc::new(HashingEmbedder::new(*dimension)),
            EmbedderConfig::Http(cfg) => {
                let inner = HttpEmbedder::new(cfg.clone())?;
                let mut cached = CachedEmbedder::new(inner).with_batching(32, batch_parallelism);
                if let Some(dir) = &self.paths.cache {
                    cached = cached.with_dir(dir);
                }
                Arc::new(cached)
            }
        })
    }

    pub fn reasoner_model_id(&self) -> String {
        match &self.reasoner {
            ReasonerConfig::Lexical => LexicalReasoner::new().model_id().to_string(),
            ReasonerConfig::Http(cfg) => cfg.model.clone(),
        }
    }

    /// The configured reasoner, wrapped for replay or recording when asked.
    pub fn reasoner(&self) -> Result<Arc<dyn ReasonerProvider>> {
        if let Some(path) = &self.replay {
            if !path.exists() {
                bail!("transcript {} does not exist", path.display());
            }
            return Ok(Arc::new(RecordReplayReasoner::replay(
                path,
                self.reasoner_model_id(),
            )?));
        }
        let live: Arc<dyn ReasonerProvider> = match &self.reasoner {
            ReasonerConfig::Lexical => Arc::new(LexicalReasoner::new()),
            ReasonerConfig::Http(cfg) => Arc::new(HttpReasoner::new(cfg.clone())?),
        };
        Ok(match &self.record {
            Some(path) => Arc::new(RecordReplayReasoner::record(live, path)?),
            None => live,
        })
    }
}
