use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{RankedList, Stage};
use crate::util::write_atomic;

/// Run settings copied into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub stage: Stage,
    pub k: usize,
    pub n: f64,
    pub embedder_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoner_id: Option<String>,
    pub include_metadata: bool,
    pub allow_steiner_tables: bool,
    pub oracle_injection: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub query_id: String,
    pub gold_db_id: String,
    /// Database ids as output by the evaluated stage.
    pub ranked: Vec<String>,
    /// 1-based rank of the gold database in `ranked`.
    pub gold_rank: Option<usize>,
    /// Rank after appending the rest of the first-stage ranking to `ranked`.
    pub extended_gold_rank: Option<usize>,
    /// Gold database missing from the first-stage top-k.
    pub candidate_miss: bool,
}

impl EvalRecord {
    pub fn from_rankings(
        output: &RankedList,
        retrieval: &RankedList,
        gold: &str,
        k: usize,
    ) -> Self {
        let ranked: Vec<String> = output.db_ids().map(str::to_string).collect();
        let mut extended = ranked.clone();
        extended.extend(
            retrieval
                .db_ids()
                .filter(|d| !ranked.iter().any(|r| r == d))
                .map(str::to_string),
        );
        let rank = |ids: &[String]| ids.iter().position(|d| d == gold).map(|p| p + 1);
        Self {
            query_id: output.query_id.clone(),
            gold_db_id: gold.to_string(),
            gold_rank: rank(&ranked),
            extended_gold_rank: rank(&extended),
            candidate_miss: retrieval.rank_of(gold).is_none_or(|r| r > k),
            ranked,
        }
    }

    pub fn hit_at(&self, k: usize) -> bool {
        self.gold_rank.is_some_and(|r| r <= k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub queries: usize,
    pub recall_at_1: f64,
    pub recall_at_2: f64,
    pub recall_at_3: f64,
    pub recall_at_5: f64,
    /// Over the stage output as produced (truncated after re-ranking).
    pub map: f64,
    /// Over the stage output extended with the first-stage tail.
    pub map_extended: f64,
    pub candidate_misses: usize,
}

impl Aggregates {
    pub fn compute(records: &[EvalRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidInput("no queries to aggregate".into()));
        }
        let n = records.len() as f64;
        let recall = |k| records.iter().filter(|r| r.hit_at(k)).count() as f64 / n;
        let ap = |rank: Option<usize>| rank.map_or(0.0, |r| 1.0 / r as f64);
        Ok(Self {
            queries: records.len(),
            recall_at_1: recall(1),
            recall_at_2: recall(2),
            recall_at_3: recall(3),
            recall_at_5: recall(5),
            map: records.iter().map(|r| ap(r.gold_rank)).sum::<f64>() / n,
            map_extended: records
                .iter()
                .map(|r| ap(r.extended_gold_rank))
                .sum::<f64>()
                / n,
            candidate_misses: records.iter().filter(|r| r.candidate_miss).count(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ConfigEcho,
    pub aggregates: Aggregates,
    pub records: Vec<EvalRecord>,
}

impl EvalReport {
    pub fn new(config: ConfigEcho, records: Vec<EvalRecord>) -> Result<Self> {
        Ok(Self {
            aggregates: Aggregates::compute(&records)?,
            config,
            records,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Header plus one row of aggregates.
    pub fn aggregates_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let c = &self.config;
        let a = &self.aggregates;
        let stage = serde_json::to_value(c.stage)?;
        w.write_record([
            "stage",
            "k",
            "n",
            "embedder_id",
            "reasoner_id",
            "include_metadata",
            "queries",
            "recall_at_1",
            "recall_at_2",
            "recall_at_3",
            "recall_at_5",
            "map",
            "map_extended",
            "candidate_misses",
        ])?;
        w.write_record([
            stage.as_str().unwrap_or_default().to_string(),
            c.k.to_string(),
            c.n.to_string(),
            c.embedder_id.clone(),
            c.reasoner_id.clone().unwrap_or_default(),
            c.include_metadata.to_string(),
            a.queries.to_string(),
            a.recall_at_1.to_string(),
            a.recall_at_2.to_string(),
            a.recall_at_3.to_string(),
            a.recall_at_5.to_string(),
            a.map.to_string(),
            a.map_extended.to_string(),
            a.candidate_misses.to_string(),
        ])?;
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.aggregates_csv(),
        }
    }

    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<()> {
        write_atomic(path, self.render(format)?.as_bytes())
    }
}

/// Reports with and without metadata in documents and prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataAblation {
    pub with_metadata: EvalReport,
    pub without_metadata: EvalReport,
    /// `with - without` for each aggregate.
    pub delta: Aggregates,
}

/// Runs `run(true)` and `run(false)` and compares them.
pub fn ablate_metadata(run: impl Fn(bool) -> Result<EvalReport>) -> Result<MetadataAblation> {
    let with_metadata = run(true)?;
    let without_metadata = run(false)?;
    let (a, b) = (&with_metadata.aggregates, &without_metadata.aggregates);
    let delta = Aggregates {
        queries: a.queries,
        recall_at_1: a.recall_at_1 - b.recall_at_1,
        recall_at_2: a.recall_at_2 - b.recall_at_2,
        recall_at_3: a.recall_at_3 - b.recall_at_3,
        recall_at_5: a.recall_at_5 - b.recall_at_5,
        map: a.map - b.map,
        map_extended: a.map_extended - b.map_extended,
        candidate_misses: a.candidate_misses.abs_diff(b.candidate_misses),
    };
    Ok(MetadataAblation {
        with_metadata,
        without_metadata,
        delta,
    })
}
