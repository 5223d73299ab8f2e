//! Routing benchmarks: question samples, per-database 50/50 splits,
//! cross-domain partitions and database-level evidence.
//!
//! Splits use ChaCha8 seeded from SHA-256 of `(seed, db_id)`, so a split only
//! depends on the seed and the set of query ids of each database.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::schema::DatabaseSchema;
use crate::util::normalize_ws;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySample {
    pub query_id: String,
    pub text: String,
    pub gold_db_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
    /// Source SQL, carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sql: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl QuerySample {
    pub fn new(
        query_id: impl Into<String>,
        text: impl Into<String>,
        gold_db_id: impl Into<String>,
    ) -> Self {
        Self {
            query_id: query_id.into(),
            text: text.into(),
            gold_db_id: gold_db_id.into(),
            evidence: None,
            sql: None,
            split: None,
        }
    }
}

/// Deduplicated, sorted evidence sentences (whitespace-normalized).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceSet {
    items: BTreeSet<String>,
}

impl EvidenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_items<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = Self::new();
        for item in items {
            set.insert(item.as_ref());
        }
        set
    }

    /// Inserts a sentence; blank text is ignored. Returns whether it was new.
    pub fn insert(&mut self, sentence: &str) -> bool {
        let s = normalize_ws(sentence);
        !s.is_empty() && self.items.insert(s)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDataset {
    pub repository: Vec<DatabaseSchema>,
    pub train: Vec<QuerySample>,
    pub test: Vec<QuerySample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_domain_db_ids: Option<BTreeSet<String>>,
}

impl RoutingDataset {
    pub fn new(
        repository: Vec<DatabaseSchema>,
        train: Vec<QuerySample>,
        test: Vec<QuerySample>,
    ) -> Result<Self> {
        let ds = Self {
            repository,
            train,
            test,
            cross_domain_db_ids: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn db_ids(&self) -> BTreeSet<&str> {
        self.repository.iter().map(|s| s.db_id.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        crate::schema::validate_repository(&self.repository)?;
        let ids = self.db_ids();
        let mut seen = BTreeSet::new();
        for q in self.train.iter().chain(&self.test) {
            if !ids.contains(q.gold_db_id.as_str()) {
                return Err(Error::UnknownDatabase(q.gold_db_id.clone()));
            }
            if !seen.insert(q.query_id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "query `{}` appears more than once",
                    q.query_id
                )));
            }
        }
        if let Some(held_out) = &self.cross_domain_db_ids {
            if let Some(q) = self.train.iter().find(|q| held_out.contains(&q.gold_db_id)) {
                return Err(Error::InvalidInput(format!(
                    "train query `{}` belongs to held-out database `{}`",
                    q.query_id, q.gold_db_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct RawQuestion {
    question: String,
    db_id: String,
    #[serde(default)]
    evidence: Option<String>,
    #[serde(default, alias = "SQL")]
    query: Option<String>,
}

/// Reads a Spider/BIRD question file (JSON array with `question`, `db_id`,
/// optional `evidence` and `query`/`SQL`). Ids are `{id_prefix}{position}`.
pub fn load_questions<R: Read>(reader: R, id_prefix: &str) -> Result<Vec<QuerySample>> {
    let raw: Vec<RawQuestion> = serde_json::from_reader(reader)?;
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(i, r)| QuerySample {
            query_id: format!("{id_prefix}{i}"),
            text: r.question,
            gold_db_id: r.db_id,
            evidence: r.evidence.filter(|e| !e.trim().is_empty()),
            sql: r.query,
            split: None,
        })
        .collect())
}

fn db_rng(seed: u64, db_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(db_id.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Per-database 50/50 split. Each database's samples are ordered by query id,
/// shuffled, and the first `ceil(n/2)` go to train.
pub fn build_route_split(
    samples: &[QuerySample],
    seed: u64,
) -> Result<(Vec<QuerySample>, Vec<QuerySample>)> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to split".into()));
    }
    let mut by_db: BTreeMap<&str, Vec<&QuerySample>> = BTreeMap::new();
    for s in samples {
        by_db.entry(s.gold_db_id.as_str()).or_default().push(s);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (db_id, mut group) in by_db {
        group.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        group.shuffle(&mut db_rng(seed, db_id));
        let n_train = group.len().div_ceil(2);
        for (i, s) in group.into_iter().enumerate() {
            let mut s = s.clone();
            if i < n_train {
                s.split = Some(Split::Train);
                train.push(s);
            } else {
                s.split = Some(Split::Test);
                test.push(s);
            }
        }
    }
    Ok((train, test))
}

/// Split file written by `split` and read by `evaluate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub rounding: String,
    pub train: Vec<String>,
    pub test: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_domain_db_ids: Option<BTreeSet<String>>,
}

impl SplitManifest {
    pub fn new(seed: u64, train: &[QuerySample], test: &[QuerySample]) -> Self {
        Self {
            seed,
            rounding: "train_ceil".to_string(),
            train: train.iter().map(|q| q.query_id.clone()).collect(),
            test: test.iter().map(|q| q.query_id.clone()).collect(),
            cross_domain_db_ids: None,
        }
    }

    /// Partitions `samples` according to the manifest's id lists.
    pub fn apply(&self, samples: &[QuerySample]) -> Result<(Vec<QuerySample>, Vec<QuerySample>)> {
        let by_id: BTreeMap<&str, &QuerySample> =
            samples.iter().map(|q| (q.query_id.as_str(), q)).collect();
        let pick = |ids: &[String], split: Split| -> Result<Vec<QuerySample>> {
            ids.iter()
                .map(|id| {
                    let mut q = (*by_id.get(id.as_str()).ok_or_else(|| {
                        Error::InvalidInput(format!("manifest names unknown query `{id}`"))
                    })?)
                    .clone();
                    q.split = Some(split);
                    Ok(q)
                })
                .collect()
        };
        Ok((
            pick(&self.train, Split::Train)?,
            pick(&self.test, Split::Test)?,
        ))
    }
}

/// Union of non-empty evidence strings per database.
pub fn merge_evidence(samples: &[QuerySample]) -> BTreeMap<String, EvidenceSet> {
    let mut out: BTreeMap<String, EvidenceSet> = BTreeMap::new();
    for s in samples {
        let set = out.entry(s.gold_db_id.clone()).or_default();
        if let Some(e) = &s.evidence {
            set.insert(e);
        }
    }
    out
}

/// Withholds the train queries of `held_out` databases. Repository and test
/// set are untouched.
pub fn make_cross_domain(
    dataset: &RoutingDataset,
    held_out: &BTreeSet<String>,
) -> Result<RoutingDataset> {
    let ids = dataset.db_ids();
    if let Some(unknown) = held_out.iter().find(|d| !ids.contains(d.as_str())) {
        return Err(Error::UnknownDatabase(unknown.clone()));
    }
    let mut out = dataset.clone();
    out.train.retain(|q| !held_out.contains(&q.gold_db_id));
    let mut all = out.cross_domain_db_ids.take().unwrap_or_default();
    all.extend(held_out.iter().cloned());
    out.cross_domain_db_ids = Some(all);
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbCounts {
    pub train: usize,
    pub test: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub databases: usize,
    pub total_questions: usize,
    pub train_questions: usize,
    pub test_questions: usize,
    pub per_db: BTreeMap<String, DbCounts>,
}

pub fn dataset_stats(dataset: &RoutingDataset) -> DatasetStats {
    let mut per_db: BTreeMap<String, DbCounts> = dataset
        .repository
        .iter()
        .map(|s| (s.db_id.clone(), DbCounts::default()))
        .collect();
    for q in &dataset.train {
        let c = per_db.entry(q.gold_db_id.clone()).or_default();
        c.train += 1;
        c.total += 1;
    }
    for q in &dataset.test {
        let c = per_db.entry(q.gold_db_id.clone()).or_default();
        c.test += 1;
        c.total += 1;
    }
    DatasetStats {
        databases: dataset.repository.len(),
        total_questions: dataset.train.len() + dataset.test.len(),
        train_questions: dataset.train.len(),
        test_questions: dataset.test.len(),
        per_db,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{ColumnMeta, TableMeta};
    use proptest::prelude::*;

    fn samples(per_db: &[(&str, usize)]) -> Vec<QuerySample> {
        per_db
            .iter()
            .flat_map(|&(db, n)| {
                (0..n).map(move |i| QuerySample::new(format!("{db}-{i}"), format!("q {i}"), db))
            })
            .collect()
    }

    fn repo(ids: &[&str]) -> Vec<DatabaseSchema> {
        ids.iter()
            .map(|id| {
                DatabaseSchema::new(
                    *id,
                    vec![TableMeta::new("t", vec![ColumnMeta::new("c", "")])],
                )
                .unwrap()
            })
            .collect()
    }

    fn count(qs: &[QuerySample], db: &str) -> usize {
        qs.iter().filter(|q| q.gold_db_id == db).count()
    }

    #[test]
    fn split_rounding() {
        let (train, test) = build_route_split(&samples(&[("a", 4), ("b", 5)]), 7).unwrap();
        assert_eq!((count(&train, "a"), count(&test, "a")), (2, 2));
        assert_eq!((count(&train, "b"), count(&test, "b")), (3, 2));
        assert!(train.iter().all(|q| q.split == Some(Split::Train)));
        assert!(build_route_split(&[], 1).is_err());
    }

    #[test]
    fn split_ignores_input_order() {
        let mut s = samples(&[("a", 9), ("b", 3)]);
        let first = build_route_split(&s, 42).unwrap();
        s.reverse();
        assert_eq!(build_route_split(&s, 42).unwrap(), first);
    }

    #[test]
    fn evidence_union() {
        let mut s = samples(&[("a", 3), ("b", 1)]);
        s[0].evidence = Some("e1".into());
        s[1].evidence = Some("e2".into());
        s[2].evidence = Some("  e1 ".into());
        let merged = merge_evidence(&s);
        assert_eq!(merged["a"].iter().collect::<Vec<_>>(), ["e1", "e2"]);
        assert!(merged["b"].is_empty());

        let mut twice = samples(&[("c", 2)]);
        twice[0].evidence = Some("same".into());
        twice[1].evidence = Some("same".into());
        assert_eq!(merge_evidence(&twice)["c"].len(), 1);
    }

    #[test]
    fn cross_domain() {
        let all = samples(&[("d1", 6), ("d2", 4)]);
        let (train, test) = build_route_split(&all, 3).unwrap();
        let ds = RoutingDataset::new(repo(&["d1", "d2"]), train, test).unwrap();
        assert_eq!(count(&ds.train, "d1"), 3);

        let none = make_cross_domain(&ds, &BTreeSet::new()).unwrap();
        assert_eq!(none.train, ds.train);
        assert_eq!(none.test, ds.test);

        let one = make_cross_domain(&ds, &BTreeSet::from(["d1".to_string()])).unwrap();
        assert_eq!(one.train.len(), ds.train.len() - 3);
        assert_eq!(one.test, ds.test);
        assert_eq!(one.repository, ds.repository);
        one.validate().unwrap();

        let every =
            make_cross_domain(&ds, &BTreeSet::from(["d1".to_string(), "d2".to_string()])).unwrap();
        assert!(every.train.is_empty());
        assert_eq!(every.test, ds.test);

        assert!(matches!(
            make_cross_domain(&ds, &BTreeSet::from(["zz".to_string()])),
            Err(Error::UnknownDatabase(_))
        ));
    }

    #[test]
    fn stats() {
        let empty = RoutingDataset::new(vec![], vec![], vec![]).unwrap();
        assert_eq!(dataset_stats(&empty), DatasetStats::default());

        let (train, test) = build_route_split(&samples(&[("a", 3), ("b", 3)]), 0).unwrap();
        let ds = RoutingDataset::new(repo(&["a", "b"]), train, test).unwrap();
        let st = dataset_stats(&ds);
        assert_eq!((st.databases, st.total_questions), (2, 6));
        assert_eq!((st.train_questions, st.test_questions), (4, 2));
        assert_eq!(
            st.per_db["a"],
            DbCounts {
                train: 2,
                test: 1,
                total: 3
            }
        );
    }

    #[test]
    fn dataset_rejects_unknown_gold() {
        let r = RoutingDataset::new(repo(&["a"]), samples(&[("b", 1)]), vec![]);
        assert!(matches!(r, Err(Error::UnknownDatabase(_))));
    }

    #[test]
    fn question_loader_and_manifest() {
        let json = r#"[{"question": "How many?", "db_id": "a", "query": "SELECT 1"},
                       {"question": "Who?", "db_id": "a", "evidence": "x refers to y", "SQL": "SELECT 2"}]"#;
        let qs = load_questions(json.as_bytes(), "dev:").unwrap();
        assert_eq!(qs[0].query_id, "dev:0");
        assert_eq!(qs[0].evidence, None);
        assert_eq!(qs[1].evidence.as_deref(), Some("x refers to y"));
        assert_eq!(qs[1].sql.as_deref(), Some("SELECT 2"));

        let (train, test) = build_route_split(&qs, 1).unwrap();
        let m = SplitManifest::new(1, &train, &test);
        assert_eq!(m.rounding, "train_ceil");
        assert_eq!(m.apply(&qs).unwrap(), (train, test));
    }

    proptest! {
        #[test]
        fn split_invariants(sizes in proptest::collection::vec(1usize..12, 1..6), seed in any::<u64>()) {
            let named: Vec<(String, usize)> = sizes.iter().enumerate().map(|(i, &n)| (format!("db{i}"), n)).collect();
            let refs: Vec<(&str, usize)> = named.iter().map(|(d, n)| (d.as_str(), *n)).collect();
            let all = samples(&refs);
            let (train, test) = build_route_split(&all, seed).unwrap();
            let mut ids: Vec<&str> = train.iter().chain(&test).map(|q| q.query_id.as_str()).collect();
            ids.sort_unstable();
            let mut expected: Vec<&str> = all.iter().map(|q| q.query_id.as_str()).collect();
            expected.sort_unstable();
            prop_assert_eq!(ids, expected);
            for (db, _) in &refs {
                let d = count(&train, db) as i64 - count(&test, db) as i64;
                prop_assert!(d == 0 || d == 1);
            }
            prop_assert_eq!(build_route_split(&all, seed).unwrap(), (train, test));
        }
    }
}
