use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::scoring::RoutingScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Retrieval,
    DirectRerank,
    ModularRerank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub db_id: String,
    pub score: f64,
    /// Score components, present after modular re-ranking.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<RoutingScore>,
}

impl RankedItem {
    pub fn new(db_id: impl Into<String>, score: f64) -> Self {
        Self {
            db_id: db_id.into(),
            score,
            details: None,
        }
    }
}

/// Databases ordered best first. Scores are non-increasing and ids distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub stage: Stage,
    pub items: Vec<RankedItem>,
}

impl RankedList {
    /// Sorts by score descending with ascending `db_id` as tie-break.
    pub fn from_scores(
        query_id: impl Into<String>,
        stage: Stage,
        mut items: Vec<RankedItem>,
    ) -> Self {
        items.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.db_id.cmp(&b.db_id))
        });
        Self {
            query_id: query_id.into(),
            stage,
            items,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn db_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.db_id.as_str())
    }

    /// 1-based rank of `db_id`.
    pub fn rank_of(&self, db_id: &str) -> Option<usize> {
        self.items
            .iter()
            .position(|i| i.db_id == db_id)
            .map(|p| p + 1)
    }

    pub fn is_well_formed(&self) -> bool {
        let ordered = self
            .items
            .windows(2)
            .all(|w| w[0].score.partial_cmp(&w[1].score) != Some(Ordering::Less));
        let mut ids: Vec<&str> = self.db_ids().collect();
        ids.sort_unstable();
        ids.dedup();
        ordered && ids.len() == self.items.len()
    }
}

/// The first `min(k, len)` items, order preserved.
pub fn top_k(list: &RankedList, k: usize) -> RankedList {
    RankedList {
        query_id: list.query_id.clone(),
        stage: list.stage,
        items: list.items.iter().take(k).cloned().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(n: usize) -> RankedList {
        RankedList::from_scores(
            "q",
            Stage::Retrieval,
            (0..n)
                .map(|i| RankedItem::new(format!("db{i}"), 1.0 - i as f64 / 10.0))
                .collect(),
        )
    }

    #[test]
    fn top_k_cases() {
        let l = list(5);
        assert_eq!(top_k(&l, 10), l);
        assert_eq!(top_k(&l, 5), l);
        assert_eq!(top_k(&l, 1).db_ids().collect::<Vec<_>>(), ["db0"]);
        assert_eq!(
            top_k(&l, 3).db_ids().collect::<Vec<_>>(),
            ["db0", "db1", "db2"]
        );
    }

    #[test]
    fn ties_break_by_id() {
        let l = RankedList::from_scores(
            "q",
            Stage::Retrieval,
            vec![
                RankedItem::new("b", 0.5),
                RankedItem::new("a", 0.5),
                RankedItem::new("c", 0.9),
            ],
        );
        assert_eq!(l.db_ids().collect::<Vec<_>>(), ["c", "a", "b"]);
        assert!(l.is_well_formed());
        assert_eq!(l.rank_of("b"), Some(3));
        assert_eq!(l.rank_of("z"), None);
    }
}
