use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, EvalRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    /// Queries whose gold database is not ranked first.
    pub errors: usize,
    pub top1_same_cluster: usize,
    /// Share of errors whose rank-1 database is in the gold's cluster.
    pub top1_same_cluster_rate: f64,
    pub multi_same_cluster_top5: usize,
    /// Share of errors with at least two top-5 databases in the gold's cluster.
    pub multi_same_cluster_top5_rate: f64,
}

/// How often ranking errors stay inside the gold database's cluster. Rates
/// are 0 when there are no errors. Unclustered databases match nothing.
pub fn intra_cluster_confusion(
    records: &[EvalRecord],
    clusters: &ClusterAssignment,
) -> ConfusionStats {
    let errors: Vec<&EvalRecord> = records.iter().filter(|r| r.gold_rank != Some(1)).collect();
    let top1 = errors
        .iter()
        .filter(|r| {
            r.ranked
                .first()
                .is_some_and(|d| clusters.same_cluster(d, &r.gold_db_id))
        })
        .count();
    let multi = errors
        .iter()
        .filter(|r| {
            r.ranked
                .iter()
                .take(5)
                .filter(|d| clusters.same_cluster(d, &r.gold_db_id))
                .count()
                >= 2
        })
        .count();
    let rate = |x: usize| {
        if errors.is_empty() {
            0.0
        } else {
            x as f64 / errors.len() as f64
        }
    };
    ConfusionStats {
        errors: errors.len(),
        top1_same_cluster: top1,
        top1_same_cluster_rate: rate(top1),
        multi_same_cluster_top5: multi,
        multi_same_cluster_top5_rate: rate(multi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn clusters() -> ClusterAssignment {
        let map: BTreeMap<String, usize> = [
            ("a1", 0),
            ("a2", 0),
            ("a3", 0),
            ("b1", 1),
            ("b2", 1),
            ("c1", 2),
        ]
        .into_iter()
        .map(|(d, c)| (d.to_string(), c))
        .collect();
        ClusterAssignment {
            clusters: map,
            sizes: vec![3, 2, 1],
            min_size: 1,
            max_size: 3,
            inertia: 0.0,
            iterations: 1,
            size_trace: vec![],
        }
    }

    fn rec(gold: &str, ranked: &[&str]) -> EvalRecord {
        let ranked: Vec<String> = ranked.iter().map(|s| s.to_string()).collect();
        EvalRecord {
            query_id: "q".into(),
            gold_rank: ranked.iter().position(|d| d == gold).map(|p| p + 1),
            extended_gold_rank: None,
            gold_db_id: gold.into(),
            candidate_miss: false,
            ranked,
        }
    }

    #[test]
    fn cross_cluster_errors() {
        let s = intra_cluster_confusion(&[rec("a1", &["b1", "c1", "a1"])], &clusters());
        assert_eq!((s.errors, s.top1_same_cluster_rate), (1, 0.0));
    }

    #[test]
    fn same_cluster_error() {
        let s = intra_cluster_confusion(&[rec("a1", &["a2", "a1"])], &clusters());
        assert_eq!(s.top1_same_cluster_rate, 1.0);
        assert_eq!(s.multi_same_cluster_top5_rate, 1.0);
    }

    #[test]
    fn six_query_count() {
        let records = [
            rec("a1", &["a1", "b1"]),             // correct
            rec("a1", &["a2", "b1", "a1"]),       // top1 same, multi
            rec("b1", &["c1", "b2", "b1"]),       // top1 cross, multi
            rec("b2", &["a1", "a2", "c1"]),       // cross, gold absent, no multi
            rec("c1", &["c1"]),                   // correct
            rec("a3", &["b1", "a2", "c1", "b2"]), // cross, single same
        ];
        let s = intra_cluster_confusion(&records, &clusters());
        assert_eq!(s.errors, 4);
        assert_eq!(s.top1_same_cluster, 1);
        assert_eq!(s.multi_same_cluster_top5, 2);
        assert_eq!(s.top1_same_cluster_rate, 0.25);
        assert_eq!(s.multi_same_cluster_top5_rate, 0.5);
        assert_eq!(
            intra_cluster_confusion(&records[..1], &clusters()).top1_same_cluster_rate,
            0.0
        );
    }
}
