//! Ranking metrics, evaluation reports and the domain-cluster analysis.

mod cluster;
mod confusion;
mod metrics;
mod report;

pub use cluster::{constrained_kmeans, ClusterAssignment, KMeansOptions};
pub use confusion::{intra_cluster_confusion, ConfusionStats};
pub use metrics::{average_precision, mean_average_precision, recall_at_k};
pub use report::{
    ablate_metadata, Aggregates, ConfigEcho, EvalRecord, EvalReport, MetadataAblation, ReportFormat,
};
