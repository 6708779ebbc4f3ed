//! Datasets, prediction files, metrics and paired significance testing.

mod bootstrap;
mod dataset;
mod mcnemar;
mod metrics;
mod predictions;
mod report;
mod stats;
mod synth;

pub use bootstrap::{bootstrap_all, bootstrap_ci, BootstrapCI, BootstrapConfig};
pub use dataset::{load_dataset, parse_dataset, DatasetItem};
pub use mcnemar::{mcnemar, mcnemar_counts, mcnemar_from_correctness, McNemarResult};
pub use metrics::{confusion, confusion_counts, metrics, ConfusionCounts, Metrics, Statistic};
pub use predictions::{align, PredictionRecord, PredictionSet};
pub use report::{build_report, format_mcnemar, MetricsReport, PairComparison, RunSummary};
pub use stats::{chi2_p_value, erfc};
pub use synth::synthetic_corpus;
