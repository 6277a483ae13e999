//! Cross-validated comparison harness: subject-grouped folds, crop
//! augmentation, majority voting, and the metric suite (accuracy,
//! sensitivity, specificity, F1, dual-route AUC with ROC curves).

mod folds;
mod metrics;
mod protocol;

pub use folds::{augment, make_folds, Fold, FoldPlan, Sample};
pub use metrics::{
    confusion_metrics, majority_vote, roc_auc, roc_csv_string, summarize, ConfusionMetrics,
    FoldMetrics, MetricsReport, RocPoint, SummaryMetrics,
};
pub use protocol::{
    fold_seed, run_protocol, run_protocol_with_models, FoldModel, Method, SubjectRecord,
    SvmConfig,
};
