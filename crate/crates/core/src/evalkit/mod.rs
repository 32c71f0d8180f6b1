//! Detection, ROC and classification metrics over scored records, and the
//! report files built from them.

pub mod confusion;
pub mod metrics;
pub mod outcome;
pub mod report;
pub mod roc;

pub use confusion::{confusion_and_f1, ConfusionReport};
pub use metrics::{detection_metrics, DetectionMetrics};
pub use outcome::{outcome_from_log, DetectionOutcome};
pub use report::{build_report, ConditionRoc, ConditionSummary, EvalReport};
pub use roc::{roc_curve, RocCurve, RocPoint};
