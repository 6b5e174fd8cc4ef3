//! Classification scores, attention-map comparison, perturbation
//! faithfulness and the bias ablation harness.

mod ablation;
mod classification;
mod faithfulness;
mod maps;
mod report;

pub use ablation::{ablation_run, AblationArm, AblationDelta, AblationReport};
pub use classification::{
    classification_metrics, ClassScore, ClassificationMetrics, ConfusionMatrix,
};
pub use faithfulness::{
    faithfulness_eval, perturb, FaithfulnessReport, DEFAULT_BOUND, DEFAULT_SIGMA, DEFAULT_TRIALS,
};
pub use maps::{pearson_cc, ssim_global};
pub use report::{
    evaluate, prediction_strip_csv, EvalReport, FaithfulnessSettings, PerClassReport,
};
