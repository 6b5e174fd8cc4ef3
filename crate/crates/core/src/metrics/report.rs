use serde::{Deserialize, Serialize};

use crate::csc::CscFilterBank;
use crate::error::Result;
use crate::metrics::classification::{classification_metrics, ConfusionMatrix};
use crate::metrics::faithfulness::{
    faithfulness_eval, FaithfulnessReport, DEFAULT_BOUND, DEFAULT_SIGMA, DEFAULT_TRIALS,
};
use crate::model::{predict, Parameters, Prediction};
use crate::welllog::{LithologyCatalog, WellLogSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaithfulnessSettings {
    pub sigma: f64,
    pub bound: f64,
    pub n_trials: usize,
}

impl Default for FaithfulnessSettings {
    fn default() -> Self {
        FaithfulnessSettings {
            sigma: DEFAULT_SIGMA,
            bound: DEFAULT_BOUND,
            n_trials: DEFAULT_TRIALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassReport {
    pub class: usize,
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub support: u64,
    pub predicted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub model_config_hash: String,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub kappa: Option<f64>,
    pub faithfulness: Option<FaithfulnessReport>,
    pub per_class: Vec<PerClassReport>,
}

/// Predicts a labeled, normalized well and scores it. Faithfulness is
/// measured when `faithfulness` is given.
pub fn evaluate(
    params: &Parameters,
    seq: &WellLogSequence,
    bank: &CscFilterBank,
    catalog: &LithologyCatalog,
    faithfulness: Option<FaithfulnessSettings>,
    seed: u64,
) -> Result<(EvalReport, Prediction)> {
    let truth = seq.require_labels(catalog.num_classes())?;
    let prediction = predict(params, seq, bank)?;
    let cm = ConfusionMatrix::from_labels(truth, &prediction.labels, catalog.num_classes())?;
    let m = classification_metrics(&cm)?;
    let faithfulness = faithfulness
        .map(|f| faithfulness_eval(params, seq, bank, f.sigma, f.bound, f.n_trials, seed))
        .transpose()?;
    let per_class = m
        .per_class
        .iter()
        .enumerate()
        .map(|(c, s)| PerClassReport {
            class: c,
            name: catalog.name(c).unwrap_or_default().to_string(),
            precision: s.precision,
            recall: s.recall,
            support: s.support,
            predicted: s.predicted,
        })
        .collect();
    Ok((
        EvalReport {
            dataset: seq.well_id().to_string(),
            model_config_hash: params.config().hash(),
            accuracy: m.accuracy,
            macro_precision: m.macro_precision,
            macro_recall: m.macro_recall,
            kappa: m.kappa,
            faithfulness,
            per_class,
        },
        prediction,
    ))
}

/// `depth,true_label,pred_label` rows; `true_label` is empty for unlabeled wells.
pub fn prediction_strip_csv(
    seq: &WellLogSequence,
    predicted: &[usize],
    catalog: &LithologyCatalog,
) -> String {
    let mut out = String::from("depth,true_label,pred_label\n");
    for (i, &p) in predicted.iter().enumerate() {
        let truth = seq
            .labels()
            .and_then(|l| catalog.name(l[i]))
            .unwrap_or_default();
        out.push_str(&format!(
            "{:?},{},{}\n",
            seq.depth(i),
            truth,
            catalog.name(p).unwrap_or_default()
        ));
    }
    out
}
