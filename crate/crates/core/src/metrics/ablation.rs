//! Paired training runs with and without the attention bias.

use serde::{Deserialize, Serialize};

use crate::csc::CscFilterBank;
use crate::error::Result;
use crate::metrics::report::{evaluate, EvalReport, FaithfulnessSettings};
use crate::model::{train, ModelConfig, TrainLog};
use crate::seeding;
use crate::welllog::WellLogSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub lambda: f64,
    /// True for the λ = 0 arm, which is the unbiased transformer.
    pub standard_transformer: bool,
    pub best_epoch: usize,
    pub best_blind_loss: f64,
    pub epochs_run: usize,
    pub report: EvalReport,
}

/// `biased − standard` for each headline metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationDelta {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub kappa: Option<f64>,
    pub mean_pcc: Option<f64>,
    pub mean_ssim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub biased: AblationArm,
    pub standard: AblationArm,
    pub delta: AblationDelta,
}

impl AblationDelta {
    pub fn between(biased: &EvalReport, standard: &EvalReport) -> Self {
        let diff = |a: Option<f64>, b: Option<f64>| Some(a? - b?);
        let pcc = |r: &EvalReport| r.faithfulness.as_ref().and_then(|f| f.mean_pcc);
        let ssim = |r: &EvalReport| r.faithfulness.as_ref().map(|f| f.mean_ssim);
        AblationDelta {
            accuracy: biased.accuracy - standard.accuracy,
            macro_precision: biased.macro_precision - standard.macro_precision,
            macro_recall: biased.macro_recall - standard.macro_recall,
            kappa: diff(biased.kappa, standard.kappa),
            mean_pcc: diff(pcc(biased), pcc(standard)),
            mean_ssim: diff(ssim(biased), ssim(standard)),
        }
    }
}

fn run_arm(
    cfg: &ModelConfig,
    train_wells: &[WellLogSequence],
    blind: &WellLogSequence,
    bank: &CscFilterBank,
    faithfulness: FaithfulnessSettings,
    seed: u64,
) -> Result<AblationArm> {
    let (params, log): (_, TrainLog) = train(cfg, train_wells, blind, bank)?;
    let (report, _) = evaluate(
        &params,
        blind,
        bank,
        bank.catalog(),
        Some(faithfulness),
        seeding::sub_seed(seed, "faithfulness"),
    )?;
    Ok(AblationArm {
        lambda: cfg.lambda,
        standard_transformer: cfg.lambda == 0.0,
        best_epoch: log.best_epoch,
        best_blind_loss: log.best_blind_loss,
        epochs_run: log.epochs.len(),
        report,
    })
}

/// Trains the configured λ and λ = 0 on identical data and seeds, and
/// evaluates both on the blind well.
pub fn ablation_run(
    cfg: &ModelConfig,
    train_wells: &[WellLogSequence],
    blind: &WellLogSequence,
    bank: &CscFilterBank,
    faithfulness: FaithfulnessSettings,
    seed: u64,
) -> Result<AblationReport> {
    let standard_cfg = ModelConfig {
        lambda: 0.0,
        lambda_trainable: false,
        ..cfg.clone()
    };
    let (biased, standard) = rayon::join(
        || run_arm(cfg, train_wells, blind, bank, faithfulness, seed),
        || run_arm(&standard_cfg, train_wells, blind, bank, faithfulness, seed),
    );
    let (biased, standard) = (biased?, standard?);
    let delta = AblationDelta::between(&biased.report, &standard.report);
    Ok(AblationReport {
        biased,
        standard,
        delta,
    })
}
