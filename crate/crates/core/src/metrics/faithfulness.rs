//! Attention stability under bounded Gaussian input noise.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csc::CscFilterBank;
use crate::error::{GiatError, Result};
use crate::metrics::maps::{pearson_cc, ssim_global};
use crate::model::{predict, Parameters, Prediction};
use crate::seeding;
use crate::welllog::WellLogSequence;

pub const DEFAULT_SIGMA: f64 = 0.05;
pub const DEFAULT_BOUND: f64 = 0.15;
pub const DEFAULT_TRIALS: usize = 20;

/// Adds `clip(N(0, σ²), −bound, bound)` to every curve sample.
pub fn perturb(
    seq: &WellLogSequence,
    sigma: f64,
    bound: f64,
    seed: u64,
) -> Result<WellLogSequence> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(GiatError::Config(format!("sigma must be ≥ 0, got {sigma}")));
    }
    if bound.is_nan() || bound <= 0.0 {
        return Err(GiatError::Config(format!("bound must be > 0, got {bound}")));
    }
    if sigma == 0.0 {
        return Ok(seq.clone());
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| GiatError::Config(e.to_string()))?;
    let mut rng = seeding::rng(seed);
    let curves = seq
        .curves()
        .iter()
        .map(|c| {
            c.iter()
                .map(|&x| {
                    let mut y = x + noise.sample(&mut rng).clamp(-bound, bound);
                    // rounding of the sum may overshoot the bound by an ulp
                    while (y - x).abs() > bound {
                        y = if y > x { y.next_down() } else { y.next_up() };
                    }
                    y
                })
                .collect()
        })
        .collect();
    seq.with_curves(curves)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub sigma: f64,
    pub bound: f64,
    pub n_trials: usize,
    /// Mean over trials with a defined PCC; `None` if every trial was degenerate.
    pub mean_pcc: Option<f64>,
    pub mean_ssim: f64,
    /// Trials whose attention maps had degenerate variance in every window.
    pub excluded_trials: usize,
    /// Mean fraction of depths whose predicted class is unchanged.
    pub mean_prediction_agreement: f64,
    pub per_trial_pcc: Vec<Option<f64>>,
    pub per_trial_ssim: Vec<f64>,
}

struct Trial {
    pcc: Option<f64>,
    ssim: f64,
    agreement: f64,
}

fn compare(clean: &Prediction, noisy: &Prediction) -> Trial {
    let mut pccs = Vec::new();
    let mut ssims = Vec::new();
    for (a, b) in clean.windows.iter().zip(&noisy.windows) {
        let (a0, at) = (a.trace.final_attention(), b.trace.final_attention());
        if let Ok(p) = pearson_cc(&a0, &at) {
            pccs.push(p);
        }
        ssims.push(ssim_global(&a0, &at, 1.0).expect("same window shape"));
    }
    let agree = clean
        .labels
        .iter()
        .zip(&noisy.labels)
        .filter(|(a, b)| a == b)
        .count();
    Trial {
        pcc: (!pccs.is_empty()).then(|| pccs.iter().sum::<f64>() / pccs.len() as f64),
        ssim: ssims.iter().sum::<f64>() / ssims.len() as f64,
        agreement: agree as f64 / clean.labels.len() as f64,
    }
}

/// Compares the head-averaged final-layer attention of the clean well with
/// that of `n_trials` perturbed copies. The prior is recomputed from each
/// perturbed input. Per-trial values average over the well's windows.
pub fn faithfulness_eval(
    params: &Parameters,
    seq: &WellLogSequence,
    bank: &CscFilterBank,
    sigma: f64,
    bound: f64,
    n_trials: usize,
    seed: u64,
) -> Result<FaithfulnessReport> {
    if n_trials == 0 {
        return Err(GiatError::Config("n_trials must be ≥ 1".into()));
    }
    let clean = predict(params, seq, bank)?;
    let trials = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let noisy_seq = perturb(
                seq,
                sigma,
                bound,
                seeding::sub_seed(seed, &format!("trial{t}")),
            )?;
            Ok(compare(&clean, &predict(params, &noisy_seq, bank)?))
        })
        .collect::<Result<Vec<Trial>>>()?;

    let valid: Vec<f64> = trials.iter().filter_map(|t| t.pcc).collect();
    Ok(FaithfulnessReport {
        sigma,
        bound,
        n_trials,
        mean_pcc: (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64),
        mean_ssim: trials.iter().map(|t| t.ssim).sum::<f64>() / n_trials as f64,
        excluded_trials: n_trials - valid.len(),
        mean_prediction_agreement: trials.iter().map(|t| t.agreement).sum::<f64>()
            / n_trials as f64,
        per_trial_pcc: trials.iter().map(|t| t.pcc).collect(),
        per_trial_ssim: trials.iter().map(|t| t.ssim).collect(),
    })
}
