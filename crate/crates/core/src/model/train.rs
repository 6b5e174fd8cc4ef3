//! Per-window Adam training with blind-well early stopping, and windowed
//! prediction over whole wells.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csc::{response_map, CscFilterBank};
use crate::error::{GiatError, Result};
use crate::geo_bias::{window_similarity, SimilarityMatrix};
use crate::linalg::Matrix;
use crate::model::adam::{adam_step, AdamState};
use crate::model::network::{argmax, backward, forward_with_similarity, mean_loss, ForwardTrace};
use crate::model::params::Parameters;
use crate::model::ModelConfig;
use crate::seeding;
use crate::welllog::WellLogSequence;

/// One model input: a length-`L` slice of a well with its prior.
#[derive(Debug, Clone)]
pub struct Window {
    pub start: usize,
    pub x: Matrix,
    pub similarity: SimilarityMatrix,
    pub labels: Option<Vec<usize>>,
}

/// Non-overlapping windows; a trailing partial window is dropped.
pub fn training_windows(
    seq: &WellLogSequence,
    bank: &CscFilterBank,
    len: usize,
) -> Result<Vec<Window>> {
    let starts: Vec<usize> = (0..seq.len() / len).map(|k| k * len).collect();
    windows_at(seq, bank, len, &starts)
}

/// Stride-`L` windows plus, when needed, one right-aligned final window.
pub fn prediction_starts(n: usize, len: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..n / len).map(|k| k * len).collect();
    if !n.is_multiple_of(len) && n >= len {
        starts.push(n - len);
    }
    starts
}

pub fn windows_at(
    seq: &WellLogSequence,
    bank: &CscFilterBank,
    len: usize,
    starts: &[usize],
) -> Result<Vec<Window>> {
    let g = response_map(seq, bank)?;
    starts
        .iter()
        .map(|&start| {
            Ok(Window {
                start,
                x: seq.input_window(start, len),
                similarity: window_similarity(&g, start, len)?,
                labels: seq.labels().map(|l| l[start..start + len].to_vec()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-position loss over the epoch's windows, measured before each update.
    pub train_loss: f64,
    /// Mean per-position loss on the blind well after the epoch.
    pub blind_loss: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_blind_loss: f64,
    pub stopped_early: bool,
}

impl TrainLog {
    /// `epoch,train_loss,blind_loss,elapsed_s` rows. Losses are written
    /// exactly; `elapsed_s` is wall-clock time and varies between runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,blind_loss,elapsed_s\n");
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{:?},{:?},{:.3}\n",
                r.epoch, r.train_loss, r.blind_loss, r.elapsed_s
            ));
        }
        out
    }
}

fn check_compat(cfg: &ModelConfig, bank: &CscFilterBank, wells: &[&WellLogSequence]) -> Result<()> {
    if bank.num_classes() != cfg.n_classes {
        return Err(GiatError::CatalogMismatch(format!(
            "filter bank has {} classes, model config {}",
            bank.num_classes(),
            cfg.n_classes
        )));
    }
    if bank.num_curves() != cfg.n_curves {
        return Err(GiatError::Shape(format!(
            "filter bank has {} curves, model config {}",
            bank.num_curves(),
            cfg.n_curves
        )));
    }
    for w in wells {
        w.check_curves(bank.curve_names())?;
        w.require_labels(cfg.n_classes)?;
    }
    Ok(())
}

fn mean_window_loss(params: &Parameters, windows: &[Window]) -> Result<f64> {
    let losses = windows
        .par_iter()
        .map(|w| {
            let t = forward_with_similarity(params, &w.x, &w.similarity)?;
            mean_loss(&t, w.labels.as_deref().expect("labeled window"))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Trains from scratch; see [`train_with`].
pub fn train(
    cfg: &ModelConfig,
    train_wells: &[WellLogSequence],
    blind_well: &WellLogSequence,
    bank: &CscFilterBank,
) -> Result<(Parameters, TrainLog)> {
    train_with(cfg, train_wells, blind_well, bank, |_| {})
}

/// Trains on normalized wells, calling `on_epoch` after every epoch.
///
/// Returns the parameters with the lowest blind-well loss. The bank must not
/// have been learned from the blind well.
pub fn train_with(
    cfg: &ModelConfig,
    train_wells: &[WellLogSequence],
    blind_well: &WellLogSequence,
    bank: &CscFilterBank,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Parameters, TrainLog)> {
    cfg.validate()?;
    if bank
        .source_wells()
        .iter()
        .any(|w| w == blind_well.well_id())
    {
        return Err(GiatError::Config(format!(
            "filter bank was learned from blind well {}",
            blind_well.well_id()
        )));
    }
    let mut all: Vec<&WellLogSequence> = train_wells.iter().collect();
    all.push(blind_well);
    check_compat(cfg, bank, &all)?;

    let mut windows = Vec::new();
    for w in train_wells {
        windows.extend(training_windows(w, bank, cfg.seq_len)?);
    }
    if windows.is_empty() {
        return Err(GiatError::Empty(format!(
            "no training well has a full window of {} samples",
            cfg.seq_len
        )));
    }
    let blind_windows = training_windows(blind_well, bank, cfg.seq_len)?;
    if blind_windows.is_empty() {
        return Err(GiatError::Empty(format!(
            "blind well {} is shorter than one window",
            blind_well.well_id()
        )));
    }

    let mut params = Parameters::init(cfg)?;
    let mut adam = AdamState::for_params(&params);
    let mut shuffle_rng = seeding::named_rng(cfg.seed, "shuffle");
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let positions = (windows.len() * cfg.seq_len) as f64;

    let started = Instant::now();
    let mut log = TrainLog {
        epochs: Vec::new(),
        best_epoch: 0,
        best_blind_loss: f64::INFINITY,
        stopped_early: false,
    };
    let mut best = params.clone();
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut train_loss = 0.0;
        for &i in &order {
            let w = &windows[i];
            let (grads, l) = backward(
                &params,
                &w.x,
                &w.similarity,
                w.labels.as_deref().expect("labeled"),
            )?;
            train_loss += l;
            adam_step(&mut params, &grads, &mut adam);
        }
        let blind_loss = mean_window_loss(&params, &blind_windows)?;
        let record = EpochRecord {
            epoch,
            train_loss: train_loss / positions,
            blind_loss,
            elapsed_s: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        log.epochs.push(record);
        if blind_loss < log.best_blind_loss {
            log.best_blind_loss = blind_loss;
            log.best_epoch = epoch;
            best = params.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                log.stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }
    Ok((best, log))
}

#[derive(Debug, Clone)]
pub struct WindowTrace {
    pub start: usize,
    pub trace: ForwardTrace,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    /// Per-depth class index.
    pub labels: Vec<usize>,
    /// `n × C`, taken from the window that owns each position.
    pub probabilities: Matrix,
    pub windows: Vec<WindowTrace>,
}

/// Predicts every depth of a normalized well.
///
/// Windows of length `L` with stride `L`; a trailing remainder is covered by
/// one right-aligned window whose outputs overwrite the overlap.
pub fn predict(
    params: &Parameters,
    seq: &WellLogSequence,
    bank: &CscFilterBank,
) -> Result<Prediction> {
    let cfg = params.config();
    let len = cfg.seq_len;
    if seq.len() < len {
        return Err(GiatError::Shape(format!(
            "well {} has {} samples, shorter than the window {len}",
            seq.well_id(),
            seq.len()
        )));
    }
    seq.check_curves(bank.curve_names())?;
    let windows = windows_at(seq, bank, len, &prediction_starts(seq.len(), len))?;
    let traces = windows
        .par_iter()
        .map(|w| {
            Ok(WindowTrace {
                start: w.start,
                trace: forward_with_similarity(params, &w.x, &w.similarity)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut probabilities = Matrix::zeros(seq.len(), cfg.n_classes);
    for wt in &traces {
        for r in 0..len {
            probabilities
                .row_mut(wt.start + r)
                .copy_from_slice(wt.trace.probabilities.row(r));
        }
    }
    let labels = (0..seq.len())
        .map(|r| argmax(probabilities.row(r)))
        .collect();
    Ok(Prediction {
        labels,
        probabilities,
        windows: traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_window_layout() {
        assert_eq!(prediction_starts(64, 64), [0]);
        assert_eq!(prediction_starts(96, 64), [0, 32]);
        assert_eq!(prediction_starts(128, 64), [0, 64]);
        assert_eq!(prediction_starts(130, 64), [0, 64, 66]);
    }

    #[test]
    fn argmax_prefers_lower_index_on_ties() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }
}
