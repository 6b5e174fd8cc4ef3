//! Glue shared by the command-line tool and the C interface: multi-well
//! synthesis and the blind-well data preparation.

use crate::csc::{learn_filters, CscFilterBank};
use crate::error::{GiatError, Result};
use crate::seeding;
use crate::welllog::{
    fit_normalization, normalize, split_by_well, synth_generate, LithologyCatalog,
    NormalizationStats, SynthConfig, WellLogSequence,
};

/// Generates wells `W1..Wn` that share class signatures. Well `i` draws
/// from the sub-seed named `well{i}`.
pub fn synth_wells(cfg: &SynthConfig, n_wells: usize) -> Result<Vec<WellLogSequence>> {
    if n_wells == 0 {
        return Err(GiatError::Config("n_wells must be ≥ 1".into()));
    }
    (1..=n_wells)
        .map(|i| {
            synth_generate(&SynthConfig {
                seed: seeding::sub_seed(cfg.seed, &format!("well{i}")),
                well_id: format!("W{i}"),
                ..cfg.clone()
            })
        })
        .collect()
}

/// Normalized wells split into training and blind sets.
#[derive(Debug, Clone)]
pub struct PreparedWells {
    pub train: Vec<WellLogSequence>,
    pub blind: WellLogSequence,
    /// Fitted on the training wells only.
    pub stats: NormalizationStats,
}

pub fn prepare_wells(wells: Vec<WellLogSequence>, blind_well_id: &str) -> Result<PreparedWells> {
    let (train, blind) = split_by_well(wells, blind_well_id)?;
    let stats = fit_normalization(&train)?;
    let train = train
        .iter()
        .map(|w| normalize(w, &stats))
        .collect::<Result<Vec<_>>>()?;
    let blind = normalize(&blind, &stats)?;
    Ok(PreparedWells {
        train,
        blind,
        stats,
    })
}

impl PreparedWells {
    pub fn learn_bank(
        &self,
        catalog: &LithologyCatalog,
        w: usize,
        min_support: usize,
    ) -> Result<CscFilterBank> {
        learn_filters(&self.train, catalog, w, min_support)
    }
}
