//! Synthetic labeled wells: Markov-chain lithology columns with
//! class-conditional curve signatures plus Gaussian noise.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{GiatError, Result};
use crate::seeding;
use crate::welllog::{LithologyCatalog, WellLogSequence};

const CURVE_MNEMONICS: [&str; 5] = ["GR", "AC", "DEN", "CNL", "PE"];
const CLASS_NAMES: [&str; 6] = [
    "sandstone",
    "mudstone",
    "limestone",
    "dolomite",
    "siltstone",
    "coal",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_classes: usize,
    pub n_curves: usize,
    pub length: usize,
    /// Markov self-transition probability, strictly inside (0, 1).
    pub stay_prob: f64,
    pub signature_amp: f64,
    pub noise_std: f64,
    /// Explicit `C × V` per-class curve offsets.
    pub signatures: Option<Vec<Vec<f64>>>,
    pub well_id: String,
    pub depth_start: f64,
    pub depth_step: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_classes: 3,
            n_curves: 3,
            length: 512,
            stay_prob: 0.9,
            signature_amp: 1.0,
            noise_std: 0.1,
            signatures: None,
            well_id: "synth".into(),
            depth_start: 1000.0,
            depth_step: 0.125,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GiatError::Config(m));
        if self.n_classes == 0 || self.n_curves == 0 || self.length == 0 {
            return bad("n_classes, n_curves and length must be ≥ 1".into());
        }
        if !(self.stay_prob > 0.0 && self.stay_prob < 1.0) {
            return bad(format!(
                "stay_prob must lie in (0,1), got {}",
                self.stay_prob
            ));
        }
        if !self.signature_amp.is_finite() || self.signature_amp <= 0.0 {
            return bad(format!(
                "signature_amp must be > 0, got {}",
                self.signature_amp
            ));
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return bad(format!("noise_std must be ≥ 0, got {}", self.noise_std));
        }
        if self.depth_step.is_nan() || self.depth_step <= 0.0 {
            return bad(format!("depth_step must be > 0, got {}", self.depth_step));
        }
        if let Some(sig) = &self.signatures {
            if sig.len() != self.n_classes || sig.iter().any(|r| r.len() != self.n_curves) {
                return bad(format!(
                    "signatures must be {}×{}",
                    self.n_classes, self.n_curves
                ));
            }
            if sig.iter().flatten().any(|x| !x.is_finite()) {
                return bad("signatures must be finite".into());
            }
        }
        Ok(())
    }

    pub fn curve_names(&self) -> Vec<String> {
        (0..self.n_curves)
            .map(|v| match CURVE_MNEMONICS.get(v) {
                Some(m) => (*m).to_string(),
                None => format!("C{v}"),
            })
            .collect()
    }

    pub fn catalog(&self) -> LithologyCatalog {
        let names = (0..self.n_classes)
            .map(|c| match CLASS_NAMES.get(c) {
                Some(n) if self.n_classes <= CLASS_NAMES.len() => (*n).to_string(),
                _ => format!("class{c}"),
            })
            .collect();
        LithologyCatalog::new(names).expect("generated names are unique")
    }
}

/// `cos(2π(c·V + v)/(C·V)) + c/C`.
///
/// The phase alone collides for some shapes (e.g. `V = 1`, classes `c` and
/// `C − c`); the per-class offset separates them.
pub fn default_signatures(n_classes: usize, n_curves: usize) -> Vec<Vec<f64>> {
    let total = (n_classes * n_curves) as f64;
    (0..n_classes)
        .map(|c| {
            let offset = c as f64 / n_classes as f64;
            (0..n_curves)
                .map(|v| (2.0 * PI * (c * n_curves + v) as f64 / total).cos() + offset)
                .collect()
        })
        .collect()
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<WellLogSequence> {
    cfg.validate()?;
    let signatures = cfg
        .signatures
        .clone()
        .unwrap_or_else(|| default_signatures(cfg.n_classes, cfg.n_curves));
    let mut rng = seeding::rng(cfg.seed);

    let c = cfg.n_classes;
    let mut labels = Vec::with_capacity(cfg.length);
    let mut state = rng.random_range(0..c);
    labels.push(state);
    for _ in 1..cfg.length {
        if c > 1 && rng.random::<f64>() >= cfg.stay_prob {
            // uniform over the other C − 1 classes
            let k = rng.random_range(0..c - 1);
            state = if k >= state { k + 1 } else { k };
        }
        labels.push(state);
    }

    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| GiatError::Config(e.to_string()))?;
    let mut curves = vec![Vec::with_capacity(cfg.length); cfg.n_curves];
    for &label in &labels {
        for (v, curve) in curves.iter_mut().enumerate() {
            let clean = signatures[label][v] * cfg.signature_amp;
            let x = if cfg.noise_std > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            };
            curve.push(x);
        }
    }
    WellLogSequence::new(
        cfg.well_id.clone(),
        cfg.depth_start,
        cfg.depth_step,
        cfg.curve_names(),
        curves,
        Some(labels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SynthConfig {
            seed: 42,
            length: 300,
            ..Default::default()
        };
        assert_eq!(synth_generate(&cfg).unwrap(), synth_generate(&cfg).unwrap());
        let other = SynthConfig {
            seed: 43,
            ..cfg.clone()
        };
        assert_ne!(
            synth_generate(&cfg).unwrap(),
            synth_generate(&other).unwrap()
        );
    }

    #[test]
    fn noise_free_explicit_signatures_are_exact() {
        let cfg = SynthConfig {
            seed: 1,
            n_classes: 2,
            n_curves: 2,
            length: 200,
            noise_std: 0.0,
            signature_amp: 2.5,
            signatures: Some(vec![vec![1.0, 1.0], vec![-1.0, -1.0]]),
            ..Default::default()
        };
        let s = synth_generate(&cfg).unwrap();
        let labels = s.labels().unwrap();
        for v in 0..2 {
            for (x, &l) in s.curve(v).iter().zip(labels) {
                assert_eq!(*x, if l == 0 { 2.5 } else { -2.5 });
            }
        }
    }

    #[test]
    fn mean_bed_thickness_matches_geometric_mean() {
        // Monte-Carlo oracle: run lengths of a chain leaving with prob 1 − p
        // are geometric with mean 1/(1 − p) = 10.
        let mut runs = 0usize;
        let mut samples = 0usize;
        for seed in 0..50 {
            let cfg = SynthConfig {
                seed,
                length: 10_000,
                stay_prob: 0.9,
                ..Default::default()
            };
            let s = synth_generate(&cfg).unwrap();
            let labels = s.labels().unwrap();
            runs += 1 + labels.windows(2).filter(|w| w[0] != w[1]).count();
            samples += labels.len();
        }
        let mean = samples as f64 / runs as f64;
        assert!((mean - 10.0).abs() < 1.5, "mean bed thickness {mean}");
    }

    #[test]
    fn label_marginals_are_uniform() {
        let cfg = SynthConfig {
            seed: 9,
            n_classes: 4,
            length: 50_000,
            stay_prob: 0.5,
            ..Default::default()
        };
        let s = synth_generate(&cfg).unwrap();
        let c = cfg.n_classes as f64;
        let n = cfg.length as f64;
        // Markov-correlated samples: inflate the iid standard error by the
        // chain's integrated autocorrelation factor (1 + ρ)/(1 − ρ) with
        // ρ = (C·p − 1)/(C − 1), the second eigenvalue of the transition matrix.
        let rho = (c * cfg.stay_prob - 1.0) / (c - 1.0);
        let se = ((1.0 / c) * (1.0 - 1.0 / c) / n * (1.0 + rho) / (1.0 - rho)).sqrt();
        for k in 0..cfg.n_classes {
            let freq = s.labels().unwrap().iter().filter(|&&l| l == k).count() as f64 / n;
            assert!((freq - 1.0 / c).abs() < 3.0 * se, "class {k}: {freq}");
        }
    }

    #[test]
    fn default_signatures_are_distinct() {
        for (c, v) in (1..=12).flat_map(|c| (1..=8).map(move |v| (c, v))) {
            let sig = default_signatures(c, v);
            for i in 0..c {
                for j in 0..i {
                    let d: f64 = sig[i].iter().zip(&sig[j]).map(|(a, b)| (a - b).abs()).sum();
                    assert!(d > 1e-6, "C={c} V={v}: classes {i},{j} collide");
                }
            }
        }
    }

    #[test]
    fn validation() {
        for bad in [
            SynthConfig {
                stay_prob: 1.0,
                ..Default::default()
            },
            SynthConfig {
                stay_prob: 0.0,
                ..Default::default()
            },
            SynthConfig {
                length: 0,
                ..Default::default()
            },
            SynthConfig {
                noise_std: -1.0,
                ..Default::default()
            },
            SynthConfig {
                signatures: Some(vec![vec![1.0]]),
                ..Default::default()
            },
        ] {
            assert!(synth_generate(&bad).is_err());
        }
    }
}
