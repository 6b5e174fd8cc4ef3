//! Trainable tensors and their fixed flat ordering.
//!
//! The ordering used by [`Parameters::tensors`] is the checkpoint blob
//! layout and the Adam state layout:
//!
//! ```text
//! input.w (V×d)  input.b (d)
//! for each layer i:
//!   layer{i}.ln1.gain  layer{i}.ln1.shift
//!   layer{i}.attn.wq  .bq  .wk  .bk  .wv  .bv  .wo  .bo   (d×d, d)
//!   layer{i}.ln2.gain  layer{i}.ln2.shift
//!   layer{i}.ffn.w1 (d×f)  .b1 (f)  .w2 (f×d)  .b2 (d)
//! head.w (d×C)  head.b (C)
//! lambda (1)
//! ```
//!
//! Matrices are row-major with the input dimension as rows, so a layer
//! computes `y = x·W + b`.

use rand_distr::{Distribution, Uniform};

use crate::error::{GiatError, Result};
use crate::linalg::Matrix;
use crate::model::ModelConfig;
use crate::seeding;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub ln1_gain: Vec<f64>,
    pub ln1_shift: Vec<f64>,
    pub wq: Matrix,
    pub bq: Vec<f64>,
    pub wk: Matrix,
    pub bk: Vec<f64>,
    pub wv: Matrix,
    pub bv: Vec<f64>,
    pub wo: Matrix,
    pub bo: Vec<f64>,
    pub ln2_gain: Vec<f64>,
    pub ln2_shift: Vec<f64>,
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    config: ModelConfig,
    pub w_in: Matrix,
    pub b_in: Vec<f64>,
    pub layers: Vec<LayerParams>,
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
    /// Bias scale. Only updated by training when `lambda_trainable`.
    pub lambda: f64,
}

/// Gradients share the parameter layout.
pub type Gradients = Parameters;

fn xavier(rows: usize, cols: usize, rng: &mut seeding::Rng) -> Matrix {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-a, a).expect("valid range");
    Matrix::from_fn(rows, cols, |_, _| dist.sample(rng))
}

impl Parameters {
    /// Xavier-uniform weights, zero biases, unit layer-norm gains.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seeding::named_rng(config.seed, "init");
        let (d, f) = (config.d_model, config.d_ff);
        let w_in = xavier(config.n_curves, d, &mut rng);
        let layers = (0..config.n_layers)
            .map(|_| LayerParams {
                ln1_gain: vec![1.0; d],
                ln1_shift: vec![0.0; d],
                wq: xavier(d, d, &mut rng),
                bq: vec![0.0; d],
                wk: xavier(d, d, &mut rng),
                bk: vec![0.0; d],
                wv: xavier(d, d, &mut rng),
                bv: vec![0.0; d],
                wo: xavier(d, d, &mut rng),
                bo: vec![0.0; d],
                ln2_gain: vec![1.0; d],
                ln2_shift: vec![0.0; d],
                w1: xavier(d, f, &mut rng),
                b1: vec![0.0; f],
                w2: xavier(f, d, &mut rng),
                b2: vec![0.0; d],
            })
            .collect();
        let w_out = xavier(d, config.n_classes, &mut rng);
        Ok(Parameters {
            config: config.clone(),
            w_in,
            b_in: vec![0.0; d],
            layers,
            w_out,
            b_out: vec![0.0; config.n_classes],
            lambda: config.lambda,
        })
    }

    /// Same shapes, every entry zero (including λ).
    pub fn zeros(config: &ModelConfig) -> Self {
        let (d, f, v, c) = (
            config.d_model,
            config.d_ff,
            config.n_curves,
            config.n_classes,
        );
        let layer = LayerParams {
            ln1_gain: vec![0.0; d],
            ln1_shift: vec![0.0; d],
            wq: Matrix::zeros(d, d),
            bq: vec![0.0; d],
            wk: Matrix::zeros(d, d),
            bk: vec![0.0; d],
            wv: Matrix::zeros(d, d),
            bv: vec![0.0; d],
            wo: Matrix::zeros(d, d),
            bo: vec![0.0; d],
            ln2_gain: vec![0.0; d],
            ln2_shift: vec![0.0; d],
            w1: Matrix::zeros(d, f),
            b1: vec![0.0; f],
            w2: Matrix::zeros(f, d),
            b2: vec![0.0; d],
        };
        Parameters {
            config: config.clone(),
            w_in: Matrix::zeros(v, d),
            b_in: vec![0.0; d],
            layers: vec![layer; config.n_layers],
            w_out: Matrix::zeros(d, c),
            b_out: vec![0.0; c],
            lambda: 0.0,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn zeros_like(&self) -> Self {
        Parameters::zeros(&self.config)
    }

    /// Total scalar count, a pure function of the config.
    pub fn count_for(config: &ModelConfig) -> usize {
        let (d, f, v, c) = (
            config.d_model,
            config.d_ff,
            config.n_curves,
            config.n_classes,
        );
        let per_layer = 4 * d + 4 * (d * d + d) + (d * f + f) + (f * d + d);
        v * d + d + config.n_layers * per_layer + d * c + c + 1
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("input.w".into(), self.w_in.as_slice()),
            ("input.b".into(), &self.b_in),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            let p = |s: &str| format!("layer{i}.{s}");
            out.extend([
                (p("ln1.gain"), l.ln1_gain.as_slice()),
                (p("ln1.shift"), &l.ln1_shift),
                (p("attn.wq"), l.wq.as_slice()),
                (p("attn.bq"), &l.bq),
                (p("attn.wk"), l.wk.as_slice()),
                (p("attn.bk"), &l.bk),
                (p("attn.wv"), l.wv.as_slice()),
                (p("attn.bv"), &l.bv),
                (p("attn.wo"), l.wo.as_slice()),
                (p("attn.bo"), &l.bo),
                (p("ln2.gain"), &l.ln2_gain),
                (p("ln2.shift"), &l.ln2_shift),
                (p("ffn.w1"), l.w1.as_slice()),
                (p("ffn.b1"), &l.b1),
                (p("ffn.w2"), l.w2.as_slice()),
                (p("ffn.b2"), &l.b2),
            ]);
        }
        out.push(("head.w".into(), self.w_out.as_slice()));
        out.push(("head.b".into(), &self.b_out));
        out.push(("lambda".into(), std::slice::from_ref(&self.lambda)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = vec![
            ("input.w".into(), self.w_in.as_mut_slice()),
            ("input.b".into(), &mut self.b_in),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            let p = |s: &str| format!("layer{i}.{s}");
            out.extend([
                (p("ln1.gain"), l.ln1_gain.as_mut_slice()),
                (p("ln1.shift"), &mut l.ln1_shift),
                (p("attn.wq"), l.wq.as_mut_slice()),
                (p("attn.bq"), &mut l.bq),
                (p("attn.wk"), l.wk.as_mut_slice()),
                (p("attn.bk"), &mut l.bk),
                (p("attn.wv"), l.wv.as_mut_slice()),
                (p("attn.bv"), &mut l.bv),
                (p("attn.wo"), l.wo.as_mut_slice()),
                (p("attn.bo"), &mut l.bo),
                (p("ln2.gain"), &mut l.ln2_gain),
                (p("ln2.shift"), &mut l.ln2_shift),
                (p("ffn.w1"), l.w1.as_mut_slice()),
                (p("ffn.b1"), &mut l.b1),
                (p("ffn.w2"), l.w2.as_mut_slice()),
                (p("ffn.b2"), &mut l.b2),
            ]);
        }
        out.push(("head.w".into(), self.w_out.as_mut_slice()));
        out.push(("head.b".into(), &mut self.b_out));
        out.push(("lambda".into(), std::slice::from_mut(&mut self.lambda)));
        out
    }

    /// Concatenation of all tensors in the documented order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors()
            .into_iter()
            .flat_map(|(_, t)| t.iter().copied())
            .collect()
    }

    /// Inverse of [`Parameters::to_flat`]; the length must match exactly.
    pub fn from_flat(config: &ModelConfig, flat: &[f64]) -> Result<Self> {
        config.validate()?;
        let expected = Parameters::count_for(config);
        if flat.len() != expected {
            return Err(GiatError::Shape(format!(
                "parameter blob has {} values, config requires {expected}",
                flat.len()
            )));
        }
        let mut p = Parameters::zeros(config);
        let mut offset = 0;
        for (_, t) in p.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }
}

/// Fixed sinusoidal table, `len × d`.
pub fn positional_encoding(len: usize, d: usize) -> Matrix {
    Matrix::from_fn(len, d, |pos, i| {
        let pair = (i / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * pair / d as f64);
        if i % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_matches_tensor_walk() {
        for cfg in [
            ModelConfig::default(),
            ModelConfig {
                d_model: 8,
                n_heads: 2,
                n_layers: 1,
                d_ff: 16,
                seq_len: 8,
                n_curves: 2,
                n_classes: 3,
                ..Default::default()
            },
        ] {
            let p = Parameters::init(&cfg).unwrap();
            assert_eq!(p.count(), Parameters::count_for(&cfg));
            assert_eq!(p.to_flat().len(), p.count());
        }
    }

    #[test]
    fn flat_round_trip_and_length_check() {
        let cfg = ModelConfig {
            d_model: 8,
            n_heads: 2,
            n_layers: 2,
            d_ff: 12,
            ..Default::default()
        };
        let p = Parameters::init(&cfg).unwrap();
        let q = Parameters::from_flat(&cfg, &p.to_flat()).unwrap();
        assert_eq!(p, q);
        let mut short = p.to_flat();
        short.pop();
        assert!(Parameters::from_flat(&cfg, &short).is_err());
    }

    #[test]
    fn init_is_seeded() {
        let cfg = ModelConfig::default();
        assert_eq!(
            Parameters::init(&cfg).unwrap(),
            Parameters::init(&cfg).unwrap()
        );
        let other = ModelConfig {
            seed: 1,
            ..cfg.clone()
        };
        assert_ne!(
            Parameters::init(&cfg).unwrap(),
            Parameters::init(&other).unwrap()
        );
        assert_eq!(Parameters::init(&cfg).unwrap().lambda, cfg.lambda);
    }

    #[test]
    fn positional_table_first_rows() {
        let pe = positional_encoding(3, 4);
        assert_eq!(pe.row(0), [0.0, 1.0, 0.0, 1.0]);
        assert!((pe[(1, 0)] - 1f64.sin()).abs() < 1e-15);
        assert!((pe[(1, 3)] - (0.01f64).cos()).abs() < 1e-15);
    }
}
