//! Pre-norm transformer encoder with additively biased self-attention, a
//! per-position softmax head, summed cross-entropy and hand-written
//! reverse-mode gradients.

use crate::error::{GiatError, Result};
use crate::geo_bias::{build_bias, BiasMatrix, SimilarityMatrix};
use crate::linalg::{log_sum_exp, softmax_in_place, Matrix};
use crate::model::params::{positional_encoding, Gradients, LayerParams, Parameters};

const LN_EPS: f64 = 1e-5;

/// Everything a caller may inspect after a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `L × C`
    pub logits: Matrix,
    /// Row-wise softmax of `logits`.
    pub probabilities: Matrix,
    /// `[layer][head]`, each `L × L` post-softmax.
    pub attention: Vec<Vec<Matrix>>,
}

impl ForwardTrace {
    /// Mean over heads of one layer's attention.
    pub fn head_averaged(&self, layer: usize) -> Matrix {
        let heads = &self.attention[layer];
        let mut acc = Matrix::zeros(heads[0].rows(), heads[0].cols());
        for h in heads {
            acc.add_assign(h);
        }
        acc.scale(1.0 / heads.len() as f64)
    }

    pub fn final_attention(&self) -> Matrix {
        self.head_averaged(self.attention.len() - 1)
    }

    /// Per-position argmax; ties go to the lower class index.
    pub fn predictions(&self) -> Vec<usize> {
        (0..self.probabilities.rows())
            .map(|r| argmax(self.probabilities.row(r)))
            .collect()
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// `softmax(scores + bias)` row by row.
pub fn biased_softmax(scores: &Matrix, bias: Option<&Matrix>) -> Matrix {
    let mut p = scores.clone();
    if let Some(b) = bias {
        p.add_assign(b);
    }
    for r in 0..p.rows() {
        softmax_in_place(p.row_mut(r));
    }
    p
}

/// `Q·Kᵀ / √d_k` for one head.
pub fn scaled_scores(q: &Matrix, k: &Matrix) -> Matrix {
    q.matmul_nt(k).scale(1.0 / (q.cols() as f64).sqrt())
}

/// Given `p = softmax(z)` row-wise and `∂ℒ/∂p`, returns `∂ℒ/∂z`.
fn softmax_backward(p: &Matrix, dp: &Matrix) -> Matrix {
    let mut dz = Matrix::zeros(p.rows(), p.cols());
    for r in 0..p.rows() {
        let (pr, dpr) = (p.row(r), dp.row(r));
        let inner: f64 = pr.iter().zip(dpr).map(|(a, b)| a * b).sum();
        for (o, (a, b)) in dz.row_mut(r).iter_mut().zip(pr.iter().zip(dpr)) {
            *o = a * (b - inner);
        }
    }
    dz
}

fn head_slice(m: &Matrix, head: usize, dk: usize) -> Matrix {
    Matrix::from_fn(m.rows(), dk, |r, c| m[(r, head * dk + c)])
}

fn add_head_slice(dst: &mut Matrix, src: &Matrix, head: usize, dk: usize) {
    for r in 0..src.rows() {
        for c in 0..dk {
            dst[(r, head * dk + c)] += src[(r, c)];
        }
    }
}

fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Matrix {
    let mut y = x.matmul(w);
    y.add_row_vector(b);
    y
}

struct NormCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
}

fn layer_norm(x: &Matrix, gain: &[f64], shift: &[f64]) -> (Matrix, NormCache) {
    let d = x.cols() as f64;
    let mut xhat = Matrix::zeros(x.rows(), x.cols());
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let is = 1.0 / (var + LN_EPS).sqrt();
        for (o, v) in xhat.row_mut(r).iter_mut().zip(row) {
            *o = (v - mean) * is;
        }
        inv_std.push(is);
    }
    let y = Matrix::from_fn(x.rows(), x.cols(), |r, c| gain[c] * xhat[(r, c)] + shift[c]);
    (y, NormCache { xhat, inv_std })
}

/// Returns `∂ℒ/∂x`, accumulating gain/shift gradients.
fn layer_norm_backward(
    dy: &Matrix,
    cache: &NormCache,
    gain: &[f64],
    dgain: &mut [f64],
    dshift: &mut [f64],
) -> Matrix {
    let n = dy.cols() as f64;
    let mut dx = Matrix::zeros(dy.rows(), dy.cols());
    for r in 0..dy.rows() {
        let (dyr, xh) = (dy.row(r), cache.xhat.row(r));
        let mut dxhat = vec![0.0; dyr.len()];
        for c in 0..dyr.len() {
            dgain[c] += dyr[c] * xh[c];
            dshift[c] += dyr[c];
            dxhat[c] = dyr[c] * gain[c];
        }
        let sum: f64 = dxhat.iter().sum();
        let sum_xh: f64 = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum();
        let is = cache.inv_std[r];
        for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
            *o = is / n * (n * dxhat[c] - sum - xh[c] * sum_xh);
        }
    }
    dx
}

struct LayerCache {
    norm1: NormCache,
    a: Matrix,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    probs: Vec<Matrix>,
    o: Matrix,
    norm2: NormCache,
    b: Matrix,
    f_pre: Matrix,
    f_act: Matrix,
}

struct Cache {
    x: Matrix,
    layers: Vec<LayerCache>,
    h_final: Matrix,
}

fn check_finite(m: &Matrix, what: impl FnOnce() -> String) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(GiatError::NonFinite(what()))
    }
}

fn encoder_layer(
    p: &LayerParams,
    h: &Matrix,
    n_heads: usize,
    bias: Option<&Matrix>,
) -> (Matrix, LayerCache) {
    let d = h.cols();
    let dk = d / n_heads;
    let (a, norm1) = layer_norm(h, &p.ln1_gain, &p.ln1_shift);
    let q = affine(&a, &p.wq, &p.bq);
    let k = affine(&a, &p.wk, &p.bk);
    let v = affine(&a, &p.wv, &p.bv);
    let mut o = Matrix::zeros(h.rows(), d);
    let mut probs = Vec::with_capacity(n_heads);
    for head in 0..n_heads {
        let (qh, kh, vh) = (
            head_slice(&q, head, dk),
            head_slice(&k, head, dk),
            head_slice(&v, head, dk),
        );
        let ph = biased_softmax(&scaled_scores(&qh, &kh), bias);
        add_head_slice(&mut o, &ph.matmul(&vh), head, dk);
        probs.push(ph);
    }
    let h_mid = h.add(&affine(&o, &p.wo, &p.bo));
    let (b, norm2) = layer_norm(&h_mid, &p.ln2_gain, &p.ln2_shift);
    let f_pre = affine(&b, &p.w1, &p.b1);
    let f_act = f_pre.map(|x| x.max(0.0));
    let h_out = h_mid.add(&affine(&f_act, &p.w2, &p.b2));
    (
        h_out,
        LayerCache {
            norm1,
            a,
            q,
            k,
            v,
            probs,
            o,
            norm2,
            b,
            f_pre,
            f_act,
        },
    )
}

fn check_input(params: &Parameters, x: &Matrix, bias: Option<&Matrix>) -> Result<()> {
    let cfg = params.config();
    if x.shape() != (cfg.seq_len, cfg.n_curves) {
        return Err(GiatError::Shape(format!(
            "input is {:?}, model expects ({}, {})",
            x.shape(),
            cfg.seq_len,
            cfg.n_curves
        )));
    }
    check_finite(x, || "model input".into())?;
    if let Some(b) = bias {
        if b.shape() != (cfg.seq_len, cfg.seq_len) {
            return Err(GiatError::Shape(format!(
                "bias is {:?}, model expects {}×{}",
                b.shape(),
                cfg.seq_len,
                cfg.seq_len
            )));
        }
        check_finite(b, || "attention bias".into())?;
    }
    Ok(())
}

fn run(params: &Parameters, x: &Matrix, bias: Option<&Matrix>) -> Result<(ForwardTrace, Cache)> {
    check_input(params, x, bias)?;
    let cfg = params.config();
    let mut h = affine(x, &params.w_in, &params.b_in);
    h.add_assign(&positional_encoding(cfg.seq_len, cfg.d_model));
    let mut layers = Vec::with_capacity(cfg.n_layers);
    let mut attention = Vec::with_capacity(cfg.n_layers);
    for (i, lp) in params.layers.iter().enumerate() {
        let layer_bias = if cfg.layer_is_biased(i) { bias } else { None };
        let (next, cache) = encoder_layer(lp, &h, cfg.n_heads, layer_bias);
        check_finite(&next, || format!("activations of encoder layer {i}"))?;
        attention.push(cache.probs.clone());
        layers.push(cache);
        h = next;
    }
    let logits = affine(&h, &params.w_out, &params.b_out);
    check_finite(&logits, || "logits".into())?;
    let mut probabilities = logits.clone();
    for r in 0..probabilities.rows() {
        softmax_in_place(probabilities.row_mut(r));
    }
    Ok((
        ForwardTrace {
            logits,
            probabilities,
            attention,
        },
        Cache {
            x: x.clone(),
            layers,
            h_final: h,
        },
    ))
}

/// Forward pass with `M` added to every head's scores of every biased layer.
pub fn forward(params: &Parameters, x: &Matrix, bias: &BiasMatrix) -> Result<ForwardTrace> {
    Ok(run(params, x, Some(bias.matrix()))?.0)
}

/// Standard transformer forward: no bias term at all.
pub fn forward_unbiased(params: &Parameters, x: &Matrix) -> Result<ForwardTrace> {
    Ok(run(params, x, None)?.0)
}

/// Forward with `M = λ·S`, λ taken from the parameters.
pub fn forward_with_similarity(
    params: &Parameters,
    x: &Matrix,
    s: &SimilarityMatrix,
) -> Result<ForwardTrace> {
    forward(params, x, &build_bias(s, params.lambda)?)
}

fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(GiatError::Shape(format!(
            "{} labels for {rows} positions",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(GiatError::LabelOutOfRange {
            label: bad,
            classes,
        });
    }
    Ok(())
}

/// Summed cross-entropy `−Σᵢ log ŷ[i][yᵢ]`, evaluated through log-sum-exp.
pub fn loss(trace: &ForwardTrace, labels: &[usize]) -> Result<f64> {
    let logits = &trace.logits;
    check_labels(labels, logits.rows(), logits.cols())?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| log_sum_exp(logits.row(i)) - logits[(i, y)])
        .sum())
}

/// [`loss`] divided by the number of positions.
pub fn mean_loss(trace: &ForwardTrace, labels: &[usize]) -> Result<f64> {
    Ok(loss(trace, labels)? / labels.len() as f64)
}

/// Exact gradients of the summed loss under `M = λ·S`.
///
/// `S` is a constant. `∂ℒ/∂λ = Σ S ⊙ ∂ℒ/∂M` is filled in only when the
/// config marks λ trainable; otherwise its slot stays zero.
pub fn backward(
    params: &Parameters,
    x: &Matrix,
    s: &SimilarityMatrix,
    labels: &[usize],
) -> Result<(Gradients, f64)> {
    let cfg = params.config();
    let bias = build_bias(s, params.lambda)?;
    let (trace, cache) = run(params, x, Some(bias.matrix()))?;
    let total = loss(&trace, labels)?;

    let mut g = params.zeros_like();
    let mut dlogits = trace.probabilities.clone();
    for (i, &y) in labels.iter().enumerate() {
        dlogits[(i, y)] -= 1.0;
    }
    g.w_out.add_matmul_tn(&cache.h_final, &dlogits);
    dlogits.add_col_sums_into(&mut g.b_out);
    let mut dh = dlogits.matmul_nt(&params.w_out);

    let dk = cfg.d_head();
    let scale = 1.0 / (dk as f64).sqrt();
    let mut dbias = Matrix::zeros(cfg.seq_len, cfg.seq_len);
    for (i, (lp, lc)) in params.layers.iter().zip(&cache.layers).enumerate().rev() {
        let lg = &mut g.layers[i];

        // feed-forward block; the residual passes dh through unchanged
        lg.w2.add_matmul_tn(&lc.f_act, &dh);
        dh.add_col_sums_into(&mut lg.b2);
        let mut df = dh.matmul_nt(&lp.w2);
        for (d, &pre) in df.as_mut_slice().iter_mut().zip(lc.f_pre.as_slice()) {
            if pre <= 0.0 {
                *d = 0.0;
            }
        }
        lg.w1.add_matmul_tn(&lc.b, &df);
        df.add_col_sums_into(&mut lg.b1);
        let db = df.matmul_nt(&lp.w1);
        let dh_mid = dh.add(&layer_norm_backward(
            &db,
            &lc.norm2,
            &lp.ln2_gain,
            &mut lg.ln2_gain,
            &mut lg.ln2_shift,
        ));

        // attention block
        lg.wo.add_matmul_tn(&lc.o, &dh_mid);
        dh_mid.add_col_sums_into(&mut lg.bo);
        let d_o = dh_mid.matmul_nt(&lp.wo);
        let mut dq = Matrix::zeros(cfg.seq_len, cfg.d_model);
        let mut dkm = Matrix::zeros(cfg.seq_len, cfg.d_model);
        let mut dv = Matrix::zeros(cfg.seq_len, cfg.d_model);
        for (head, ph) in lc.probs.iter().enumerate() {
            let d_oh = head_slice(&d_o, head, dk);
            let qh = head_slice(&lc.q, head, dk);
            let kh = head_slice(&lc.k, head, dk);
            let vh = head_slice(&lc.v, head, dk);
            let dp = d_oh.matmul_nt(&vh);
            add_head_slice(&mut dv, &ph.matmul_tn(&d_oh), head, dk);
            let dscores = softmax_backward(ph, &dp);
            if cfg.layer_is_biased(i) {
                dbias.add_assign(&dscores);
            }
            add_head_slice(&mut dq, &dscores.matmul(&kh).scale(scale), head, dk);
            add_head_slice(&mut dkm, &dscores.matmul_tn(&qh).scale(scale), head, dk);
        }
        lg.wq.add_matmul_tn(&lc.a, &dq);
        dq.add_col_sums_into(&mut lg.bq);
        lg.wk.add_matmul_tn(&lc.a, &dkm);
        dkm.add_col_sums_into(&mut lg.bk);
        lg.wv.add_matmul_tn(&lc.a, &dv);
        dv.add_col_sums_into(&mut lg.bv);
        let mut da = dq.matmul_nt(&lp.wq);
        da.add_assign(&dkm.matmul_nt(&lp.wk));
        da.add_assign(&dv.matmul_nt(&lp.wv));
        dh = dh_mid.add(&layer_norm_backward(
            &da,
            &lc.norm1,
            &lp.ln1_gain,
            &mut lg.ln1_gain,
            &mut lg.ln1_shift,
        ));
        check_finite(&dh, || format!("gradients of encoder layer {i}"))?;
    }
    g.w_in.add_matmul_tn(&cache.x, &dh);
    dh.add_col_sums_into(&mut g.b_in);
    if cfg.lambda_trainable {
        g.lambda = s
            .matrix()
            .as_slice()
            .iter()
            .zip(dbias.as_slice())
            .map(|(a, b)| a * b)
            .sum();
    }
    if !g.is_finite() {
        return Err(GiatError::NonFinite("gradients".into()));
    }
    Ok((g, total))
}
