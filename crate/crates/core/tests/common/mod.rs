#![allow(dead_code)]

use giat::geo_bias::{build_similarity, SimilarityMatrix, DEFAULT_EPS};
use giat::linalg::Matrix;
use giat::model::{backward, forward_with_similarity, loss, ModelConfig, Parameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// L=8, d_model=8, 2 heads, 1 layer, C=3, V=2, trainable λ = 1.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        d_model: 8,
        n_heads: 2,
        n_layers: 1,
        d_ff: 16,
        seq_len: 8,
        n_curves: 2,
        n_classes: 3,
        lambda: 1.0,
        lambda_trainable: true,
        seed: 5,
        ..ModelConfig::default()
    }
}

/// Initialized parameters with every bias, gain and shift jittered so no
/// gradient vanishes by symmetry.
pub fn jittered_params(cfg: &ModelConfig, seed: u64) -> Parameters {
    let mut p = Parameters::init(cfg).unwrap();
    let mut r = rng(seed);
    for (_, t) in p.tensors_mut() {
        for x in t.iter_mut() {
            *x += r.random_range(-0.3..0.3);
        }
    }
    p.lambda = cfg.lambda;
    p
}

pub fn random_similarity(len: usize, width: usize, seed: u64) -> SimilarityMatrix {
    let mut r = rng(seed);
    build_similarity(&random_matrix(len, width, 1.0, &mut r), DEFAULT_EPS).unwrap()
}

pub fn random_labels(len: usize, classes: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(seed);
    (0..len).map(|_| r.random_range(0..classes)).collect()
}

pub struct GradCheck {
    pub checked: usize,
    pub failures: Vec<String>,
    pub max_rel: f64,
}

/// Compares every analytical gradient entry against central differences.
pub fn gradient_check(
    params: &Parameters,
    x: &Matrix,
    s: &SimilarityMatrix,
    labels: &[usize],
    h: f64,
) -> GradCheck {
    let (grads, _) = backward(params, x, s, labels).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = grads
        .tensors()
        .into_iter()
        .map(|(n, t)| (n, t.to_vec()))
        .collect();
    let eval = |p: &Parameters| loss(&forward_with_similarity(p, x, s).unwrap(), labels).unwrap();

    let mut out = GradCheck {
        checked: 0,
        failures: Vec::new(),
        max_rel: 0.0,
    };
    let mut probe = params.clone();
    for (ti, (name, g)) in analytic.iter().enumerate() {
        for (j, &a) in g.iter().enumerate() {
            let orig = probe.tensors_mut()[ti].1[j];
            probe.tensors_mut()[ti].1[j] = orig + h;
            let up = eval(&probe);
            probe.tensors_mut()[ti].1[j] = orig - h;
            let down = eval(&probe);
            probe.tensors_mut()[ti].1[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let scale = a.abs().max(numeric.abs());
            let ok = if scale < 1e-3 {
                (a - numeric).abs() < 1e-7
            } else {
                let rel = (a - numeric).abs() / scale;
                out.max_rel = out.max_rel.max(rel);
                rel < 1e-4
            };
            if !ok {
                out.failures
                    .push(format!("{name}[{j}]: analytic {a:e} numeric {numeric:e}"));
            }
            out.checked += 1;
        }
    }
    out
}

/// Accuracy, macro precision, macro recall and kappa from the expanded list
/// of (truth, prediction) pairs rather than from row and column sums.
pub fn definitional_metrics(counts: &[Vec<u64>]) -> (f64, f64, f64, Option<f64>) {
    let mut pairs = Vec::new();
    for (t, row) in counts.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            pairs.extend(std::iter::repeat_n((t, p), n as usize));
        }
    }
    let n = pairs.len() as f64;
    let agree = pairs.iter().filter(|(t, p)| t == p).count() as f64 / n;
    let c = counts.len();
    let (mut prec, mut rec, mut present) = (0.0, 0.0, 0usize);
    let mut chance = 0.0;
    for k in 0..c {
        let truth_k = pairs.iter().filter(|(t, _)| *t == k).count();
        let pred_k = pairs.iter().filter(|(_, p)| *p == k).count();
        let hit = pairs.iter().filter(|(t, p)| *t == k && *p == k).count();
        chance += (truth_k as f64 / n) * (pred_k as f64 / n);
        if truth_k + pred_k == 0 {
            continue;
        }
        present += 1;
        if pred_k > 0 {
            prec += hit as f64 / pred_k as f64;
        }
        if truth_k > 0 {
            rec += hit as f64 / truth_k as f64;
        }
    }
    let kappa = if (chance - 1.0).abs() < 1e-15 {
        (agree == 1.0).then_some(1.0)
    } else {
        Some((agree - chance) / (1.0 - chance))
    };
    (agree, prec / present as f64, rec / present as f64, kappa)
}

/// Cosine similarity by an explicit double loop, zero for short rows.
pub fn cosine_oracle(g: &Matrix, eps: f64) -> Matrix {
    let n = g.rows();
    let norm = |i: usize| g.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
    Matrix::from_fn(n, n, |i, k| {
        let (ni, nk) = (norm(i), norm(k));
        if ni < eps || nk < eps {
            return 0.0;
        }
        let mut d = 0.0;
        for j in 0..g.cols() {
            d += g[(i, j)] * g[(k, j)];
        }
        d / (ni * nk)
    })
}

/// Global SSIM evaluated straight from its formula.
pub fn ssim_oracle(a: &Matrix, b: &Matrix, range: f64) -> f64 {
    let (x, y) = (a.as_slice(), b.as_slice());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let vx = x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / n;
    let vy = y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / n;
    let cxy = x
        .iter()
        .zip(y)
        .map(|(p, q)| (p - mx) * (q - my))
        .sum::<f64>()
        / n;
    let c1 = (0.01 * range) * (0.01 * range);
    let c2 = (0.03 * range) * (0.03 * range);
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}
