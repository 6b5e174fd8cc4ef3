//! Whole-matrix comparison of attention maps.

use crate::error::{GiatError, Result};
use crate::linalg::Matrix;

const MIN_VARIANCE: f64 = 1e-12;

struct Moments {
    mean_a: f64,
    mean_b: f64,
    var_a: f64,
    var_b: f64,
    cov: f64,
}

fn moments(a: &Matrix, b: &Matrix) -> Result<Moments> {
    if a.shape() != b.shape() {
        return Err(GiatError::Shape(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (xa, xb) = (a.as_slice(), b.as_slice());
    let n = xa.len() as f64;
    if xa.is_empty() {
        return Err(GiatError::Empty("matrix".into()));
    }
    let mean_a = xa.iter().sum::<f64>() / n;
    let mean_b = xb.iter().sum::<f64>() / n;
    let central = |x: &[f64], mx: f64, y: &[f64], my: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - mx) * (q - my))
            .sum::<f64>()
            / n
    };
    Ok(Moments {
        mean_a,
        mean_b,
        var_a: central(xa, mean_a, xa, mean_a),
        var_b: central(xb, mean_b, xb, mean_b),
        cov: central(xa, mean_a, xb, mean_b),
    })
}

/// Pearson correlation of the flattened entries.
pub fn pearson_cc(a: &Matrix, b: &Matrix) -> Result<f64> {
    let m = moments(a, b)?;
    if m.var_a < MIN_VARIANCE || m.var_b < MIN_VARIANCE {
        return Err(GiatError::DegenerateVariance("pearson_cc input"));
    }
    Ok((m.cov / (m.var_a * m.var_b).sqrt()).clamp(-1.0, 1.0))
}

/// Single-window SSIM over the whole matrix, `C1 = (0.01R)²`, `C2 = (0.03R)²`.
pub fn ssim_global(a: &Matrix, b: &Matrix, dynamic_range: f64) -> Result<f64> {
    let m = moments(a, b)?;
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    let num = (2.0 * m.mean_a * m.mean_b + c1) * (2.0 * m.cov + c2);
    let den = (m.mean_a * m.mean_a + m.mean_b * m.mean_b + c1) * (m.var_a + m.var_b + c2);
    Ok(num / den)
}
