//! Cosine similarity between geological feature vectors and the additive
//! attention bias derived from it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{GiatError, Result};
use crate::linalg::{dot, Matrix};

pub const DEFAULT_EPS: f64 = 1e-8;

/// `L × L` cosine similarities between rows of a response map.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix(Matrix);

impl SimilarityMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }

    /// All-zero similarity, which yields a zero bias for any λ.
    pub fn zeros(len: usize) -> Self {
        SimilarityMatrix(Matrix::zeros(len, len))
    }

    /// Wraps an arbitrary square matrix. Used for synthetic bias experiments.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(GiatError::Shape(format!(
                "similarity must be square, got {:?}",
                m.shape()
            )));
        }
        if !m.is_finite() {
            return Err(GiatError::NonFinite("similarity matrix".into()));
        }
        Ok(SimilarityMatrix(m))
    }
}

/// Additive pre-softmax bias `M = λ·S`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasMatrix {
    m: Matrix,
    lambda: f64,
}

impl BiasMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.m.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.m.rows() == 0
    }

    /// Arbitrary finite bias, bypassing the similarity construction.
    pub fn from_raw(m: Matrix) -> Result<Self> {
        if m.rows() != m.cols() || !m.is_finite() {
            return Err(GiatError::Shape("bias must be square and finite".into()));
        }
        Ok(BiasMatrix { m, lambda: 1.0 })
    }
}

/// `S[i][k] = g(i)·g(k) / (‖g(i)‖‖g(k)‖)`; rows with norm below `eps`
/// contribute zero similarity. The result is symmetrized and clamped to
/// `[-1, 1]` against rounding.
pub fn build_similarity(g: &Matrix, eps: f64) -> Result<SimilarityMatrix> {
    if !g.is_finite() {
        return Err(GiatError::NonFinite("response map".into()));
    }
    let l = g.rows();
    let norms: Vec<f64> = (0..l).map(|i| dot(g.row(i), g.row(i)).sqrt()).collect();
    let mut s = Matrix::zeros(l, l);
    for i in 0..l {
        if norms[i] < eps {
            continue;
        }
        for k in 0..l {
            if norms[k] < eps {
                continue;
            }
            s[(i, k)] = dot(g.row(i), g.row(k)) / (norms[i] * norms[k]);
        }
    }
    for i in 0..l {
        for k in i + 1..l {
            let avg = (0.5 * (s[(i, k)] + s[(k, i)])).clamp(-1.0, 1.0);
            s[(i, k)] = avg;
            s[(k, i)] = avg;
        }
    }
    for i in 0..l {
        s[(i, i)] = s[(i, i)].clamp(-1.0, 1.0);
    }
    Ok(SimilarityMatrix(s))
}

pub fn build_bias(s: &SimilarityMatrix, lambda: f64) -> Result<BiasMatrix> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(GiatError::Config(format!(
            "lambda must be finite and ≥ 0, got {lambda}"
        )));
    }
    Ok(BiasMatrix {
        m: s.0.scale(lambda),
        lambda,
    })
}

/// Similarity for rows `start..start+len` of a full-well response map.
pub fn window_similarity(g: &Matrix, start: usize, len: usize) -> Result<SimilarityMatrix> {
    build_similarity(&g.slice_rows(start, len), DEFAULT_EPS)
}

/// Row-major CSV with 17 significant digits per entry.
pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        for (c, x) in m.row(r).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{x:.16e}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix_to_csv(m)).map_err(|e| GiatError::io(path, e))
}
