use serde::{Deserialize, Serialize};

use crate::error::{GiatError, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c == 0 || counts.iter().any(|r| r.len() != c) {
            return Err(GiatError::Shape(
                "confusion matrix must be square and non-empty".into(),
            ));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn from_labels(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(GiatError::Shape(format!(
                "{} true labels vs {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        let mut counts = vec![vec![0u64; n_classes]; n_classes];
        for (&t, &p) in truth.iter().zip(pred) {
            if t >= n_classes || p >= n_classes {
                return Err(GiatError::LabelOutOfRange {
                    label: t.max(p),
                    classes: n_classes,
                });
            }
            counts[t][p] += 1;
        }
        ConfusionMatrix::new(counts)
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    /// True instances of the class.
    pub support: u64,
    pub predicted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// `None` when chance agreement is 1 but observed agreement is not.
    pub kappa: Option<f64>,
    pub per_class: Vec<ClassScore>,
}

/// Accuracy, macro precision and recall over classes that occur in the truth
/// or the predictions, and Cohen's kappa.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics> {
    let n = cm.total();
    if n == 0 {
        return Err(GiatError::Empty("confusion matrix has no samples".into()));
    }
    let c = cm.num_classes();
    let nf = n as f64;
    let diag: u64 = (0..c).map(|k| cm.counts[k][k]).sum();
    let p_o = diag as f64 / nf;

    let mut per_class = Vec::with_capacity(c);
    let (mut prec_sum, mut rec_sum, mut present) = (0.0, 0.0, 0usize);
    let mut chance: u128 = 0;
    for k in 0..c {
        let (rows, cols) = (cm.row_sum(k), cm.col_sum(k));
        let hit = cm.counts[k][k] as f64;
        let precision = if cols == 0 { 0.0 } else { hit / cols as f64 };
        let recall = if rows == 0 { 0.0 } else { hit / rows as f64 };
        if rows > 0 || cols > 0 {
            prec_sum += precision;
            rec_sum += recall;
            present += 1;
        }
        chance += rows as u128 * cols as u128;
        per_class.push(ClassScore {
            precision,
            recall,
            support: rows,
            predicted: cols,
        });
    }
    let n2 = n as u128 * n as u128;
    let kappa = if chance == n2 {
        (diag == n).then_some(1.0)
    } else {
        let p_e = chance as f64 / (nf * nf);
        Some((p_o - p_e) / (1.0 - p_e))
    };
    Ok(ClassificationMetrics {
        accuracy: p_o,
        macro_precision: prec_sum / present as f64,
        macro_recall: rec_sum / present as f64,
        kappa,
        per_class,
    })
}
