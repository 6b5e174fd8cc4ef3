//! Well-log data model: lithology catalogs, depth-indexed multi-curve
//! sequences, CSV ingestion, normalization, synthetic wells and blind-well
//! splitting.

mod csv_io;
mod normalize;
mod synth;

pub use csv_io::{load_csv, load_wells, write_csv};
pub use normalize::{fit_normalization, normalize, NormalizationStats, STD_GUARD};
pub use synth::{default_signatures, synth_generate, SynthConfig};

use serde::{Deserialize, Serialize};

use crate::error::{GiatError, Result};
use crate::linalg::Matrix;

/// Ordered set of lithology class names. Index in the list is the class id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LithologyCatalog {
    class_names: Vec<String>,
}

impl LithologyCatalog {
    pub fn new(class_names: Vec<String>) -> Result<Self> {
        if class_names.is_empty() {
            return Err(GiatError::Empty("lithology catalog".into()));
        }
        for (i, name) in class_names.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(GiatError::Config(format!("class name {i} is empty")));
            }
            if class_names[..i].contains(name) {
                return Err(GiatError::Config(format!("duplicate class name {name:?}")));
            }
        }
        Ok(LithologyCatalog { class_names })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.class_names
    }

    pub fn name(&self, idx: usize) -> Option<&str> {
        self.class_names.get(idx).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }
}

impl TryFrom<Vec<String>> for LithologyCatalog {
    type Error = GiatError;

    fn try_from(names: Vec<String>) -> Result<Self> {
        LithologyCatalog::new(names)
    }
}

impl From<LithologyCatalog> for Vec<String> {
    fn from(c: LithologyCatalog) -> Self {
        c.class_names
    }
}

/// One well's uniformly sampled log curves with optional per-depth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct WellLogSequence {
    well_id: String,
    depth_start: f64,
    depth_step: f64,
    curve_names: Vec<String>,
    curves: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
}

impl WellLogSequence {
    /// Validates every structural invariant. Labels are range-checked later,
    /// against whichever catalog the caller pairs the sequence with.
    pub fn new(
        well_id: impl Into<String>,
        depth_start: f64,
        depth_step: f64,
        curve_names: Vec<String>,
        curves: Vec<Vec<f64>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let well_id = well_id.into();
        if !depth_step.is_finite() || depth_step <= 0.0 || !depth_start.is_finite() {
            return Err(GiatError::Config(format!(
                "well {well_id}: depth_step must be finite and > 0 (got {depth_step})"
            )));
        }
        if curves.is_empty() || curve_names.len() != curves.len() {
            return Err(GiatError::Shape(format!(
                "well {well_id}: {} curve names for {} curves",
                curve_names.len(),
                curves.len()
            )));
        }
        for (i, name) in curve_names.iter().enumerate() {
            if curve_names[..i].contains(name) {
                return Err(GiatError::Config(format!("duplicate curve name {name:?}")));
            }
        }
        let len = curves[0].len();
        if len == 0 {
            return Err(GiatError::Empty(format!("well {well_id} has no samples")));
        }
        if curves.iter().any(|c| c.len() != len) {
            return Err(GiatError::Shape(format!(
                "well {well_id}: curves differ in length"
            )));
        }
        if curves.iter().flatten().any(|x| !x.is_finite()) {
            return Err(GiatError::NonFinite(format!("well {well_id} curves")));
        }
        if let Some(l) = &labels {
            if l.len() != len {
                return Err(GiatError::Shape(format!(
                    "well {well_id}: {} labels for {len} samples",
                    l.len()
                )));
            }
        }
        Ok(WellLogSequence {
            well_id,
            depth_start,
            depth_step,
            curve_names,
            curves,
            labels,
        })
    }

    pub fn well_id(&self) -> &str {
        &self.well_id
    }

    pub fn depth_start(&self) -> f64 {
        self.depth_start
    }

    pub fn depth_step(&self) -> f64 {
        self.depth_step
    }

    pub fn depth(&self, i: usize) -> f64 {
        self.depth_start + i as f64 * self.depth_step
    }

    pub fn len(&self) -> usize {
        self.curves[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_curves(&self) -> usize {
        self.curves.len()
    }

    pub fn curve_names(&self) -> &[String] {
        &self.curve_names
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    pub fn curve(&self, v: usize) -> &[f64] {
        &self.curves[v]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Errors unless labels are present and every label is below `num_classes`.
    pub fn require_labels(&self, num_classes: usize) -> Result<&[usize]> {
        let labels = self.labels().ok_or_else(|| GiatError::Unlabeled {
            well_id: self.well_id.clone(),
        })?;
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(GiatError::LabelOutOfRange {
                label: bad,
                classes: num_classes,
            });
        }
        Ok(labels)
    }

    /// Same depths and labels, new curve values.
    pub fn with_curves(&self, curves: Vec<Vec<f64>>) -> Result<Self> {
        WellLogSequence::new(
            self.well_id.clone(),
            self.depth_start,
            self.depth_step,
            self.curve_names.clone(),
            curves,
            self.labels.clone(),
        )
    }

    /// Keeps only the named curves, in the given order.
    pub fn select_curves(&self, names: &[String]) -> Result<Self> {
        let mut curves = Vec::with_capacity(names.len());
        for n in names {
            let idx = self
                .curve_names
                .iter()
                .position(|c| c == n)
                .ok_or_else(|| GiatError::CurveMismatch {
                    expected: names.to_vec(),
                    found: self.curve_names.clone(),
                })?;
            curves.push(self.curves[idx].clone());
        }
        WellLogSequence::new(
            self.well_id.clone(),
            self.depth_start,
            self.depth_step,
            names.to_vec(),
            curves,
            self.labels.clone(),
        )
    }

    /// Samples `start..start + len` as a `len × V` matrix.
    pub fn input_window(&self, start: usize, len: usize) -> Matrix {
        Matrix::from_fn(len, self.num_curves(), |u, v| self.curves[v][start + u])
    }

    pub(crate) fn check_curves(&self, expected: &[String]) -> Result<()> {
        if self.curve_names != expected {
            return Err(GiatError::CurveMismatch {
                expected: expected.to_vec(),
                found: self.curve_names.clone(),
            });
        }
        Ok(())
    }
}

/// Separates the blind well from the training wells.
pub fn split_by_well(
    seqs: Vec<WellLogSequence>,
    blind_well_id: &str,
) -> Result<(Vec<WellLogSequence>, WellLogSequence)> {
    let hits = seqs.iter().filter(|s| s.well_id() == blind_well_id).count();
    match hits {
        0 => {
            return Err(GiatError::UnknownWell {
                id: blind_well_id.to_string(),
                available: seqs.iter().map(|s| s.well_id().to_string()).collect(),
            })
        }
        1 => {}
        _ => return Err(GiatError::DuplicateWell(blind_well_id.to_string())),
    }
    let (blind, train): (Vec<_>, Vec<_>) =
        seqs.into_iter().partition(|s| s.well_id() == blind_well_id);
    if train.is_empty() {
        return Err(GiatError::Empty(
            "training set (only the blind well was given)".into(),
        ));
    }
    Ok((
        train,
        blind.into_iter().next().expect("exactly one blind well"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well(id: &str) -> WellLogSequence {
        WellLogSequence::new(id, 0.0, 1.0, vec!["GR".into()], vec![vec![1.0, 2.0]], None).unwrap()
    }

    #[test]
    fn split_holds_out_one_well() {
        let (train, blind) = split_by_well(vec![well("W1"), well("W2"), well("W3")], "W2").unwrap();
        assert_eq!(blind.well_id(), "W2");
        let ids: Vec<_> = train.iter().map(|s| s.well_id()).collect();
        assert_eq!(ids, ["W1", "W3"]);
    }

    #[test]
    fn split_rejects_bad_ids() {
        assert!(matches!(
            split_by_well(vec![well("W1"), well("W2")], "W9"),
            Err(GiatError::UnknownWell { .. })
        ));
        assert!(matches!(
            split_by_well(vec![well("W1"), well("W1"), well("W2")], "W1"),
            Err(GiatError::DuplicateWell(_))
        ));
        assert!(matches!(
            split_by_well(vec![well("W1")], "W1"),
            Err(GiatError::Empty(_))
        ));
    }

    #[test]
    fn catalog_rejects_duplicates_and_blanks() {
        assert!(LithologyCatalog::new(vec!["sand".into(), "sand".into()]).is_err());
        assert!(LithologyCatalog::new(vec![" ".into()]).is_err());
        assert!(LithologyCatalog::new(vec![]).is_err());
        let c = LithologyCatalog::new(vec!["sand".into(), "shale".into()]).unwrap();
        assert_eq!(c.index_of("shale"), Some(1));
        assert_eq!(c.num_classes(), 2);
    }

    #[test]
    fn sequence_invariants() {
        let bad_step =
            WellLogSequence::new("W", 0.0, 0.0, vec!["GR".into()], vec![vec![1.0]], None);
        assert!(bad_step.is_err());
        let ragged = WellLogSequence::new(
            "W",
            0.0,
            1.0,
            vec!["GR".into(), "AC".into()],
            vec![vec![1.0], vec![1.0, 2.0]],
            None,
        );
        assert!(ragged.is_err());
        let nan =
            WellLogSequence::new("W", 0.0, 1.0, vec!["GR".into()], vec![vec![f64::NAN]], None);
        assert!(matches!(nan, Err(GiatError::NonFinite(_))));
        let s = WellLogSequence::new(
            "W",
            0.0,
            1.0,
            vec!["GR".into()],
            vec![vec![1.0]],
            Some(vec![3]),
        )
        .unwrap();
        assert!(matches!(
            s.require_labels(2),
            Err(GiatError::LabelOutOfRange { .. })
        ));
    }
}
