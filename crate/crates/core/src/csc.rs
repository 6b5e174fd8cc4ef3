//! Category-wise sequence-correlation filters.
//!
//! For every (class, curve) pair the filter is the L2-normalized mean of all
//! z-normalized length-`w` training windows centered on a sample of that
//! class. A filter's response at a position is the normalized
//! cross-correlation between the filter and the local window, so it lies in
//! `[-1, 1]` and is invariant to positive affine changes of the window.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GiatError, Result};
use crate::linalg::Matrix;
use crate::welllog::{LithologyCatalog, WellLogSequence, STD_GUARD};

pub const DEFAULT_WINDOW: usize = 11;
pub const DEFAULT_MIN_SUPPORT: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscFilter {
    #[serde(rename = "class")]
    pub class_idx: usize,
    #[serde(rename = "curve")]
    pub curve_idx: usize,
    pub support_count: usize,
    pub weights: Vec<f64>,
}

impl CscFilter {
    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&x| x == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BankFile", into = "BankFile")]
pub struct CscFilterBank {
    w: usize,
    curve_names: Vec<String>,
    catalog: LithologyCatalog,
    /// Row-major `C × V`: filter `(c, v)` lives at `c·V + v`.
    filters: Vec<CscFilter>,
    min_support: usize,
    /// Wells the bank was learned from.
    source_wells: Vec<String>,
}

/// On-disk layout of a filter bank.
#[derive(Serialize, Deserialize)]
struct BankFile {
    w: usize,
    curve_names: Vec<String>,
    class_names: Vec<String>,
    filters: Vec<CscFilter>,
    #[serde(default = "default_min_support")]
    min_support: usize,
    #[serde(default)]
    source_wells: Vec<String>,
}

fn default_min_support() -> usize {
    DEFAULT_MIN_SUPPORT
}

impl From<CscFilterBank> for BankFile {
    fn from(b: CscFilterBank) -> Self {
        BankFile {
            w: b.w,
            curve_names: b.curve_names,
            class_names: b.catalog.into(),
            filters: b.filters,
            min_support: b.min_support,
            source_wells: b.source_wells,
        }
    }
}

impl TryFrom<BankFile> for CscFilterBank {
    type Error = GiatError;

    fn try_from(f: BankFile) -> Result<Self> {
        let catalog = LithologyCatalog::new(f.class_names)?;
        let (c, v) = (catalog.num_classes(), f.curve_names.len());
        if f.w < 3 || f.w.is_multiple_of(2) {
            return Err(GiatError::Format(format!(
                "filter width {} must be odd and ≥ 3",
                f.w
            )));
        }
        if v == 0 {
            return Err(GiatError::Format("filter bank has no curves".into()));
        }
        let mut slots: Vec<Option<CscFilter>> = vec![None; c * v];
        for filt in f.filters {
            if filt.class_idx >= c || filt.curve_idx >= v {
                return Err(GiatError::Format(format!(
                    "filter ({}, {}) outside the {c}×{v} grid",
                    filt.class_idx, filt.curve_idx
                )));
            }
            if filt.weights.len() != f.w || filt.weights.iter().any(|x| !x.is_finite()) {
                return Err(GiatError::Format(format!(
                    "filter ({}, {}) must have {} finite weights",
                    filt.class_idx, filt.curve_idx, f.w
                )));
            }
            let slot = &mut slots[filt.class_idx * v + filt.curve_idx];
            if slot.is_some() {
                return Err(GiatError::Format(format!(
                    "duplicate filter ({}, {})",
                    filt.class_idx, filt.curve_idx
                )));
            }
            *slot = Some(filt);
        }
        let filters = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.ok_or_else(|| GiatError::Format(format!("missing filter ({}, {})", i / v, i % v)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CscFilterBank {
            w: f.w,
            curve_names: f.curve_names,
            catalog,
            filters,
            min_support: f.min_support,
            source_wells: f.source_wells,
        })
    }
}

impl CscFilterBank {
    pub fn window(&self) -> usize {
        self.w
    }

    pub fn curve_names(&self) -> &[String] {
        &self.curve_names
    }

    pub fn catalog(&self) -> &LithologyCatalog {
        &self.catalog
    }

    pub fn num_classes(&self) -> usize {
        self.catalog.num_classes()
    }

    pub fn num_curves(&self) -> usize {
        self.curve_names.len()
    }

    pub fn min_support(&self) -> usize {
        self.min_support
    }

    pub fn source_wells(&self) -> &[String] {
        &self.source_wells
    }

    pub fn filter(&self, class_idx: usize, curve_idx: usize) -> &CscFilter {
        &self.filters[class_idx * self.num_curves() + curve_idx]
    }

    pub fn filters(&self) -> &[CscFilter] {
        &self.filters
    }

    /// Length of the geological feature vector, `C·V`.
    pub fn feature_dim(&self) -> usize {
        self.filters.len()
    }

    /// Reorders curves; filters follow their curves.
    pub fn with_curve_order(&self, names: &[String]) -> Result<Self> {
        let perm = names
            .iter()
            .map(|n| {
                self.curve_names.iter().position(|c| c == n).ok_or_else(|| {
                    GiatError::CurveMismatch {
                        expected: self.curve_names.clone(),
                        found: names.to_vec(),
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if perm.len() != self.num_curves() {
            return Err(GiatError::CurveMismatch {
                expected: self.curve_names.clone(),
                found: names.to_vec(),
            });
        }
        let mut filters = Vec::with_capacity(self.filters.len());
        for c in 0..self.num_classes() {
            for (new_v, &old_v) in perm.iter().enumerate() {
                let mut f = self.filter(c, old_v).clone();
                f.curve_idx = new_v;
                filters.push(f);
            }
        }
        Ok(CscFilterBank {
            curve_names: names.to_vec(),
            filters,
            ..self.clone()
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| GiatError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| GiatError::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Centers `window` and scales it to unit L2 norm. `None` when the window is
/// constant (std below [`STD_GUARD`]).
///
/// This is the z-score divided by `√w`, so dot products of two such vectors
/// are Pearson correlations.
pub fn unit_normalize(window: &[f64]) -> Option<Vec<f64>> {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let centered: Vec<f64> = window.iter().map(|x| x - mean).collect();
    let ss: f64 = centered.iter().map(|x| x * x).sum();
    let std = (ss / n).sqrt();
    if std < STD_GUARD {
        return None;
    }
    let norm = ss.sqrt();
    Some(centered.into_iter().map(|x| x / norm).collect())
}

/// Neumaier-compensated running sum of vectors.
struct CompensatedSum {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl CompensatedSum {
    fn new(n: usize) -> Self {
        CompensatedSum {
            sum: vec![0.0; n],
            comp: vec![0.0; n],
        }
    }

    fn add(&mut self, xs: &[f64]) {
        for ((s, c), &x) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(xs) {
            let t = *s + x;
            if s.abs() >= x.abs() {
                *c += (*s - t) + x;
            } else {
                *c += (x - t) + *s;
            }
            *s = t;
        }
    }

    fn total(&self) -> Vec<f64> {
        self.sum
            .iter()
            .zip(&self.comp)
            .map(|(s, c)| s + c)
            .collect()
    }
}

/// Learns one filter per (class, curve) from labeled, normalized wells.
pub fn learn_filters(
    train: &[WellLogSequence],
    catalog: &LithologyCatalog,
    w: usize,
    min_support: usize,
) -> Result<CscFilterBank> {
    if w.is_multiple_of(2) || w < 3 {
        return Err(GiatError::Config(format!(
            "filter width must be odd and ≥ 3, got {w}"
        )));
    }
    if min_support == 0 {
        return Err(GiatError::Config("min_support must be ≥ 1".into()));
    }
    let first = train
        .first()
        .ok_or_else(|| GiatError::Empty("no training wells for filter learning".into()))?;
    let curve_names = first.curve_names().to_vec();
    let (n_classes, n_curves) = (catalog.num_classes(), curve_names.len());
    for s in train {
        s.check_curves(&curve_names)?;
        s.require_labels(n_classes)?;
        if s.len() <= w {
            return Err(GiatError::Config(format!(
                "filter width {w} must be shorter than well {} (length {})",
                s.well_id(),
                s.len()
            )));
        }
    }

    let half = w / 2;
    let mut sums: Vec<CompensatedSum> = (0..n_classes * n_curves)
        .map(|_| CompensatedSum::new(w))
        .collect();
    let mut counts = vec![0usize; n_classes * n_curves];
    for s in train {
        let labels = s.labels().expect("checked above");
        for v in 0..n_curves {
            let curve = s.curve(v);
            for center in half..s.len() - half {
                let Some(z) = unit_normalize(&curve[center - half..=center + half]) else {
                    continue;
                };
                let slot = labels[center] * n_curves + v;
                sums[slot].add(&z);
                counts[slot] += 1;
            }
        }
    }

    let filters = (0..n_classes * n_curves)
        .map(|slot| {
            let support_count = counts[slot];
            let mut weights = vec![0.0; w];
            if support_count >= min_support {
                let mean: Vec<f64> = sums[slot]
                    .total()
                    .iter()
                    .map(|x| x / support_count as f64)
                    .collect();
                let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    weights = mean.iter().map(|x| x / norm).collect();
                }
            }
            CscFilter {
                class_idx: slot / n_curves,
                curve_idx: slot % n_curves,
                support_count,
                weights,
            }
        })
        .collect();

    Ok(CscFilterBank {
        w,
        curve_names,
        catalog: catalog.clone(),
        filters,
        min_support,
        source_wells: train.iter().map(|s| s.well_id().to_string()).collect(),
    })
}

/// Per-position normalized correlation of `curve` with `filter`, using
/// replicate padding at the edges.
pub fn response(curve: &[f64], filter: &CscFilter) -> Result<Vec<f64>> {
    let w = filter.weights.len();
    if curve.len() < w {
        return Err(GiatError::Shape(format!(
            "curve length {} shorter than filter width {w}",
            curve.len()
        )));
    }
    let n = curve.len();
    if filter.is_zero() {
        return Ok(vec![0.0; n]);
    }
    let half = (w / 2) as isize;
    let mut window = vec![0.0; w];
    let out = (0..n as isize)
        .map(|u| {
            for (k, slot) in window.iter_mut().enumerate() {
                let idx = (u - half + k as isize).clamp(0, n as isize - 1) as usize;
                *slot = curve[idx];
            }
            match unit_normalize(&window) {
                Some(z) => crate::linalg::dot(&z, &filter.weights).clamp(-1.0, 1.0),
                None => 0.0,
            }
        })
        .collect();
    Ok(out)
}

/// `L × (C·V)` response map; column `c·V + v` is curve `v` under filter `(c, v)`.
pub fn response_map(seq: &WellLogSequence, bank: &CscFilterBank) -> Result<Matrix> {
    seq.check_curves(bank.curve_names())?;
    response_map_of_curves(seq.curves(), bank)
}

pub(crate) fn response_map_of_curves(curves: &[Vec<f64>], bank: &CscFilterBank) -> Result<Matrix> {
    let n_curves = bank.num_curves();
    if curves.len() != n_curves {
        return Err(GiatError::Shape(format!(
            "{} curves given, bank expects {n_curves}",
            curves.len()
        )));
    }
    let len = curves[0].len();
    let mut g = Matrix::zeros(len, bank.feature_dim());
    for (col, filt) in bank.filters().iter().enumerate() {
        let r = response(&curves[filt.curve_idx], filt)?;
        for (u, x) in r.into_iter().enumerate() {
            g[(u, col)] = x;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::welllog::{synth_generate, SynthConfig};

    fn catalog(n: usize) -> LithologyCatalog {
        LithologyCatalog::new((0..n).map(|i| format!("c{i}")).collect()).unwrap()
    }

    fn seq(curves: Vec<Vec<f64>>, labels: Vec<usize>) -> WellLogSequence {
        let names = (0..curves.len()).map(|i| format!("K{i}")).collect();
        WellLogSequence::new("W", 0.0, 1.0, names, curves, Some(labels)).unwrap()
    }

    fn unit_filter(weights: Vec<f64>) -> CscFilter {
        CscFilter {
            class_idx: 0,
            curve_idx: 0,
            support_count: 1,
            weights,
        }
    }

    #[test]
    fn identical_windows_learn_their_template() {
        // periodic curve with period 5 = w: every centered window is a rotation
        // of the same pattern; labels mark only centers where it equals `t`.
        let t = [0.3, -1.2, 2.0, 0.7, -0.1];
        let curve: Vec<f64> = (0..60).map(|i| t[(i + 3) % 5]).collect();
        // center u sees curve[u-2..=u+2] = t iff (u - 2 + 3) % 5 == 0
        let labels: Vec<usize> = (0..60).map(|u| usize::from((u + 1) % 5 != 0)).collect();
        let bank = learn_filters(&[seq(vec![curve], labels)], &catalog(2), 5, 1).unwrap();
        let expected = unit_normalize(&t).unwrap();
        let f = bank.filter(0, 0);
        assert!(f.support_count >= 10);
        for (a, b) in f.weights.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn absent_class_gets_zero_filter() {
        let curve: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin()).collect();
        let bank = learn_filters(&[seq(vec![curve], vec![0; 40])], &catalog(3), 5, 5).unwrap();
        for c in 1..3 {
            let f = bank.filter(c, 0);
            assert_eq!(f.support_count, 0);
            assert!(f.is_zero());
        }
        let f0 = bank.filter(0, 0);
        let norm: f64 = f0.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn below_min_support_is_zero_but_counted() {
        let curve: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let mut labels = vec![0; 20];
        labels[10] = 1;
        let bank = learn_filters(&[seq(vec![curve], labels)], &catalog(2), 3, 2).unwrap();
        assert_eq!(bank.filter(1, 0).support_count, 1);
        assert!(bank.filter(1, 0).is_zero());
    }

    #[test]
    fn matches_brute_force_definition() {
        let cfg = SynthConfig {
            seed: 5,
            n_classes: 2,
            n_curves: 1,
            length: 200,
            stay_prob: 0.6,
            noise_std: 0.4,
            ..Default::default()
        };
        let s = synth_generate(&cfg).unwrap();
        let w = 7;
        let bank = learn_filters(std::slice::from_ref(&s), &cfg.catalog(), w, 1).unwrap();

        // oracle: z-score windows (population std), average, L2-normalize
        let labels = s.labels().unwrap();
        let curve = s.curve(0);
        for class in 0..2 {
            let mut acc = vec![0.0; w];
            let mut count = 0;
            for u in 3..197 {
                if labels[u] != class {
                    continue;
                }
                let win = &curve[u - 3..=u + 3];
                let m = win.iter().sum::<f64>() / w as f64;
                let sd = (win.iter().map(|x| (x - m).powi(2)).sum::<f64>() / w as f64).sqrt();
                for k in 0..w {
                    acc[k] += (win[k] - m) / sd;
                }
                count += 1;
            }
            let mean: Vec<f64> = acc.iter().map(|x| x / count as f64).collect();
            let nrm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
            let f = bank.filter(class, 0);
            assert_eq!(f.support_count, count);
            for (a, b) in f.weights.iter().zip(&mean) {
                assert!((a - b / nrm).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn learning_errors() {
        let s = seq(vec![vec![1.0, 2.0, 3.0, 4.0]], vec![0; 4]);
        assert!(learn_filters(std::slice::from_ref(&s), &catalog(1), 4, 1).is_err());
        assert!(learn_filters(std::slice::from_ref(&s), &catalog(1), 5, 1).is_err());
        let unlabeled =
            WellLogSequence::new("U", 0.0, 1.0, vec!["K0".into()], vec![vec![0.0; 10]], None)
                .unwrap();
        assert!(matches!(
            learn_filters(&[unlabeled], &catalog(1), 3, 1),
            Err(GiatError::Unlabeled { .. })
        ));
    }

    #[test]
    fn response_of_matching_and_negated_pattern() {
        let t = [0.5, 1.5, -2.0, 0.25, 3.0];
        let filt = unit_filter(unit_normalize(&t).unwrap());
        let mut curve = vec![0.0, 1.0, 0.0, 1.0];
        curve.extend(t.iter().map(|x| 3.0 * x - 4.0));
        curve.extend([9.0, -3.0, 2.0]);
        let r = response(&curve, &filt).unwrap();
        assert!((r[6] - 1.0).abs() < 1e-9);

        let neg: Vec<f64> = curve.iter().map(|x| -x).collect();
        let r = response(&neg, &filt).unwrap();
        assert!((r[6] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_curve_and_zero_filter_respond_zero() {
        let filt = unit_filter(unit_normalize(&[1.0, 2.0, 0.0]).unwrap());
        assert!(response(&[4.0; 9], &filt)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        let zero = unit_filter(vec![0.0; 3]);
        assert!(response(&[1.0, 5.0, 2.0, 8.0], &zero)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(response(&[1.0, 2.0], &filt).is_err());
    }

    #[test]
    fn response_map_columns() {
        let cfg = SynthConfig {
            seed: 11,
            n_classes: 2,
            n_curves: 3,
            length: 150,
            stay_prob: 0.7,
            noise_std: 0.3,
            ..Default::default()
        };
        let s = synth_generate(&cfg).unwrap();
        let bank = learn_filters(std::slice::from_ref(&s), &cfg.catalog(), 5, 1).unwrap();
        let g = response_map(&s, &bank).unwrap();
        assert_eq!(g.shape(), (150, 6));
        for c in 0..2 {
            for v in 0..3 {
                let r = response(s.curve(v), bank.filter(c, v)).unwrap();
                for u in 0..150 {
                    assert!((g[(u, c * 3 + v)] - r[u]).abs() <= 1e-12);
                }
            }
        }

        // consistent relabeling of curves permutes columns only
        let order: Vec<String> = ["DEN", "GR", "AC"].iter().map(|s| s.to_string()).collect();
        let g2 = response_map(
            &s.select_curves(&order).unwrap(),
            &bank.with_curve_order(&order).unwrap(),
        )
        .unwrap();
        let perm = [2, 0, 1];
        for c in 0..2 {
            for (new_v, &old_v) in perm.iter().enumerate() {
                for u in 0..150 {
                    assert_eq!(g2[(u, c * 3 + new_v)], g[(u, c * 3 + old_v)]);
                }
            }
        }
    }

    #[test]
    fn single_filter_map_equals_response() {
        let s = seq(
            vec![(0..30).map(|i| ((i * i) % 7) as f64).collect()],
            vec![0; 30],
        );
        let bank = learn_filters(std::slice::from_ref(&s), &catalog(1), 5, 1).unwrap();
        let g = response_map(&s, &bank).unwrap();
        assert_eq!(
            g.as_slice(),
            response(s.curve(0), bank.filter(0, 0)).unwrap().as_slice()
        );
        let wrong = seq(vec![vec![0.0; 30], vec![0.0; 30]], vec![0; 30]);
        assert!(response_map(&wrong, &bank).is_err());
    }

    #[test]
    fn bank_json_validation() {
        let s = seq(
            vec![(0..30).map(|i| (i as f64).sin()).collect()],
            vec![0; 30],
        );
        let bank = learn_filters(std::slice::from_ref(&s), &catalog(1), 5, 1).unwrap();
        let json = bank.to_json().unwrap();
        assert_eq!(CscFilterBank::from_json(&json).unwrap(), bank);
        let broken = json.replace("\"w\": 5", "\"w\": 4");
        assert!(CscFilterBank::from_json(&broken).is_err());
    }
}
