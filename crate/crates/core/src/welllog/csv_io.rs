//! `depth,<curve1>,...,<curveV>[,label]` well files.

use std::path::{Path, PathBuf};

use crate::error::{GiatError, Result};
use crate::welllog::{LithologyCatalog, WellLogSequence};

/// Relative tolerance on each depth increment versus the median increment.
const SPACING_TOL: f64 = 1e-6;

struct RawWell {
    curve_names: Vec<String>,
    depths: Vec<f64>,
    curves: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

fn csv_err(path: &Path, row: usize, msg: impl Into<String>) -> GiatError {
    GiatError::Csv {
        path: path.to_path_buf(),
        row,
        msg: msg.into(),
    }
}

fn read_raw(path: &Path) -> Result<RawWell> {
    let file = std::fs::File::open(path).map_err(|e| GiatError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| csv_err(path, 1, e.to_string()))?
        .clone();
    let cols: Vec<String> = header.iter().map(str::to_string).collect();
    if cols.first().map(|c| c.eq_ignore_ascii_case("depth")) != Some(true) {
        return Err(csv_err(path, 1, "first column must be `depth`"));
    }
    let has_label = cols.len() > 1 && cols.last().is_some_and(|c| c.eq_ignore_ascii_case("label"));
    let curve_names: Vec<String> = cols[1..cols.len() - usize::from(has_label)].to_vec();
    if curve_names.is_empty() {
        return Err(csv_err(path, 1, "no curve columns"));
    }

    let mut depths = Vec::new();
    let mut curves = vec![Vec::new(); curve_names.len()];
    let mut labels = has_label.then(Vec::new);
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| csv_err(path, line, e.to_string()))?;
        if record.len() != cols.len() {
            return Err(csv_err(
                path,
                line,
                format!("expected {} fields, found {}", cols.len(), record.len()),
            ));
        }
        let parse = |idx: usize| -> Result<f64> {
            let cell = &record[idx];
            if cell.is_empty() {
                return Err(csv_err(
                    path,
                    line,
                    format!("empty cell in column {:?}", cols[idx]),
                ));
            }
            let x: f64 = cell
                .parse()
                .map_err(|_| csv_err(path, line, format!("cannot parse {cell:?} as a number")))?;
            if !x.is_finite() {
                return Err(csv_err(
                    path,
                    line,
                    format!("non-finite value in column {:?}", cols[idx]),
                ));
            }
            Ok(x)
        };
        depths.push(parse(0)?);
        for (v, curve) in curves.iter_mut().enumerate() {
            curve.push(parse(v + 1)?);
        }
        if let Some(labels) = labels.as_mut() {
            let cell = &record[cols.len() - 1];
            if cell.is_empty() {
                return Err(csv_err(path, line, "empty label"));
            }
            labels.push(cell.to_string());
        }
    }
    if depths.is_empty() {
        return Err(csv_err(path, 2, "no data rows"));
    }
    Ok(RawWell {
        curve_names,
        depths,
        curves,
        labels,
    })
}

/// Median spacing after checking monotonicity and uniformity.
fn uniform_step(path: &Path, depths: &[f64]) -> Result<f64> {
    if depths.len() < 2 {
        // a single sample carries no spacing information
        return Ok(1.0);
    }
    let mut diffs = Vec::with_capacity(depths.len() - 1);
    for (i, pair) in depths.windows(2).enumerate() {
        let d = pair[1] - pair[0];
        if d.is_nan() || d <= 0.0 {
            return Err(csv_err(path, i + 3, "depth is not strictly increasing"));
        }
        diffs.push(d);
    }
    let mut sorted = diffs.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let step = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    for (i, d) in diffs.iter().enumerate() {
        if (d - step).abs() > SPACING_TOL * step {
            return Err(csv_err(
                path,
                i + 3,
                format!("non-uniform depth spacing ({d} vs median {step})"),
            ));
        }
    }
    Ok(step)
}

fn well_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "well".into())
}

/// Loads one well. The well id is the file stem.
///
/// When `catalog` is `None` and the file carries labels, a catalog is built
/// from the distinct label strings in order of first appearance. The catalog
/// actually used (given or built) is returned alongside the sequence.
pub fn load_csv(
    path: impl AsRef<Path>,
    catalog: Option<&LithologyCatalog>,
) -> Result<(WellLogSequence, Option<LithologyCatalog>)> {
    let path = path.as_ref();
    let raw = read_raw(path)?;
    let step = uniform_step(path, &raw.depths)?;
    let (labels, catalog) = match raw.labels {
        None => (None, catalog.cloned()),
        Some(strings) => {
            let catalog = match catalog {
                Some(c) => c.clone(),
                None => {
                    let mut names: Vec<String> = Vec::new();
                    for s in &strings {
                        if !names.contains(s) {
                            names.push(s.clone());
                        }
                    }
                    LithologyCatalog::new(names)?
                }
            };
            let idx = strings
                .iter()
                .map(|s| {
                    catalog.index_of(s).ok_or_else(|| GiatError::UnknownLabel {
                        label: s.clone(),
                        catalog: catalog.names().to_vec(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (Some(idx), Some(catalog))
        }
    };
    let seq = WellLogSequence::new(
        well_id_of(path),
        raw.depths[0],
        step,
        raw.curve_names,
        raw.curves,
        labels,
    )?;
    Ok((seq, catalog))
}

/// Loads every file with one shared catalog.
///
/// Without an explicit catalog, class names are collected across all files
/// in the given order, first appearance wins.
pub fn load_wells(
    paths: &[PathBuf],
    catalog: Option<&LithologyCatalog>,
) -> Result<(Vec<WellLogSequence>, Option<LithologyCatalog>)> {
    let catalog = match catalog {
        Some(c) => Some(c.clone()),
        None => {
            let mut names: Vec<String> = Vec::new();
            for p in paths {
                if let Some(labels) = read_raw(p)?.labels {
                    for l in labels {
                        if !names.contains(&l) {
                            names.push(l);
                        }
                    }
                }
            }
            if names.is_empty() {
                None
            } else {
                Some(LithologyCatalog::new(names)?)
            }
        }
    };
    let mut wells = Vec::with_capacity(paths.len());
    for p in paths {
        wells.push(load_csv(p, catalog.as_ref())?.0);
    }
    Ok((wells, catalog))
}

/// Writes a well in the same format `load_csv` reads. Numbers use the
/// shortest representation that round-trips exactly.
pub fn write_csv(
    seq: &WellLogSequence,
    catalog: Option<&LithologyCatalog>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let labels = match (seq.labels(), catalog) {
        (Some(l), Some(c)) => {
            seq.require_labels(c.num_classes())?;
            Some((l, c))
        }
        (Some(_), None) => {
            return Err(GiatError::CatalogMismatch(
                "labeled sequence needs a catalog to be written".into(),
            ))
        }
        (None, _) => None,
    };
    let mut out = String::new();
    out.push_str("depth");
    for name in seq.curve_names() {
        out.push(',');
        out.push_str(name);
    }
    if labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for i in 0..seq.len() {
        out.push_str(&format!("{:?}", seq.depth(i)));
        for curve in seq.curves() {
            out.push_str(&format!(",{:?}", curve[i]));
        }
        if let Some((l, c)) = labels {
            out.push(',');
            out.push_str(c.name(l[i]).expect("label range checked"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| GiatError::io(path, e))
}
