//! Run configuration: defaults, then a JSON file with dotted keys, then
//! `--set key=value` pairs, then dedicated flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use giat::csc::{DEFAULT_MIN_SUPPORT, DEFAULT_WINDOW};
use giat::metrics::FaithfulnessSettings;
use giat::model::ModelConfig;
use giat::welllog::SynthConfig;

/// Keys filled in from the data or the top-level seed, never by the user.
const DERIVED_KEYS: [&str; 5] = [
    "model.seed",
    "model.n_curves",
    "model.n_classes",
    "synth.seed",
    "synth.well_id",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Well CSV files. When empty, `n_wells` synthetic wells are generated.
    pub wells: Vec<PathBuf>,
    pub n_wells: usize,
    /// Held-out well; empty means the last well.
    pub blind_well_id: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            wells: Vec::new(),
            n_wells: 4,
            blind_well_id: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub w: usize,
    pub min_support: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            w: DEFAULT_WINDOW,
            min_support: DEFAULT_MIN_SUPPORT,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateConfig {
    pub checkpoint: Option<PathBuf>,
    /// Defaults to `filter_bank.json` next to the checkpoint.
    pub bank: Option<PathBuf>,
    /// Well to score; empty means the blind well.
    pub well: String,
    /// Also write every window's S and M as CSV.
    pub dump_bias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub filters: FilterConfig,
    pub model: ModelConfig,
    pub faithfulness: FaithfulnessSettings,
    pub evaluate: EvaluateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            synth: SynthConfig::default(),
            filters: FilterConfig::default(),
            model: ModelConfig::default(),
            faithfulness: FaithfulnessSettings::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

fn flatten_into(prefix: &str, value: &Value, out: &mut BTreeMap<String, Value>) {
    match value {
        Value::Object(map) if !map.is_empty() || prefix.is_empty() => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(&key, v, out);
            }
        }
        _ => {
            out.insert(prefix.to_string(), value.clone());
        }
    }
}

/// Dotted-key view of a JSON tree. Nested objects and dotted keys may be mixed.
pub fn flatten(value: &Value) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    flatten_into("", value, &mut out);
    out
}

fn set_path(root: &mut Value, key: &str, value: Value) {
    let mut node = root;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let map = node.as_object_mut().expect("known keys address objects");
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return;
        }
        node = map.entry(part).or_insert_with(|| Value::Object(Map::new()));
    }
}

/// Parses `key=value`; the value is JSON when it parses, a string otherwise.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .with_context(|| format!("expected key=value, got {s:?}"))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

impl RunConfig {
    /// Applies dotted-key overrides on top of `self`. Unknown and derived
    /// keys are rejected.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, Value>) -> Result<Self> {
        let mut tree = serde_json::to_value(self)?;
        let known = flatten(&tree);
        for (key, value) in overrides {
            if DERIVED_KEYS.contains(&key.as_str()) {
                bail!("{key} is derived from the data or the top-level seed and cannot be set");
            }
            if !known.contains_key(key) {
                bail!("unknown config key {key:?}");
            }
            set_path(&mut tree, key, value.clone());
        }
        serde_json::from_value(tree).context("config values have the wrong type")
    }

    pub fn from_file(path: &Path) -> Result<BTreeMap<String, Value>> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if !value.is_object() {
            bail!("{}: config must be a JSON object", path.display());
        }
        Ok(flatten(&value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flatten_round_trips_through_overrides() {
        let cfg = RunConfig::default();
        let flat = flatten(&serde_json::to_value(&cfg).unwrap());
        assert!(flat.contains_key("model.d_model"));
        assert!(flat.contains_key("faithfulness.sigma"));
        let mut user: BTreeMap<String, Value> = flat
            .into_iter()
            .filter(|(k, _)| !DERIVED_KEYS.contains(&k.as_str()))
            .collect();
        user.insert("model.d_model".into(), json!(32));
        let back = cfg.with_overrides(&user).unwrap();
        assert_eq!(back.model.d_model, 32);
        assert_eq!(back.synth, cfg.synth);
    }

    #[test]
    fn nested_and_dotted_forms_agree() {
        let nested = flatten(&json!({"model": {"lambda": 0.5}, "synth.noise_std": 0.25}));
        let cfg = RunConfig::default().with_overrides(&nested).unwrap();
        assert_eq!(cfg.model.lambda, 0.5);
        assert_eq!(cfg.synth.noise_std, 0.25);
    }

    #[test]
    fn rejects_unknown_derived_and_mistyped_keys() {
        let base = RunConfig::default();
        let one = |k: &str, v: Value| BTreeMap::from([(k.to_string(), v)]);
        assert!(base.with_overrides(&one("model.dmodel", json!(3))).is_err());
        assert!(base.with_overrides(&one("model.seed", json!(3))).is_err());
        assert!(base
            .with_overrides(&one("model.d_model", json!("big")))
            .is_err());
    }

    #[test]
    fn assignment_parsing() {
        assert_eq!(parse_assignment("a.b=3").unwrap(), ("a.b".into(), json!(3)));
        assert_eq!(
            parse_assignment("id=W2").unwrap(),
            ("id".into(), json!("W2"))
        );
        assert_eq!(
            parse_assignment("x=[1,2]").unwrap(),
            ("x".into(), json!([1, 2]))
        );
        assert!(parse_assignment("novalue").is_err());
    }
}
