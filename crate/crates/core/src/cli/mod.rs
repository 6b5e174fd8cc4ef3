mod commands;
pub mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{parse_assignment, RunConfig};

#[derive(Parser)]
#[command(
    name = "giat",
    version,
    about = "Well-log lithology classification with a template-correlation attention bias"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config with dotted keys, e.g. {"model.d_model": 32}.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; data, model and noise seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Well CSV files. Without them synthetic wells are generated.
    #[arg(long, num_args = 1..)]
    wells: Vec<PathBuf>,
    /// Blind (held-out) well id.
    #[arg(long)]
    blind: Option<String>,
}

#[derive(Args, Clone, Default)]
struct Scoring {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Well to score; defaults to the blind well.
    #[arg(long)]
    well: Option<String>,
}

#[derive(Args, Clone, Default)]
struct Noise {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long)]
    n_trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic labeled wells as CSV.
    Synth {
        #[arg(long)]
        n_wells: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Learn the correlation template bank from the training wells.
    LearnFilters {
        #[command(flatten)]
        common: Common,
    },
    /// Learn templates and train the model with blind-well early stopping.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score a checkpoint on one well and write a prediction strip.
    Evaluate {
        #[command(flatten)]
        scoring: Scoring,
        #[command(flatten)]
        noise: Noise,
        /// Write every window's similarity and bias matrices as CSV.
        #[arg(long)]
        dump_bias: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Attention stability of a checkpoint under bounded input noise.
    Faithfulness {
        #[command(flatten)]
        scoring: Scoring,
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        common: Common,
    },
    /// Train with and without the bias and compare.
    Ablate {
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common, flags: BTreeMap<String, Value>) -> Result<RunConfig> {
    let mut overrides = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => BTreeMap::new(),
    };
    for s in &common.set {
        let (k, v) = parse_assignment(s)?;
        overrides.insert(k, v);
    }
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            overrides.insert(k.to_string(), v);
        }
    };
    put("seed", common.seed.map(|s| json!(s)));
    put("out", common.out.as_ref().map(|p| json!(p)));
    put(
        "data.blind_well_id",
        common.blind.as_ref().map(|b| json!(b)),
    );
    if !common.wells.is_empty() {
        put("data.wells", Some(json!(common.wells)));
    }
    overrides.extend(flags);
    RunConfig::default().with_overrides(&overrides)
}

fn scoring_flags(scoring: &Scoring, noise: &Noise) -> BTreeMap<String, Value> {
    let mut flags = noise_flags(noise);
    if let Some(p) = &scoring.checkpoint {
        flags.insert("evaluate.checkpoint".into(), json!(p));
    }
    if let Some(p) = &scoring.bank {
        flags.insert("evaluate.bank".into(), json!(p));
    }
    if let Some(w) = &scoring.well {
        flags.insert("evaluate.well".into(), json!(w));
    }
    flags
}

fn noise_flags(noise: &Noise) -> BTreeMap<String, Value> {
    let mut flags = BTreeMap::new();
    if let Some(s) = noise.sigma {
        flags.insert("faithfulness.sigma".into(), json!(s));
    }
    if let Some(b) = noise.bound {
        flags.insert("faithfulness.bound".into(), json!(b));
    }
    if let Some(n) = noise.n_trials {
        flags.insert("faithfulness.n_trials".into(), json!(n));
    }
    flags
}

pub fn run(cli: Cli) -> Result<()> {
    use commands::Run;
    match cli.command {
        Command::Synth { n_wells, common } => {
            let flags = n_wells
                .map(|n| ("data.n_wells".to_string(), json!(n)))
                .into_iter()
                .collect();
            commands::synth(Run::new("synth", resolve(&common, flags)?)?)
        }
        Command::LearnFilters { common } => commands::learn_filters(Run::new(
            "learn-filters",
            resolve(&common, BTreeMap::new())?,
        )?),
        Command::Train { common } => {
            commands::train(Run::new("train", resolve(&common, BTreeMap::new())?)?)
        }
        Command::Evaluate {
            scoring,
            noise,
            dump_bias,
            common,
        } => {
            let mut flags = scoring_flags(&scoring, &noise);
            if dump_bias {
                flags.insert("evaluate.dump_bias".into(), json!(true));
            }
            commands::evaluate_cmd(Run::new("evaluate", resolve(&common, flags)?)?)
        }
        Command::Faithfulness {
            scoring,
            noise,
            common,
        } => {
            let flags = scoring_flags(&scoring, &noise);
            commands::faithfulness(Run::new("faithfulness", resolve(&common, flags)?)?)
        }
        Command::Ablate { noise, common } => {
            commands::ablate(Run::new("ablate", resolve(&common, noise_flags(&noise))?)?)
        }
    }
}
