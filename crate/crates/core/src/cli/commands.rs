use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use giat::csc::CscFilterBank;
use giat::geo_bias::{build_bias, write_matrix_csv};
use giat::metrics::{ablation_run, evaluate, faithfulness_eval, prediction_strip_csv};
use giat::model::{train_with, Checkpoint};
use giat::pipeline::{prepare_wells, synth_wells, PreparedWells};
use giat::seeding::sub_seed;
use giat::welllog::{load_wells, normalize, write_csv, LithologyCatalog, WellLogSequence};

use super::config::RunConfig;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct RunRecord<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    inputs: &'a BTreeMap<String, String>,
    artifacts: &'a BTreeMap<String, String>,
}

/// Output directory plus the hashes that end up in `run.json`.
pub struct Run {
    pub cfg: RunConfig,
    command: &'static str,
    inputs: BTreeMap<String, String>,
    artifacts: BTreeMap<String, String>,
}

impl Run {
    pub fn new(command: &'static str, mut cfg: RunConfig) -> Result<Self> {
        cfg.synth.seed = sub_seed(cfg.seed, "synth");
        cfg.model.seed = sub_seed(cfg.seed, "model");
        fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
        Ok(Run {
            cfg,
            command,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        })
    }

    fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.cfg.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Records an artifact written by a library routine.
    fn adopt(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.cfg.out.join(name))?;
        self.artifacts.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Writes `run.json`; called last so its presence marks a complete run.
    pub fn finish(self) -> Result<()> {
        let record = RunRecord {
            tool: "giat",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.cfg.seed,
            config: &self.cfg,
            inputs: &self.inputs,
            artifacts: &self.artifacts,
        };
        let mut text = serde_json::to_string_pretty(&record)?;
        text.push('\n');
        let path = self.cfg.out.join("run.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        for name in self.artifacts.keys() {
            println!("wrote {}", self.cfg.out.join(name).display());
        }
        Ok(())
    }

    /// Loads the configured CSVs or generates synthetic wells, and resolves
    /// the blind well and the data-dependent model dimensions. CSV labels are
    /// read against `catalog` when one is given.
    fn load_data(
        &mut self,
        catalog: Option<&LithologyCatalog>,
    ) -> Result<(Vec<WellLogSequence>, LithologyCatalog)> {
        let (wells, catalog) = if self.cfg.data.wells.is_empty() {
            let wells = synth_wells(&self.cfg.synth, self.cfg.data.n_wells)?;
            (wells, self.cfg.synth.catalog())
        } else {
            for p in self.cfg.data.wells.clone() {
                self.record_input(&p)?;
            }
            let (wells, catalog) = load_wells(&self.cfg.data.wells, catalog)?;
            let catalog = catalog.context("the well files carry no lithology labels")?;
            (wells, catalog)
        };
        if self.cfg.data.blind_well_id.is_empty() {
            self.cfg.data.blind_well_id = wells
                .last()
                .expect("at least one well")
                .well_id()
                .to_string();
        }
        self.cfg.model.n_curves = wells[0].num_curves();
        self.cfg.model.n_classes = catalog.num_classes();
        Ok((wells, catalog))
    }

    fn prepare(&mut self) -> Result<(PreparedWells, LithologyCatalog, CscFilterBank)> {
        let (wells, catalog) = self.load_data(None)?;
        let prepared = prepare_wells(wells, &self.cfg.data.blind_well_id)?;
        let bank =
            prepared.learn_bank(&catalog, self.cfg.filters.w, self.cfg.filters.min_support)?;
        Ok((prepared, catalog, bank))
    }
}

pub fn synth(mut run: Run) -> Result<()> {
    let wells = synth_wells(&run.cfg.synth, run.cfg.data.n_wells)?;
    let catalog = run.cfg.synth.catalog();
    for w in &wells {
        let name = format!("{}.csv", w.well_id());
        write_csv(w, Some(&catalog), run.cfg.out.join(&name))?;
        run.adopt(&name)?;
    }
    run.finish()
}

pub fn learn_filters(mut run: Run) -> Result<()> {
    let (prepared, _, bank) = run.prepare()?;
    run.write("filter_bank.json", bank.to_json()?.as_bytes())?;
    run.write_json("normalization.json", &prepared.stats)?;
    run.finish()
}

pub fn train(mut run: Run) -> Result<()> {
    let (prepared, catalog, bank) = run.prepare()?;
    let (params, log) = train_with(
        &run.cfg.model,
        &prepared.train,
        &prepared.blind,
        &bank,
        |r| {
            eprintln!(
                "epoch {:>4}  train {:.6}  blind {:.6}  {:.1}s",
                r.epoch, r.train_loss, r.blind_loss, r.elapsed_s
            );
        },
    )?;
    let checkpoint = Checkpoint {
        params,
        catalog,
        curve_names: bank.curve_names().to_vec(),
        normalization: Some(prepared.stats),
        epoch: log.best_epoch,
        blind_loss: log.best_blind_loss,
    };
    run.write("filter_bank.json", bank.to_json()?.as_bytes())?;
    run.write("checkpoint.giat", &checkpoint.to_bytes()?)?;
    run.write("train_log.csv", log.to_csv().as_bytes())?;
    eprintln!(
        "best epoch {} blind loss {:.6}",
        log.best_epoch, log.best_blind_loss
    );
    run.finish()
}

struct Loaded {
    checkpoint: Checkpoint,
    bank: CscFilterBank,
    well: WellLogSequence,
}

/// Loads the checkpoint, its bank and the normalized target well.
fn load_for_scoring(run: &mut Run) -> Result<Loaded> {
    let ckpt_path = run
        .cfg
        .evaluate
        .checkpoint
        .clone()
        .context("no checkpoint given (use --checkpoint)")?;
    let bank_path = run.cfg.evaluate.bank.clone().unwrap_or_else(|| {
        ckpt_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("filter_bank.json")
    });
    run.cfg.evaluate.bank = Some(bank_path.clone());
    run.record_input(&ckpt_path)?;
    run.record_input(&bank_path)?;
    let checkpoint = Checkpoint::load(&ckpt_path)?;
    let bank = CscFilterBank::load(&bank_path)?;
    checkpoint.check_bank(&bank)?;
    let stats = checkpoint
        .normalization
        .clone()
        .context("checkpoint has no normalization statistics")?;

    let (wells, catalog) = run.load_data(Some(&checkpoint.catalog))?;
    if catalog != checkpoint.catalog {
        bail!(
            "data classes {:?} do not match checkpoint classes {:?}",
            catalog.names(),
            checkpoint.catalog.names()
        );
    }
    run.cfg.model = checkpoint.params.config().clone();
    if run.cfg.evaluate.well.is_empty() {
        run.cfg.evaluate.well = run.cfg.data.blind_well_id.clone();
    }
    let id = &run.cfg.evaluate.well;
    let available: Vec<String> = wells.iter().map(|w| w.well_id().to_string()).collect();
    let raw = wells
        .into_iter()
        .find(|w| w.well_id() == id)
        .with_context(|| format!("unknown well {id:?} (available: {available:?})"))?;
    let well = normalize(&raw.select_curves(bank.curve_names())?, &stats)?;
    Ok(Loaded {
        checkpoint,
        bank,
        well,
    })
}

pub fn evaluate_cmd(mut run: Run) -> Result<()> {
    let Loaded {
        checkpoint,
        bank,
        well,
    } = load_for_scoring(&mut run)?;
    let faith = run.cfg.faithfulness;
    let (report, prediction) = evaluate(
        &checkpoint.params,
        &well,
        &bank,
        &checkpoint.catalog,
        Some(faith),
        sub_seed(run.cfg.seed, "faithfulness"),
    )?;
    run.write_json("eval_report.json", &report)?;
    let strip = prediction_strip_csv(&well, &prediction.labels, &checkpoint.catalog);
    run.write(
        &format!("predictions_{}.csv", well.well_id()),
        strip.as_bytes(),
    )?;
    if run.cfg.evaluate.dump_bias {
        let lambda = checkpoint.params.lambda;
        for w in giat::model::windows_at(
            &well,
            &bank,
            checkpoint.params.config().seq_len,
            &prediction
                .windows
                .iter()
                .map(|w| w.start)
                .collect::<Vec<_>>(),
        )? {
            let s_name = format!("bias/similarity_{:06}.csv", w.start);
            let m_name = format!("bias/bias_{:06}.csv", w.start);
            fs::create_dir_all(run.cfg.out.join("bias"))?;
            write_matrix_csv(w.similarity.matrix(), run.cfg.out.join(&s_name))?;
            write_matrix_csv(
                build_bias(&w.similarity, lambda)?.matrix(),
                run.cfg.out.join(&m_name),
            )?;
            run.adopt(&s_name)?;
            run.adopt(&m_name)?;
        }
    }
    println!(
        "{}: accuracy {:.4}  precision {:.4}  recall {:.4}  kappa {}",
        report.dataset,
        report.accuracy,
        report.macro_precision,
        report.macro_recall,
        report
            .kappa
            .map_or("undefined".to_string(), |k| format!("{k:.4}"))
    );
    run.finish()
}

pub fn faithfulness(mut run: Run) -> Result<()> {
    let Loaded {
        checkpoint,
        bank,
        well,
    } = load_for_scoring(&mut run)?;
    let f = run.cfg.faithfulness;
    let report = faithfulness_eval(
        &checkpoint.params,
        &well,
        &bank,
        f.sigma,
        f.bound,
        f.n_trials,
        sub_seed(run.cfg.seed, "faithfulness"),
    )?;
    run.write_json("faithfulness_report.json", &report)?;
    println!(
        "{}: mean PCC {}  mean SSIM {:.4}  excluded {}",
        well.well_id(),
        report
            .mean_pcc
            .map_or("undefined".to_string(), |p| format!("{p:.4}")),
        report.mean_ssim,
        report.excluded_trials
    );
    run.finish()
}

pub fn ablate(mut run: Run) -> Result<()> {
    let (prepared, _, bank) = run.prepare()?;
    let report = ablation_run(
        &run.cfg.model,
        &prepared.train,
        &prepared.blind,
        &bank,
        run.cfg.faithfulness,
        run.cfg.seed,
    )?;
    run.write("filter_bank.json", bank.to_json()?.as_bytes())?;
    run.write_json("ablation_report.json", &report)?;
    println!(
        "accuracy: biased {:.4}  standard {:.4}  delta {:+.4}",
        report.biased.report.accuracy, report.standard.report.accuracy, report.delta.accuracy
    );
    run.finish()
}
