mod common;

use common::*;
use giat::csc::response_map;
use giat::geo_bias::{build_bias, window_similarity};
use giat::linalg::Matrix;
use giat::metrics::{
    ablation_run, classification_metrics, evaluate, faithfulness_eval, pearson_cc, perturb,
    ssim_global, ConfusionMatrix, FaithfulnessSettings,
};
use giat::model::{biased_softmax, train, ModelConfig, Parameters};
use giat::pipeline::{prepare_wells, synth_wells};
use giat::seeding::sub_seed;
use giat::welllog::{SynthConfig, WellLogSequence};
use rand::Rng;

#[test]
fn metrics_agree_with_definitions_on_random_matrices() {
    let mut r = rng(1);
    for _ in 0..300 {
        let c = r.random_range(1..6);
        let counts: Vec<Vec<u64>> = (0..c)
            .map(|_| {
                (0..c)
                    .map(|_| {
                        if r.random_bool(0.3) {
                            0
                        } else {
                            r.random_range(0..20)
                        }
                    })
                    .collect()
            })
            .collect();
        if counts.iter().flatten().sum::<u64>() == 0 {
            continue;
        }
        let m = classification_metrics(&ConfusionMatrix::new(counts.clone()).unwrap()).unwrap();
        let (acc, p, rc, k) = definitional_metrics(&counts);
        assert!((m.accuracy - acc).abs() <= 1e-12);
        assert!((m.macro_precision - p).abs() <= 1e-12);
        assert!((m.macro_recall - rc).abs() <= 1e-12);
        match (m.kappa, k) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12, "{counts:?}"),
            (a, b) => assert_eq!(a, b, "{counts:?}"),
        }
    }
}

#[test]
fn kappa_of_independent_predictions_is_near_zero() {
    let mut r = rng(2);
    let n = 100_000;
    let truth: Vec<usize> = (0..n).map(|_| r.random_range(0..4)).collect();
    let pred: Vec<usize> = (0..n).map(|_| r.random_range(0..4)).collect();
    let m =
        classification_metrics(&ConfusionMatrix::from_labels(&truth, &pred, 4).unwrap()).unwrap();
    assert!(m.kappa.unwrap().abs() < 0.02, "{:?}", m.kappa);
}

#[test]
fn kappa_with_a_single_shared_class_is_one() {
    // p_e = 1 only when truth and predictions all sit in one class, which
    // forces p_o = 1 as well.
    let m = classification_metrics(&ConfusionMatrix::new(vec![vec![0, 0], vec![0, 7]]).unwrap())
        .unwrap();
    assert_eq!(m.kappa, Some(1.0));
    assert!(ConfusionMatrix::new(vec![vec![0]])
        .and_then(|c| classification_metrics(&c))
        .is_err());
}

#[test]
fn ssim_matches_formula_on_random_maps() {
    let mut r = rng(3);
    for _ in 0..50 {
        let a = Matrix::from_fn(8, 8, |_, _| r.random::<f64>());
        let b = Matrix::from_fn(8, 8, |_, _| r.random::<f64>());
        let got = ssim_global(&a, &b, 1.0).unwrap();
        assert!((got - ssim_oracle(&a, &b, 1.0)).abs() <= 1e-12);
        assert_eq!(got, ssim_global(&b, &a, 1.0).unwrap());
    }
}

/// Standard deviation of `clip(N(0, σ²), −b, b)` by Simpson quadrature.
fn clipped_normal_std(sigma: f64, bound: f64) -> f64 {
    let pdf = |y: f64| {
        (-(y * y) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    let n = 20_000;
    let h = 2.0 * bound / n as f64;
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let mut s = f(-bound) + f(bound);
        for i in 1..n {
            let y = -bound + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(y);
        }
        s * h / 3.0
    };
    let inside_mass = simpson(&pdf);
    let inside_second = simpson(&|y| y * y * pdf(y));
    (inside_second + bound * bound * (1.0 - inside_mass)).sqrt()
}

#[test]
fn perturbation_noise_has_clipped_normal_spread() {
    let (sigma, bound) = (0.05, 0.15);
    let n = 1_000_000;
    let seq =
        WellLogSequence::new("W", 0.0, 1.0, vec!["GR".into()], vec![vec![0.25; n]], None).unwrap();
    let noisy = perturb(&seq, sigma, bound, 17).unwrap();
    let deltas: Vec<f64> = noisy.curve(0).iter().map(|y| y - 0.25).collect();
    assert!(deltas.iter().all(|d| d.abs() <= bound));
    let mean = deltas.iter().sum::<f64>() / n as f64;
    let std = (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let expected = clipped_normal_std(sigma, bound);
    assert!(
        ((std - expected) / expected).abs() < 0.02,
        "{std} vs {expected}"
    );

    let heavy = clipped_normal_std(1.0, bound);
    let noisy = perturb(&seq, 1.0, bound, 18).unwrap();
    let d: Vec<f64> = noisy.curve(0).iter().map(|y| y - 0.25).collect();
    let m = d.iter().sum::<f64>() / n as f64;
    let s = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt();
    assert!(((s - heavy) / heavy).abs() < 0.02, "{s} vs {heavy}");
}

fn prepared(
    noise: f64,
    seed: u64,
) -> (
    giat::pipeline::PreparedWells,
    giat::welllog::LithologyCatalog,
    giat::csc::CscFilterBank,
) {
    let synth = SynthConfig {
        seed,
        length: 160,
        noise_std: noise,
        ..SynthConfig::default()
    };
    let catalog = synth.catalog();
    let p = prepare_wells(synth_wells(&synth, 4).unwrap(), "W4").unwrap();
    let bank = p.learn_bank(&catalog, 11, 5).unwrap();
    (p, catalog, bank)
}

fn small(seed: u64) -> ModelConfig {
    ModelConfig {
        d_model: 16,
        n_heads: 2,
        n_layers: 1,
        d_ff: 32,
        seq_len: 32,
        seed,
        ..ModelConfig::default()
    }
}

#[test]
fn zero_noise_faithfulness_is_exactly_one() {
    let (p, _, bank) = prepared(0.2, 4);
    let params = Parameters::init(&small(1)).unwrap();
    let rep = faithfulness_eval(&params, &p.blind, &bank, 0.0, 0.15, 5, 9).unwrap();
    assert_eq!(rep.mean_pcc, Some(1.0));
    assert_eq!(rep.mean_ssim, 1.0);
    assert_eq!(rep.n_trials, 5);
    assert_eq!(rep.per_trial_ssim.len(), 5);
    assert_eq!(rep.excluded_trials, 0);
}

#[test]
fn bias_dominated_attention_tracks_the_bias_maps() {
    let (p, _, bank) = prepared(0.2, 5);
    let cfg = ModelConfig {
        lambda: 100.0,
        ..small(2)
    };
    let mut params = Parameters::init(&cfg).unwrap();
    for l in &mut params.layers {
        l.wq = Matrix::zeros(16, 16);
        l.wk = Matrix::zeros(16, 16);
        l.bq.fill(0.0);
        l.bk.fill(0.0);
    }
    let (sigma, bound, seed) = (0.3, 0.6, 21);
    let rep = faithfulness_eval(&params, &p.blind, &bank, sigma, bound, 4, seed).unwrap();

    let maps = |seq: &WellLogSequence| -> Vec<Matrix> {
        let g = response_map(seq, &bank).unwrap();
        giat::model::prediction_starts(seq.len(), 32)
            .into_iter()
            .map(|s| {
                let m = build_bias(&window_similarity(&g, s, 32).unwrap(), 100.0).unwrap();
                biased_softmax(&Matrix::zeros(32, 32), Some(m.matrix()))
            })
            .collect()
    };
    let clean = maps(&p.blind);
    for (t, got) in rep.per_trial_pcc.iter().enumerate() {
        let noisy = perturb(&p.blind, sigma, bound, sub_seed(seed, &format!("trial{t}"))).unwrap();
        let pccs: Vec<f64> = clean
            .iter()
            .zip(maps(&noisy))
            .map(|(a, b)| pearson_cc(a, &b).unwrap())
            .collect();
        let expected = pccs.iter().sum::<f64>() / pccs.len() as f64;
        assert!(
            (got.unwrap() - expected).abs() < 1e-9,
            "trial {t}: {got:?} vs {expected}"
        );
    }
}

#[test]
fn attention_stability_does_not_improve_with_more_noise() {
    let (p, catalog, bank) = prepared(0.2, 6);
    let cfg = ModelConfig {
        learning_rate: 1e-3,
        max_epochs: 15,
        ..small(3)
    };
    let (params, _) = train(&cfg, &p.train, &p.blind, &bank).unwrap();
    let mut last = f64::INFINITY;
    for sigma in [0.01, 0.05, 0.1, 0.2, 0.5] {
        let settings = FaithfulnessSettings {
            sigma,
            bound: 3.0 * sigma,
            n_trials: 8,
        };
        let (rep, _) = evaluate(&params, &p.blind, &bank, &catalog, Some(settings), 7).unwrap();
        let pcc = rep.faithfulness.unwrap().mean_pcc.unwrap();
        assert!(pcc <= last + 0.02, "sigma {sigma}: {pcc} after {last}");
        last = pcc;
    }
}

#[test]
fn ablation_reports_both_arms_and_exact_deltas() {
    let (p, _, bank) = prepared(0.5, 7);
    let cfg = ModelConfig {
        max_epochs: 3,
        ..small(4)
    };
    let settings = FaithfulnessSettings {
        n_trials: 3,
        ..FaithfulnessSettings::default()
    };
    let rep = ablation_run(&cfg, &p.train, &p.blind, &bank, settings, 11).unwrap();
    assert!(!rep.biased.standard_transformer);
    assert!(rep.standard.standard_transformer);
    assert_eq!(rep.standard.lambda, 0.0);
    let (b, s) = (&rep.biased.report, &rep.standard.report);
    assert!((rep.delta.accuracy - (b.accuracy - s.accuracy)).abs() <= 1e-12);
    assert!((rep.delta.macro_recall - (b.macro_recall - s.macro_recall)).abs() <= 1e-12);
    let pcc = |r: &giat::metrics::EvalReport| r.faithfulness.as_ref().unwrap().mean_pcc.unwrap();
    assert!((rep.delta.mean_pcc.unwrap() - (pcc(b) - pcc(s))).abs() <= 1e-12);
    assert_eq!(
        rep,
        ablation_run(&cfg, &p.train, &p.blind, &bank, settings, 11).unwrap()
    );
}
