use std::sync::Arc;

use gateslab::archspace::SpaceSpec;
use gateslab::dataset::{gen_synth_dataset, Dataset, OracleSpec};
use gateslab::encoders::{EncoderConfig, EncoderKind};
use gateslab::objectives::{LossConfig, LossKind};
use gateslab::trainer::*;
use gateslab::Error;

/// Tau of a 100/400 seeded run (GATES desk, hinge, 100 epochs), recorded from
/// the reference build.
const GOLDEN_TINY_TAU: f64 = 0.6870604585600122;

fn synth(space: &str, n: usize, seed: u64) -> Dataset {
    gen_synth_dataset(
        &SpaceSpec::by_id(space).unwrap(),
        n,
        &OracleSpec::new(0),
        seed,
    )
    .unwrap()
}

fn split(ds: &Dataset, n_train: usize) -> (Dataset, Dataset) {
    (
        ds.prefix(n_train),
        ds.select(&(n_train..ds.len()).collect::<Vec<_>>()),
    )
}

fn cfg(kind: EncoderKind, loss: LossKind, ds: &Dataset) -> TrainConfig {
    let mut enc = EncoderConfig::desk_for(kind, ds.space().unwrap());
    enc.comparator = loss == LossKind::Comparator;
    TrainConfig::new(enc, LossConfig::new(loss))
}

#[test]
fn full_batch_loss_decreases_early() {
    let ds = synth("oon/nb101", 50, 1);
    let mut monotone = 0;
    for seed in 0..5 {
        let mut c = cfg(EncoderKind::Gates, LossKind::Hinge, &ds);
        c.seed = seed;
        c.epochs = 6;
        c.eval_every_epoch = false;
        let (_, r) = train_predictor(&ds, &ds, &c).unwrap();
        monotone += r.train_loss[..6].windows(2).all(|w| w[1] <= w[0]) as usize;
    }
    assert!(monotone >= 4, "{monotone} of 5 seeds");
}

#[test]
fn epoch_accounting_and_report_window() {
    let ds = synth("oon/nb101", 60, 2);
    let (train, test) = split(&ds, 50);
    let mut c = cfg(EncoderKind::Gcn, LossKind::Mse, &train);
    c.batch_size = 16;
    c.epochs = 1;
    let (_, r) = train_predictor(&train, &test, &c).unwrap();
    assert_eq!(r.steps, 4);
    assert_eq!(r.tau.to_bits(), r.test_tau[0].to_bits());
    c.epochs = 8;
    c.eval_every_epoch = false;
    let (_, r) = train_predictor(&train, &test, &c).unwrap();
    assert_eq!(r.steps, 32);
    assert!(r.test_tau[..3].iter().all(|t| t.is_nan()));
    let mean = r.test_tau[3..].iter().sum::<f64>() / 5.0;
    assert_eq!(r.tau, mean);
    c.epochs = 0;
    assert!(matches!(
        train_predictor(&train, &test, &c),
        Err(Error::Config(_))
    ));
}

#[test]
fn identical_runs_give_identical_reports() {
    let ds = synth("ooe/nb201", 120, 3);
    let (train, test) = split(&ds, 60);
    let mut c = cfg(EncoderKind::Gates, LossKind::Bce, &train);
    c.epochs = 10;
    c.batch_size = 32;
    let (p1, a) = train_predictor(&train, &test, &c).unwrap();
    let (p2, b) = train_predictor(&train, &test, &c).unwrap();
    assert_eq!(a.to_record(), b.to_record());
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(p1.params().checksum(), p2.params().checksum());
    c.seed = 1;
    let (_, other) = train_predictor(&train, &test, &c).unwrap();
    assert_ne!(a.to_csv(), other.to_csv());
}

#[test]
fn diverging_run_names_epoch_and_batch() {
    let ds = synth("oon/nb101", 40, 4);
    let mut c = cfg(EncoderKind::Mlp, LossKind::Mse, &ds);
    c.lr = 1e300;
    c.epochs = 50;
    c.batch_size = 8;
    c.eval_every_epoch = false;
    match train_predictor(&ds, &ds, &c) {
        Err(Error::Numerics(msg)) => {
            assert!(msg.contains("epoch") && msg.contains("batch"), "{msg}")
        }
        other => panic!("{:?}", other.map(|r| r.1)),
    }
}

#[test]
fn sets_must_share_a_space() {
    let a = synth("oon/nb101", 20, 0);
    let b = synth("ooe/nb201", 20, 0);
    let c = cfg(EncoderKind::Gcn, LossKind::Hinge, &a);
    assert!(matches!(train_predictor(&a, &b, &c), Err(Error::Space(_))));
    assert!(matches!(
        train_predictor(&Dataset::default(), &b, &c),
        Err(Error::Empty(_))
    ));
}

#[test]
fn evaluation_oracles() {
    let ds = synth("oon/nb101", 200, 5);
    let m = score_metrics(&ds.perfs(), &ds, &DEFAULT_KS).unwrap();
    assert_eq!(m.tau, 1.0);
    assert!(m.n_at_k.iter().all(|&(_, r)| r == 1));
    assert!(m.precision_at_k.iter().all(|&(_, p)| p == 1.0));
    assert_eq!(m.n_at_k.len(), 4);
    let flat = score_metrics(&vec![0.3; ds.len()], &ds, &[5]).unwrap();
    assert!(flat.tau.is_nan());
    assert!(flat.to_record().contains("\"tau\":null"));
}

#[test]
fn evaluation_leaves_parameters_alone() {
    let ds = synth("oon/nb101", 80, 6);
    let (train, test) = split(&ds, 40);
    let mut c = cfg(EncoderKind::Gates, LossKind::Hinge, &train);
    c.epochs = 5;
    let (mut pred, _) = train_predictor(&train, &test, &c).unwrap();
    let before = pred.params().checksum();
    let m = evaluate_predictor(&pred, &test, &DEFAULT_KS).unwrap();
    assert_eq!(pred.params().checksum(), before);
    assert_eq!(m.n, 40);
    assert!(matches!(
        evaluate_predictor(&pred, &synth("ooe/nb201", 10, 0), &[5]),
        Err(Error::Space(_))
    ));
    // a zero head scores every architecture alike
    for id in pred.params().ids().collect::<Vec<_>>() {
        if pred.params().name(id).starts_with("head.") {
            pred.params_mut().get_mut(id).data_mut().fill(0.0);
        }
    }
    assert!(evaluate_predictor(&pred, &test, &[5]).unwrap().tau.is_nan());
}

#[test]
fn golden_tiny_run() {
    let ds = synth("oon/nb101", 500, 7);
    let (train, test) = split(&ds, 100);
    let mut c = cfg(EncoderKind::Gates, LossKind::Hinge, &train);
    c.epochs = 100;
    c.eval_every_epoch = false;
    let (_, r) = train_predictor(&train, &test, &c).unwrap();
    assert!((r.tau - GOLDEN_TINY_TAU).abs() <= 1e-9, "{:?}", r.tau);
}

#[test]
fn oracle_is_learnable() {
    let ds = synth("oon/nb101", 2000, 0);
    let (train, test) = split(&ds, 200);
    let mut c = cfg(EncoderKind::Gates, LossKind::Hinge, &train);
    c.eval_every_epoch = false;
    let (_, r) = train_predictor(&train, &test, &c).unwrap();
    assert!(r.tau >= 0.7, "tau {}", r.tau);
}

#[test]
fn listmle_and_comparator_train() {
    let ds = synth("oon/nb101", 300, 8);
    let (train, test) = split(&ds, 100);
    for loss in [LossKind::ListMle, LossKind::Comparator] {
        let mut c = cfg(EncoderKind::Gates, loss, &train);
        c.epochs = 80;
        c.batch_size = 50;
        let (pred, r) = train_predictor(&train, &test, &c).unwrap();
        assert!(r.tau > 0.3, "{loss:?} tau {}", r.tau);
        let m = evaluate_predictor(&pred, &test, &[5]).unwrap();
        assert!(m.tau.is_finite());
    }
}

#[test]
fn subsets() {
    let ds = synth("oon/nb101", 1000, 9);
    assert_eq!(
        subset_train_fraction(&ds, 1.0, SubsetMode::Prefix, Rounding::Floor).unwrap(),
        ds
    );
    let a = subset_train_fraction(&ds, 0.0105, SubsetMode::Prefix, Rounding::Floor).unwrap();
    assert_eq!(a.len(), 10);
    assert_eq!(a, ds.prefix(10));
    assert_eq!(
        subset_train_fraction(&a, 1.0, SubsetMode::Prefix, Rounding::Floor).unwrap(),
        a
    );
    assert_eq!(
        subset_train_fraction(&ds, 0.0105, SubsetMode::Prefix, Rounding::Ceil)
            .unwrap()
            .len(),
        11
    );
    let r1 = subset_train_fraction(&ds, 0.1, SubsetMode::SeededRandom(3), Rounding::Floor).unwrap();
    let r2 = subset_train_fraction(&ds, 0.1, SubsetMode::SeededRandom(3), Rounding::Floor).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(r1.len(), 100);
    let pos: Vec<usize> = r1
        .ids()
        .iter()
        .map(|id| ds.ids().iter().position(|x| x == id).unwrap())
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
    assert!(matches!(
        subset_train_fraction(&ds, 0.0005, SubsetMode::Prefix, Rounding::Floor),
        Err(Error::Empty(_))
    ));
    assert!(subset_train_fraction(&ds, 0.0, SubsetMode::Prefix, Rounding::Floor).is_err());
    let _ = Arc::clone(ds.space().unwrap());
}

#[test]
fn report_exports() {
    let ds = synth("oon/nb101", 40, 10);
    let mut c = cfg(EncoderKind::Mlp, LossKind::Hinge, &ds);
    c.epochs = 3;
    let (_, r) = train_predictor(&ds, &ds, &c).unwrap();
    let csv = r.to_csv();
    assert!(csv.starts_with("epoch,train_loss,test_tau\n1,"));
    assert_eq!(csv.lines().count(), 4);
    let rec: serde_json::Value = serde_json::from_str(&r.to_record()).unwrap();
    assert_eq!(rec["epochs"], 3);
    assert_eq!(rec["config_hash"], c.hash());
}
