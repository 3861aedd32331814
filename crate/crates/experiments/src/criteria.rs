use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use gateslab::archspace::{sample_random, SpaceSpec};
use gateslab::dataset::{gen_synth_dataset, load_dataset, split_prefix, Dataset, OracleSpec};
use gateslab::encoders::{iso_variance, EncoderConfig, EncoderKind, Predictor};
use gateslab::numerics::{grad_check_params, Tape, Tensor, Var};
use gateslab::objectives::{
    bce_pair_loss, comparator_loss, comparator_sort, hinge_pair_loss, kendall_tau, listmle_loss,
    mse_loss, n_at_k, order_to_scores, pair_counts, pair_counts_brute, precision_at_k, LossConfig,
    LossKind,
};
use gateslab::seed;
use gateslab::trainer::{
    batch_loss, evaluate_predictor, evaluate_predictor_seeded, subset_train_fraction,
    train_predictor, Rounding, SubsetMode, TrainConfig,
};
use gateslab::Result;

use crate::util::{fmt, fmt_all, median};
use crate::Outcome;

const GRAD_TOL: f64 = 1e-4;
const GRAD_POINTS: u64 = 20;

/// Widths small enough for exhaustive finite differences.
fn tiny(kind: EncoderKind, space: &SpaceSpec, comparator: bool) -> EncoderConfig {
    let base = EncoderConfig::desk_for(kind, space);
    EncoderConfig {
        layers: 2,
        hidden: 4,
        op_emb: 3,
        input_emb: if base.reinject_input { 4 } else { 3 },
        head_widths: vec![3],
        comparator,
        ..base
    }
}

/// Central-difference checks of every loss through head and encoder.
pub fn gradient_checks() -> Result<Outcome> {
    let oon = Arc::new(SpaceSpec::nb101());
    let ooe = Arc::new(SpaceSpec::nb201());
    let encoders = [
        ("gates-oon", EncoderKind::Gates, &oon),
        ("gates-ooe", EncoderKind::Gates, &ooe),
        ("gcn", EncoderKind::Gcn, &oon),
        ("mlp", EncoderKind::Mlp, &oon),
    ];
    let losses = [
        LossKind::Mse,
        LossKind::Hinge,
        LossKind::Bce,
        LossKind::ListMle,
        LossKind::Comparator,
    ];
    let mut report = String::from("encoder,loss,point,max_rel_error,checked,excluded\n");
    let (mut worst, mut empty) = (0.0f64, 0);
    for (c, (name, kind, space)) in encoders.into_iter().enumerate() {
        for loss in losses {
            let enc = tiny(kind, space, loss == LossKind::Comparator);
            let mut cfg = TrainConfig::new(enc.clone(), LossConfig::new(loss));
            cfg.loss.list_len = 3;
            for point in 0..GRAD_POINTS {
                let idx = (c as u64 * 16 + loss as u64) * 1000 + point;
                let pred = Predictor::new(
                    (*space).clone(),
                    enc.clone(),
                    seed::derive(1, "grad-init", idx),
                )?;
                let mut rng = seed::rng(1, "grad-batch", idx);
                let archs = (0..6)
                    .map(|_| sample_random(space, rng.random()))
                    .collect::<Result<Vec<_>>>()?;
                let y: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
                let r = grad_check_params(
                    pred.params(),
                    |t, v| batch_loss(&pred, &cfg, t, v, &archs, &y),
                    1e-6,
                )?;
                worst = worst.max(r.max_rel_error);
                empty += (r.checked == 0) as usize;
                report += &format!(
                    "{name},{},{point},{},{},{}\n",
                    loss.name(),
                    fmt(r.max_rel_error),
                    r.checked,
                    r.excluded
                );
            }
        }
    }
    Ok(Outcome::judged(
        worst <= GRAD_TOL && empty == 0,
        format!("worst relative error {worst:.2e} over 20 compositions x {GRAD_POINTS} points"),
        report,
    ))
}

/// Within-group score variance across isomorphic relabelings.
pub fn iso_invariance() -> Result<Outcome> {
    let space = Arc::new(SpaceSpec::nb101());
    let archs = (0..200)
        .map(|i| sample_random(&space, seed::derive(2, "iso-arch", i)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = String::new();
    let mut totals = Vec::new();
    let mut mlp_spread = false;
    for (i, kind) in [EncoderKind::Gates, EncoderKind::Gcn, EncoderKind::Mlp]
        .into_iter()
        .enumerate()
    {
        let pred = Predictor::new(
            space.clone(),
            EncoderConfig::desk_for(kind, &space),
            seed::derive(2, "iso-pred", i as u64),
        )?;
        let r = iso_variance(&pred, &archs)?;
        if kind == EncoderKind::Mlp {
            mlp_spread = r.groups.iter().any(|g| g.variants > 1 && g.variance > 0.0);
        }
        report += &format!(
            "{} total {} nontrivial {}\n",
            kind.name(),
            fmt(r.total_variance),
            r.nontrivial()
        );
        report += &r.to_csv();
        totals.push(r.total_variance);
    }
    Ok(Outcome::judged(
        totals[0] <= 1e-10 && totals[1] <= 1e-10 && mlp_spread,
        format!(
            "variance gates {:.2e}, gcn {:.2e}, mlp {:.2e}",
            totals[0], totals[1], totals[2]
        ),
        report,
    ))
}

/// Number of items ranked strictly ahead of `i` (higher value, or equal
/// value and smaller index).
fn ahead(v: &[f64], i: usize) -> usize {
    (0..v.len())
        .filter(|&j| v[j] > v[i] || (v[j] == v[i] && j < i))
        .count()
}

/// Fast tau against pair enumeration, and top-K metrics against direct set
/// computations.
pub fn metric_oracles() -> Result<Outcome> {
    let mut rng = seed::rng(3, "metric-oracles", 0);
    let mut tau_mismatch = 0;
    let mut report = String::new();
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let levels = rng.random_range(1..=n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let fast = pair_counts(&x, &y)?;
        let slow = pair_counts_brute(&x, &y)?;
        let (a, b) = (kendall_tau(&x, &y)?, slow.tau(Default::default()));
        if fast != slow || a.to_bits() != b.to_bits() {
            tau_mismatch += 1;
        }
    }
    let mut topk_mismatch = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=30);
        let k = rng.random_range(1..=n);
        let levels = rng.random_range(1..=n);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let ids: Vec<usize> = (0..n).collect();
        let top_s: Vec<usize> = (0..n).filter(|&i| ahead(&s, i) < k).collect();
        let want_n = top_s.iter().map(|&i| ahead(&y, i) + 1).min().unwrap();
        let want_p = top_s.iter().filter(|&&i| ahead(&y, i) < k).count() as f64 / k as f64;
        if n_at_k(&s, &y, &ids, k)? != want_n || precision_at_k(&s, &y, &ids, k)? != want_p {
            topk_mismatch += 1;
        }
    }
    report += &format!("tau_mismatches {tau_mismatch}\ntopk_mismatches {topk_mismatch}\n");
    Ok(Outcome::judged(
        tau_mismatch == 0 && topk_mismatch == 0,
        format!("{tau_mismatch}/1000 tau and {topk_mismatch}/500 top-K mismatches"),
        report,
    ))
}

fn with_tape(f: impl FnOnce(&mut Tape) -> Result<Var>) -> Result<f64> {
    let mut t = Tape::new();
    let v = f(&mut t)?;
    Ok(t.value(v).item().expect("scalar"))
}

fn vector(t: &mut Tape, x: &[f64]) -> Var {
    t.constant(Tensor::vector(x.to_vec()))
}

fn hinge(s: &[f64], y: &[f64], m: f64) -> Result<f64> {
    with_tape(|t| {
        let v = vector(t, s);
        hinge_pair_loss(t, v, y, m)
    })
}

fn bce_gap(d: f64) -> Result<f64> {
    with_tape(|t| {
        let v = vector(t, &[0.0, d]);
        bce_pair_loss(t, v, &[0.0, 1.0])
    })
}

fn comparator(s_bw: f64, s_wb: f64, m: f64) -> Result<f64> {
    with_tape(|t| {
        let a = vector(t, &[s_bw]);
        let b = vector(t, &[s_wb]);
        comparator_loss(t, a, b, m)
    })
}

fn listmle(row: &[f64]) -> Result<f64> {
    with_tape(|t| {
        let v = t.constant(Tensor::from_parts(&[1, row.len()], row.to_vec()));
        listmle_loss(t, v)
    })
}

fn mse(s: &[f64], y: &[f64]) -> Result<f64> {
    with_tape(|t| {
        let v = vector(t, s);
        mse_loss(t, v, y)
    })
}

/// Worked loss, metric and sort examples, to 1e-9.
pub fn loss_examples() -> Result<Outcome> {
    let ln2 = 2f64.ln();
    let soft = (1.0 + (-1f64).exp()).ln();
    let y4 = [0.9, 0.8, 0.7, 0.6];
    let s4 = [0.1, 0.2, 0.4, 0.3];
    let ids = [0, 1, 2, 3];
    let mut cases: Vec<(&str, f64, f64)> = vec![
        ("mse exact", mse(&[0.3, 0.7], &[0.3, 0.7])?, 0.0),
        ("mse zeros", mse(&[0.0, 0.0], &[1.0, 2.0])?, 2.5),
        ("mse single", mse(&[0.1], &[0.0])?, 0.01),
        ("hinge tie", hinge(&[0.4, 0.4], &[0.0, 1.0], 0.1)?, 0.1),
        (
            "hinge ordered",
            hinge(&[0.0, 0.2, 0.4], &[0.1, 0.2, 0.3], 0.1)?,
            0.0,
        ),
        (
            "hinge partial",
            hinge(&[0.0, 0.05], &[0.0, 1.0], 0.1)?,
            0.05,
        ),
        ("bce tie", bce_gap(0.0)?, ln2),
        ("bce saturated", bce_gap(800.0)?, 0.0),
        ("bce unit gap", bce_gap(1.0)?, soft),
        ("comparator at margin", comparator(0.1, -0.1, 0.1)?, 0.0),
        ("comparator zero head", comparator(0.0, 0.0, 0.1)?, 0.2),
        ("comparator mixed", comparator(0.05, -0.2, 0.1)?, 0.05),
        ("listmle single", listmle(&[0.7])?, 0.0),
        ("listmle tie", listmle(&[0.3, 0.3])?, ln2),
        ("listmle ordered", listmle(&[2.0, 1.0])?, soft),
        ("tau identical", kendall_tau(&y4, &y4)?, 1.0),
        (
            "tau reversed",
            kendall_tau(&[1.0, 2.0, 3.0, 4.0], &y4)?,
            -1.0,
        ),
        (
            "tau worked",
            kendall_tau(&[0.1, 0.4, 0.3, 0.9], &[0.2, 0.3, 0.5, 0.6])?,
            4.0 / 6.0,
        ),
        ("n@2 worked", n_at_k(&s4, &y4, &ids, 2)? as f64, 3.0),
        ("p@2 worked", precision_at_k(&s4, &y4, &ids, 2)?, 0.0),
        ("n@n", n_at_k(&s4, &y4, &ids, 4)? as f64, 1.0),
        ("p@n", precision_at_k(&s4, &y4, &ids, 4)?, 1.0),
    ];
    for k in 1..=4 {
        cases.push(("n@k perfect", n_at_k(&y4, &y4, &ids, k)? as f64, 1.0));
        cases.push(("p@k perfect", precision_at_k(&y4, &y4, &ids, k)?, 1.0));
    }
    let mut rng = seed::rng(4, "sort-examples", 0);
    let y: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
    let mut first = None;
    for sort_seed in 0..5 {
        let mut oracle = |p: &[(usize, usize)]| -> Result<Vec<f64>> {
            Ok(p.iter().map(|&(a, b)| (y[a] - y[b]).signum()).collect())
        };
        let order = comparator_sort(y.len(), &mut oracle, sort_seed)?;
        cases.push((
            "oracle sort tau",
            kendall_tau(&order_to_scores(&order), &y)?,
            1.0,
        ));
        let same = *first.get_or_insert_with(|| order.clone()) == order;
        cases.push(("sort seed independence", same as u8 as f64, 1.0));
    }
    let mut report = String::new();
    let mut bad = Vec::new();
    for (name, got, want) in &cases {
        report += &format!("{name},{},{}\n", fmt(*got), fmt(*want));
        if (got - want).abs() > 1e-9 {
            bad.push(*name);
        }
    }
    Ok(Outcome::judged(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} examples within 1e-9", cases.len())
        } else {
            format!("mismatched: {}", bad.join(", "))
        },
        report,
    ))
}

/// 2000-architecture OON dataset; the first 5% trains, the rest tests.
fn desk_split() -> Result<(Dataset, Dataset)> {
    let space = Arc::new(SpaceSpec::nb101());
    let ds = gen_synth_dataset(&space, 2000, &OracleSpec::new(0), 0)?;
    let test: Vec<usize> = (100..ds.len()).collect();
    Ok((ds.prefix(100), ds.select(&test)))
}

/// Test taus of five training seeds.
fn desk_taus(
    train: &Dataset,
    test: &Dataset,
    kind: EncoderKind,
    loss: LossKind,
) -> Result<Vec<f64>> {
    let space = train.space().expect("non-empty").clone();
    (0..5)
        .map(|s| {
            let mut cfg =
                TrainConfig::new(EncoderConfig::desk_for(kind, &space), LossConfig::new(loss));
            cfg.seed = s;
            cfg.eval_every_epoch = false;
            Ok(train_predictor(train, test, &cfg)?.1.tau)
        })
        .collect()
}

/// GATES against GCN and MLP at a 5% training fraction.
pub fn encoder_ordering() -> Result<Outcome> {
    let (train, test) = desk_split()?;
    let mut report = String::new();
    let mut med = Vec::new();
    for kind in [EncoderKind::Gates, EncoderKind::Gcn, EncoderKind::Mlp] {
        let taus = desk_taus(&train, &test, kind, LossKind::Hinge)?;
        med.push(median(&taus));
        report += &format!("{},{}\n", kind.name(), fmt_all(&taus));
    }
    Ok(Outcome::judged(
        med[0] >= med[1] + 0.03 && med[0] >= med[2] + 0.05,
        format!(
            "median tau gates {:.4}, gcn {:.4}, mlp {:.4} (need gates >= gcn + 0.03 and mlp + 0.05)",
            med[0], med[1], med[2]
        ),
        report,
    ))
}

/// GATES with hinge loss against GATES with regression loss.
pub fn ranking_vs_regression() -> Result<Outcome> {
    let (train, test) = desk_split()?;
    let hinge = desk_taus(&train, &test, EncoderKind::Gates, LossKind::Hinge)?;
    let mse = desk_taus(&train, &test, EncoderKind::Gates, LossKind::Mse)?;
    let (h, m) = (median(&hinge), median(&mse));
    Ok(Outcome::judged(
        h >= m,
        format!("median tau hinge {h:.4}, mse {m:.4}"),
        format!("hinge,{}\nmse,{}\n", fmt_all(&hinge), fmt_all(&mse)),
    ))
}

/// Taus of one trained comparator under three quicksort seeds.
pub fn comparator_sort_stability() -> Result<Outcome> {
    let space = Arc::new(SpaceSpec::nb101());
    let ds = gen_synth_dataset(&space, 1200, &OracleSpec::new(0), 9)?;
    let test: Vec<usize> = (200..ds.len()).collect();
    let (train, test) = (ds.prefix(200), ds.select(&test));
    let mut enc = EncoderConfig::desk_for(EncoderKind::Gates, &space);
    enc.comparator = true;
    let mut cfg = TrainConfig::new(enc, LossConfig::new(LossKind::Comparator));
    cfg.eval_every_epoch = false;
    let (pred, _) = train_predictor(&train, &test, &cfg)?;
    let taus = (0..3)
        .map(|s| Ok(evaluate_predictor_seeded(&pred, &test, &[], s)?.tau))
        .collect::<Result<Vec<f64>>>()?;
    let spread = taus.iter().cloned().fold(f64::MIN, f64::max)
        - taus.iter().cloned().fold(f64::MAX, f64::min);
    let shown: Vec<String> = taus.iter().map(|t| format!("{t:.5}")).collect();
    Ok(Outcome::judged(
        spread <= 0.002,
        format!("taus {} (spread {spread:.5})", shown.join(", ")),
        format!("{}\n", fmt_all(&taus)),
    ))
}

/// Path of the optional NB-101 ground-truth file.
pub const NB101_ENV: &str = "GATESLAB_NB101_DATA";

/// Full-scale GATES on real NB-101 records; skipped without the file.
pub fn nb101_ground_truth() -> Result<Outcome> {
    let path = match std::env::var(NB101_ENV) {
        Ok(p) if Path::new(&p).is_file() => p,
        _ => {
            return Ok(Outcome::skipped(format!(
                "set {NB101_ENV} to an NB-101 ground-truth file to run"
            )))
        }
    };
    let ds = load_dataset(&path)?;
    let (train, test) = split_prefix(&ds, 0.9)?;
    let train = subset_train_fraction(&train, 0.001, SubsetMode::Prefix, Rounding::Floor)?;
    let space = ds.space().expect("non-empty").clone();
    let mut cfg = TrainConfig::new(
        EncoderConfig::for_space(EncoderKind::Gates, &space),
        LossConfig::new(LossKind::Hinge),
    );
    cfg.eval_every_epoch = false;
    let (pred, _) = train_predictor(&train, &test, &cfg)?;
    let m = evaluate_predictor(&pred, &test, &[])?;
    Ok(Outcome::judged(
        (0.74..=0.82).contains(&m.tau),
        format!("{} training records, test tau {:.4}", train.len(), m.tau),
        m.to_record(),
    ))
}
