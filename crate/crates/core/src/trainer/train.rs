use rand::seq::SliceRandom;

use super::{TrainConfig, TrainReport, REPORT_WINDOW};
use crate::archspace::ArchDag;
use crate::dataset::Dataset;
use crate::encoders::Predictor;
use crate::error::{Error, Result};
use crate::numerics::{Adam, Tape, Tensor, Var};
use crate::objectives::{
    bce_pair_loss, comparator_loss, hinge_pair_loss, kendall_tau, listmle_loss, mse_loss,
    ordered_pairs, LossKind,
};
use crate::seed;

use super::eval::predict_scores;

/// Lists of `min(list_len, b)` batch positions, each sorted best first;
/// leftover positions are dropped.
fn listmle_lists(y: &[f64], list_len: usize) -> (usize, usize, Vec<usize>) {
    let u = list_len.min(y.len());
    let l = y.len() / u;
    let mut flat = Vec::with_capacity(l * u);
    for g in 0..l {
        let mut list: Vec<usize> = (g * u..(g + 1) * u).collect();
        list.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
        flat.extend(list);
    }
    (l, u, flat)
}

/// Training loss of one batch under `cfg.loss`, as minimized by the trainer.
pub fn batch_loss(
    pred: &Predictor,
    cfg: &TrainConfig,
    tape: &mut Tape,
    leaves: &[Var],
    archs: &[ArchDag],
    y: &[f64],
) -> Result<Var> {
    let m = cfg.loss.margin;
    match cfg.loss.kind {
        LossKind::Comparator => {
            let pairs = ordered_pairs(y);
            if pairs.is_empty() {
                log::warn!("comparator batch has no strictly ordered pair; loss is 0");
                return Ok(tape.constant(Tensor::scalar(0.0)));
            }
            let e = pred.embed_cells(tape, leaves, &[archs])?;
            let hi: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let lo: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let ea = tape.gather(e, &hi)?;
            let eb = tape.gather(e, &lo)?;
            let s_bw = pred.compare_var(tape, leaves, ea, eb)?;
            let s_wb = pred.compare_var(tape, leaves, eb, ea)?;
            comparator_loss(tape, s_bw, s_wb, m)
        }
        kind => {
            let s = pred.score_var(tape, leaves, archs)?;
            match kind {
                LossKind::Mse => mse_loss(tape, s, y),
                LossKind::Hinge => hinge_pair_loss(tape, s, y, m),
                LossKind::Bce => bce_pair_loss(tape, s, y),
                LossKind::ListMle => {
                    let (l, u, flat) = listmle_lists(y, cfg.loss.list_len);
                    let col = tape.reshape(s, &[y.len(), 1])?;
                    let g = tape.gather(col, &flat)?;
                    let g = tape.reshape(g, &[l, u])?;
                    listmle_loss(tape, g)
                }
                LossKind::Comparator => unreachable!(),
            }
        }
    }
}

fn check_sets(train: &Dataset, test: &Dataset) -> Result<()> {
    let (Some(a), Some(b)) = (train.space(), test.space()) else {
        return Err(Error::Empty(
            "training and test sets must be non-empty".into(),
        ));
    };
    if a.id != b.id {
        return Err(Error::Space(format!(
            "train set is {} but test set is {}",
            a.id, b.id
        )));
    }
    Ok(())
}

/// ADAM over `train`, reshuffled every epoch from `(seed, epoch)`; pair
/// losses use every ordered pair inside a batch. `after_epoch` sees the
/// predictor once per epoch.
fn fit_loop(
    train: &Dataset,
    cfg: &TrainConfig,
    mut pred: Predictor,
    mut after_epoch: impl FnMut(usize, &Predictor) -> Result<()>,
) -> Result<(Predictor, Vec<f64>, u64)> {
    let mut adam = Adam::new(cfg.lr);
    let archs = train.archs();
    let y = train.perfs();
    let n = archs.len();
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(cfg.seed, "epoch", epoch as u64));
        let mut total = 0.0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let at = |e: Error| match e {
                Error::Numerics(m) => Error::Numerics(format!("epoch {epoch}, batch {b}: {m}")),
                e => e,
            };
            let ba: Vec<ArchDag> = chunk.iter().map(|&i| archs[i].clone()).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
            let mut tape = Tape::new();
            let leaves = pred.leaves(&mut tape);
            let loss = batch_loss(&pred, cfg, &mut tape, &leaves, &ba, &by).map_err(at)?;
            let value = tape.value(loss).item().expect("scalar loss");
            if !value.is_finite() {
                return Err(at(Error::Numerics(format!("loss is {value}"))));
            }
            let grads = tape.backward(loss).map_err(at)?;
            adam.step(pred.params_mut(), &grads).map_err(at)?;
            total += value;
            batches += 1;
        }
        train_loss.push(total / batches as f64);
        after_epoch(epoch, &pred).map_err(|e| match e {
            Error::Numerics(m) => Error::Numerics(format!("epoch {epoch}, evaluation: {m}")),
            e => e,
        })?;
    }
    Ok((pred, train_loss, adam.steps()))
}

fn fresh(train: &Dataset, cfg: &TrainConfig) -> Result<Predictor> {
    let space = train
        .space()
        .ok_or_else(|| Error::Empty("training set is empty".into()))?
        .clone();
    Predictor::new(
        space,
        cfg.encoder.clone(),
        seed::derive(cfg.seed, "predictor", 0),
    )
}

/// Fits a predictor without test-set bookkeeping, starting from `init` when
/// given (warm start) or from a fresh seeded initialization.
pub fn fit_predictor(
    train: &Dataset,
    cfg: &TrainConfig,
    init: Option<Predictor>,
) -> Result<Predictor> {
    cfg.validate()?;
    let pred = match init {
        Some(p) => {
            if train.space().is_some_and(|s| s.id != p.space().id) || p.config() != &cfg.encoder {
                return Err(Error::Config(
                    "warm-start predictor does not match the training setup".into(),
                ));
            }
            p
        }
        None => fresh(train, cfg)?,
    };
    if train.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    Ok(fit_loop(train, cfg, pred, |_, _| Ok(()))?.0)
}

/// Trains a fresh predictor and tracks test tau per epoch.
pub fn train_predictor(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Predictor, TrainReport)> {
    cfg.validate()?;
    check_sets(train, test)?;
    let test_archs = test.archs();
    let test_y = test.perfs();
    let mut test_tau = Vec::with_capacity(cfg.epochs);
    let (pred, train_loss, steps) = fit_loop(train, cfg, fresh(train, cfg)?, |epoch, pred| {
        let in_window = epoch + REPORT_WINDOW >= cfg.epochs;
        test_tau.push(if cfg.eval_every_epoch || in_window {
            let s = predict_scores(pred, &test_archs, seed::derive(cfg.seed, "sort", 0))?;
            if s.len() < 2 {
                f64::NAN
            } else {
                kendall_tau(&s, &test_y)?
            }
        } else {
            f64::NAN
        });
        Ok(())
    })?;
    let window = &test_tau[cfg.epochs - REPORT_WINDOW.min(cfg.epochs)..];
    let tau = window.iter().sum::<f64>() / window.len() as f64;
    let report = TrainReport {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        steps,
        train_loss,
        test_tau,
        tau,
    };
    Ok((pred, report))
}
