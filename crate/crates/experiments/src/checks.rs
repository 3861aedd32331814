//! Quantitative module examples that are too slow or too fragile for the
//! unit suites. They report like the criteria but are not numbered.

use std::collections::HashSet;
use std::sync::Arc;

use gateslab::archspace::{enumerate_space, ArchDag, SpaceSpec};
use gateslab::dataset::{gen_synth_dataset, synth_perf, OracleSpec};
use gateslab::encoders::{EncoderConfig, EncoderKind};
use gateslab::objectives::{kendall_tau, LossConfig, LossKind};
use gateslab::search::{inner_ea, SearchSpace};
use gateslab::seed;
use gateslab::trainer::{train_predictor, TrainConfig};
use gateslab::Result;

use crate::util::fmt_all;
use crate::Outcome;

/// GATES with hinge loss fits a 50-record training set (train tau ≥ 0.95).
pub fn memorization() -> Result<Outcome> {
    let space = Arc::new(SpaceSpec::nb101());
    let ds = gen_synth_dataset(&space, 50, &OracleSpec::new(0), 1)?;
    let mut cfg = TrainConfig::new(
        EncoderConfig::desk_for(EncoderKind::Gates, &space),
        LossConfig::new(LossKind::Hinge),
    );
    cfg.eval_every_epoch = false;
    let (pred, _) = train_predictor(&ds, &ds, &cfg)?;
    let tau = kendall_tau(&pred.scores(&ds.archs())?, &ds.perfs())?;
    Ok(Outcome::judged(
        tau >= 0.95,
        format!("train tau {tau:.4} after 200 epochs (need >= 0.95)"),
        format!("{}\n", fmt_all(&[tau])),
    ))
}

/// Evolutionary inner search with the oracle as scorer reaches the
/// optimum of the 15625-cell OOE space in at least 8 of 10 seeds.
pub fn inner_ea_optimum() -> Result<Outcome> {
    let space = Arc::new(SpaceSpec::nb201());
    let oracle = OracleSpec::new(0);
    let best = enumerate_space(&space)?
        .iter()
        .map(|a| synth_perf(a, &oracle))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let ss = SearchSpace::open(space)?;
    let score = |archs: &[ArchDag]| -> Result<Vec<f64>> {
        archs.iter().map(|a| synth_perf(a, &oracle)).collect()
    };
    let none = HashSet::new();
    let mut found = Vec::new();
    for s in 0..10 {
        let pick = inner_ea(
            &score,
            &ss,
            100,
            1,
            20,
            5,
            &none,
            &mut seed::rng(s, "ea-check", 0),
        )?;
        found.push((pick.picks[0].1 == best) as u8 as f64);
    }
    let hits = found.iter().sum::<f64>() as usize;
    Ok(Outcome::judged(
        hits >= 8,
        format!("optimum found in {hits}/10 seeds with 100 steps (need >= 8)"),
        format!("{}\n", fmt_all(&found)),
    ))
}
