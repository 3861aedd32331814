use std::collections::HashSet;
use std::sync::Arc;

use gateslab::archspace::SpaceSpec;
use gateslab::dataset::{gen_synth_dataset, Dataset, OracleSpec};
use gateslab::encoders::{EncoderConfig, EncoderKind};
use gateslab::objectives::{LossConfig, LossKind};
use gateslab::search::{
    pbnas_run, random_search_baseline, regularized_evolution_baseline, sweep_sample_ratio,
    true_top_ids, InnerMethod, LookupEvaluator, SearchConfig, SearchSpace,
};
use gateslab::trainer::TrainConfig;
use gateslab::Result;

use crate::util::{fmt, fmt_all, median};
use crate::Outcome;

const SEEDS: u64 = 10;
const TOP: usize = 5;

struct Bench {
    ds: Dataset,
    space: SearchSpace,
    evaluator: LookupEvaluator,
    top: HashSet<String>,
}

/// The 5000-architecture space, evaluated exhaustively by the oracle.
fn bench() -> Result<Bench> {
    let spec = Arc::new(SpaceSpec::nb101_5k());
    let ds = gen_synth_dataset(&spec, 5000, &OracleSpec::new(0), 0)?;
    Ok(Bench {
        space: SearchSpace::from_dataset(&ds)?,
        evaluator: LookupEvaluator::new(&ds)?,
        top: true_top_ids(ds.records(), TOP),
        ds,
    })
}

/// Predictor-based search used by the search experiments: desk GATES with
/// hinge loss, 20 uniform evaluations before the first predictor, and
/// batches of 16 so that small stage datasets still get several updates
/// per epoch.
pub fn search_config(spec: &SpaceSpec, n: usize, k: usize) -> SearchConfig {
    let mut train = TrainConfig::new(
        EncoderConfig::desk_for(EncoderKind::Gates, spec),
        LossConfig::new(LossKind::Hinge),
    );
    train.batch_size = 16;
    let mut cfg = SearchConfig::new(InnerMethod::Random { n, k }, train);
    cfg.initial = 20;
    cfg
}

fn hits(v: Option<usize>) -> f64 {
    v.map_or(f64::INFINITY, |e| e as f64)
}

/// Evaluations until a true top-5 architecture is found, per strategy.
pub fn search_efficiency() -> Result<Outcome> {
    let b = bench()?;
    let n = b.ds.len();
    let spec = b.ds.space().expect("non-empty").clone();
    let (mut rs, mut re, mut pb) = (vec![], vec![], vec![]);
    for seed in 0..SEEDS {
        rs.push(hits(
            random_search_baseline(&b.space, &b.evaluator, n, seed, Some(&b.top))?.evals_to(&b.top),
        ));
        re.push(hits(
            regularized_evolution_baseline(&b.space, &b.evaluator, n, 20, 5, seed, Some(&b.top))?
                .evals_to(&b.top),
        ));
        let mut cfg = search_config(&spec, 2500, TOP);
        cfg.seed = seed;
        pb.push(hits(
            pbnas_run(&cfg, &b.space, &b.evaluator, Some(&b.top))?
                .trace
                .evals_to(&b.top),
        ));
    }
    let (m_rs, m_re, m_pb) = (median(&rs), median(&re), median(&pb));
    Ok(Outcome::judged(
        m_pb <= 0.5 * m_re && 0.5 * m_re <= m_rs && m_pb <= 0.2 * m_rs,
        format!(
            "median evals predictor-based {}, evolution {}, random {}",
            fmt(m_pb),
            fmt(m_re),
            fmt(m_rs)
        ),
        format!(
            "random,{}\nevolution,{}\npredictor,{}\n",
            fmt_all(&rs),
            fmt_all(&re),
            fmt_all(&pb)
        ),
    ))
}

/// Median evaluations across sample ratios r = n / k.
pub fn sample_ratio_shape() -> Result<Outcome> {
    let b = bench()?;
    let spec = b.ds.space().expect("non-empty").clone();
    let ratios = [1, 10, 100, 1000];
    let seeds: Vec<u64> = (0..SEEDS).collect();
    let table = sweep_sample_ratio(
        &search_config(&spec, TOP, TOP),
        &ratios,
        &seeds,
        &b.space,
        &b.evaluator,
        &b.top,
    )?;
    let med: Vec<f64> = ratios.iter().map(|&r| table.median(r)).collect();
    let (lo, hi) = (med[0], med[ratios.len() - 1]);
    let interior = med[1..ratios.len() - 1].iter().any(|&m| m < lo && m < hi);
    let summary: Vec<String> = ratios
        .iter()
        .zip(&med)
        .map(|(r, m)| format!("r={r}: {}", fmt(*m)))
        .collect();
    Ok(Outcome::judged(
        interior,
        format!("median evals {}", summary.join(", ")),
        table.to_csv(),
    ))
}
