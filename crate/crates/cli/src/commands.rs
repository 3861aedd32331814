use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use gateslab::archspace::{sample_random, SpaceSpec};
use gateslab::dataset::{
    gen_synth_dataset, load_dataset, split_prefix, synth_perf, to_jsonl, Dataset, OracleSpec,
};
use gateslab::encoders::{iso_variance, EncoderConfig, EncoderKind};
use gateslab::objectives::{LossConfig, LossKind};
use gateslab::search::{
    pbnas_run, random_search_baseline, regularized_evolution_baseline, sweep_sample_ratio,
    true_top_ids, Evaluator, InnerMethod, LookupEvaluator, OracleEvaluator, SearchConfig,
    SearchSpace, SearchTrace,
};
use gateslab::seed;
use gateslab::trainer::{
    evaluate_predictor_seeded, score_metrics, subset_train_fraction, train_predictor, Rounding,
    SubsetMode, TrainConfig,
};
use gateslab::{Error, Result};
use serde_json::{json, Value};

use crate::args::*;
use crate::manifest::{sibling, Run};
use crate::oracle_stub::{load_model, oracle_text, Model};

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config serializes")
}

fn read_data(run: &mut Run, path: &Path) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "dataset {} does not exist",
            path.display()
        )));
    }
    run.input(path);
    let ds = load_dataset(path)?;
    log::info!("loaded {} records from {}", ds.len(), path.display());
    Ok(ds)
}

fn space_of(ds: &Dataset) -> Result<&SpaceSpec> {
    ds.space()
        .map(|s| &**s)
        .ok_or_else(|| Error::Empty("dataset has no records".into()))
}

/// Resolves the predictor flags against `space`.
fn train_config(m: &ModelArgs, space: &SpaceSpec, seed: u64) -> TrainConfig {
    let kind = match m.encoder {
        EncoderArg::Gates => EncoderKind::Gates,
        EncoderArg::Gcn => EncoderKind::Gcn,
        EncoderArg::GcnGlobal => EncoderKind::GcnGlobal,
        EncoderArg::Mlp => EncoderKind::Mlp,
    };
    let mut enc = if m.desk {
        EncoderConfig::desk_for(kind, space)
    } else {
        EncoderConfig::for_space(kind, space)
    };
    if let Some(l) = m.layers {
        enc.layers = l;
    }
    if let Some(h) = m.hid {
        enc.hidden = h;
        if enc.reinject_input {
            enc.input_emb = h;
        }
    }
    let kind = match m.loss {
        LossArg::Mse => LossKind::Mse,
        LossArg::Hinge => LossKind::Hinge,
        LossArg::Bce => LossKind::Bce,
        LossArg::Comparator => LossKind::Comparator,
        LossArg::Listmle => LossKind::ListMle,
    };
    enc.comparator = kind == LossKind::Comparator;
    let mut loss = LossConfig::new(kind);
    loss.margin = m.margin;
    loss.list_len = m.list_len;
    let mut cfg = TrainConfig::new(enc, loss);
    apply_schedule(m, &mut cfg);
    cfg.seed = seed;
    cfg
}

fn apply_schedule(m: &ModelArgs, cfg: &mut TrainConfig) {
    if let Some(e) = m.epochs {
        cfg.epochs = e;
    }
    if let Some(b) = m.batch {
        cfg.batch_size = b;
    }
    if let Some(lr) = m.lr {
        cfg.lr = lr;
    }
}

fn print_json(v: &Value) {
    println!("{v}");
}

pub fn gen(a: &GenArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("gen", argv);
    let space = SpaceSpec::by_id(&a.space).map_err(|e| Error::Config(e.to_string()))?;
    let mut oracle = OracleSpec::new(a.oracle_seed.unwrap_or(a.seed));
    if let Some(d) = a.depth_coef {
        oracle.depth_coef = d;
    }
    if let Some(n) = a.noise_coef {
        oracle.noise_coef = n;
    }
    oracle.validate(&space)?;
    run.seed("seed", a.seed);
    run.seed("oracle", oracle.seed);
    let ds = gen_synth_dataset(&space, a.count as usize, &oracle, a.seed)?;
    run.write(&a.out, &to_jsonl(&ds))?;
    if let Some(p) = &a.oracle_out {
        run.write(p, &oracle_text(&oracle))?;
    }
    print_json(&json!({"records": ds.len(), "space": a.space, "out": a.out}));
    run.finish(
        &a.out,
        json!({"args": to_value(a), "oracle": to_value(&oracle)}),
    )
}

pub fn train(a: &TrainArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("train", argv);
    let data = read_data(&mut run, &a.data)?;
    let (train, test) = match &a.test {
        Some(t) => (data, read_data(&mut run, t)?),
        None => split_prefix(&data, a.split)?,
    };
    let train = if a.train_frac < 1.0 {
        let mode = match a.frac_mode {
            FracMode::Prefix => SubsetMode::Prefix,
            FracMode::Random => SubsetMode::SeededRandom(a.seed),
        };
        subset_train_fraction(&train, a.train_frac, mode, Rounding::Floor)?
    } else {
        train
    };
    log::info!(
        "training on {} records, testing on {}",
        train.len(),
        test.len()
    );
    let cfg = train_config(&a.model, space_of(&train)?, a.seed);
    run.seed("seed", a.seed);
    let (pred, report) = train_predictor(&train, &test, &cfg)?;
    run.write(&a.out, &pred.to_checkpoint())?;
    run.write(
        &sibling(&a.out, "report.json"),
        &(report.to_record() + "\n"),
    )?;
    run.write(&sibling(&a.out, "curve.csv"), &report.to_csv())?;
    println!("{}", report.to_record());
    run.finish(
        &a.out,
        json!({"args": to_value(a), "train": to_value(&cfg), "train_records": train.len(), "test_records": test.len()}),
    )
}

pub fn eval(a: &EvalArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("eval", argv);
    let model = load_model(&a.checkpoint)?;
    run.input(&a.checkpoint);
    let ds = read_data(&mut run, &a.data)?;
    run.seed("sort_seed", a.sort_seed);
    let metrics = match &model {
        Model::Predictor(p) => evaluate_predictor_seeded(p, &ds, &a.ks, a.sort_seed)?,
        Model::Oracle(o) => {
            o.validate(space_of(&ds)?)?;
            let s = ds
                .records()
                .iter()
                .map(|r| synth_perf(&r.arch, o))
                .collect::<Result<Vec<_>>>()?;
            score_metrics(&s, &ds, &a.ks)?
        }
    };
    let record = metrics.to_record();
    let mut csv = String::from("k,precision,n_at_k\n");
    for ((k, p), (_, r)) in metrics.precision_at_k.iter().zip(&metrics.n_at_k) {
        csv += &format!("{k},{p},{r}\n");
    }
    run.write(&a.out, &(record.clone() + "\n"))?;
    run.write(&sibling(&a.out, "pk.csv"), &csv)?;
    println!("{record}");
    run.finish(&a.out, json!({"args": to_value(a)}))
}

pub fn isocheck(a: &IsoArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("isocheck", argv);
    let Model::Predictor(pred) = load_model(&a.checkpoint)? else {
        return Err(Error::Unsupported(
            "isocheck needs a trained predictor checkpoint".into(),
        ));
    };
    run.input(&a.checkpoint);
    run.seed("seed", a.seed);
    let space = pred.space().clone();
    let archs = (0..a.count as u64)
        .map(|i| sample_random(&space, seed::derive(a.seed, "isocheck", i)))
        .collect::<Result<Vec<_>>>()?;
    let report = iso_variance(&pred, &archs)?;
    run.write(&a.out, &report.to_csv())?;
    let max = report.groups.iter().map(|g| g.variance).fold(0.0, f64::max);
    print_json(&json!({
        "encoder": pred.config().kind.name(),
        "groups": report.groups.len(),
        "nontrivial_groups": report.nontrivial(),
        "total_variance": report.total_variance,
        "max_variance": max,
    }));
    run.finish(&a.out, json!({"args": to_value(a)}))
}

/// Search pool, evaluator and (for datasets) the true top-K ids.
type Source = (SearchSpace, Box<dyn Evaluator>, Option<Dataset>);

fn search_source(run: &mut Run, s: &SpaceArgs) -> Result<Source> {
    match (&s.data, &s.space) {
        (Some(p), _) => {
            let ds = read_data(run, p)?;
            Ok((
                SearchSpace::from_dataset(&ds)?,
                Box::new(LookupEvaluator::new(&ds)?),
                Some(ds),
            ))
        }
        (None, Some(id)) => {
            let space = SpaceSpec::by_id(id).map_err(|e| Error::Config(e.to_string()))?;
            let oracle = OracleSpec::new(s.oracle_seed);
            oracle.validate(&space)?;
            run.seed("oracle", s.oracle_seed);
            Ok((
                SearchSpace::open(space)?,
                Box::new(OracleEvaluator { oracle }),
                None,
            ))
        }
        (None, None) => Err(Error::Config("search needs --data or --space".into())),
    }
}

fn summary(strategy: &str, trace: &SearchTrace, targets: Option<&HashSet<String>>) -> Value {
    let best = trace.rows.iter().max_by(|a, b| {
        a.true_perf
            .total_cmp(&b.true_perf)
            .then(b.eval_index.cmp(&a.eval_index))
    });
    json!({
        "strategy": strategy,
        "evals": trace.evals(),
        "best_id": best.map(|r| r.arch_id.clone()),
        "best_perf": best.map(|r| r.true_perf),
        "evals_to_target": targets.and_then(|t| trace.evals_to(t)),
        "exhausted": trace.exhausted,
    })
}

pub fn search(a: &SearchArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("search", argv);
    let (space, evaluator, ds) = search_source(&mut run, &a.source)?;
    let targets = match (a.stop_top, &ds) {
        (None, _) => None,
        (Some(k), Some(ds)) => Some(true_top_ids(ds.records(), k)),
        (Some(_), None) => return Err(Error::Config("--stop-top needs --data".into())),
    };
    run.seed("seed", a.seed);
    let mut resolved = json!({"args": to_value(a)});
    let (name, trace) = match a.strategy {
        Strategy::Pbnas => {
            let inner = match a.inner {
                InnerArg::Random => InnerMethod::Random {
                    n: a.n.unwrap_or(2500),
                    k: a.k.unwrap_or(5),
                },
                InnerArg::Ea => InnerMethod::Ea {
                    n: a.n.unwrap_or(100),
                    k: a.k.unwrap_or(1),
                    pop: a.pop,
                    tournament: a.tournament,
                },
            };
            let mut cfg = SearchConfig::new(inner, train_config(&a.model, space.spec(), a.seed));
            apply_schedule(&a.model, &mut cfg.train);
            if let Some(i) = a.initial {
                cfg.initial = i;
            }
            cfg.max_stages = a.stages;
            cfg.max_evals = a.budget;
            cfg.warm_start = a.warm_start;
            cfg.seed = a.seed;
            resolved["search"] = to_value(&cfg);
            (
                "pbnas",
                pbnas_run(&cfg, &space, evaluator.as_ref(), targets.as_ref())?.trace,
            )
        }
        Strategy::Random => (
            "random",
            random_search_baseline(
                &space,
                evaluator.as_ref(),
                a.budget,
                a.seed,
                targets.as_ref(),
            )?,
        ),
        Strategy::Evolution => (
            "evolution",
            regularized_evolution_baseline(
                &space,
                evaluator.as_ref(),
                a.budget,
                a.pop,
                a.tournament,
                a.seed,
                targets.as_ref(),
            )?,
        ),
    };
    run.write(&a.out, &trace.to_csv())?;
    print_json(&summary(name, &trace, targets.as_ref()));
    run.finish(&a.out, resolved)
}

pub fn sweep_r(a: &SweepArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("sweep-r", argv);
    let ds = read_data(&mut run, &a.data)?;
    let space = SearchSpace::from_dataset(&ds)?;
    let evaluator = LookupEvaluator::new(&ds)?;
    let targets = true_top_ids(ds.records(), a.top);
    let mut cfg = SearchConfig::new(
        InnerMethod::Random { n: a.k, k: a.k },
        train_config(&a.model, space.spec(), 0),
    );
    apply_schedule(&a.model, &mut cfg.train);
    cfg.initial = a.initial;
    cfg.max_stages = a.stages;
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let table = sweep_sample_ratio(&cfg, &a.r, &seeds, &space, &evaluator, &targets)?;
    run.write(&a.out, &table.to_csv())?;
    let medians: BTreeMap<String, Value> = table
        .ratios()
        .into_iter()
        .map(|r| {
            let m = table.median(r);
            (
                r.to_string(),
                if m.is_finite() { json!(m) } else { Value::Null },
            )
        })
        .collect();
    print_json(&json!({ "median_evals": medians }));
    run.finish(
        &a.out,
        json!({"args": to_value(a), "search": to_value(&cfg)}),
    )
}
