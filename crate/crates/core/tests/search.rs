use std::collections::HashSet;
use std::sync::Arc;

use gateslab::archspace::{canonical_key, ArchDag, SpaceSpec};
use gateslab::dataset::{gen_synth_dataset, synth_perf, Dataset, OracleSpec};
use gateslab::encoders::{EncoderConfig, EncoderKind};
use gateslab::objectives::{LossConfig, LossKind};
use gateslab::search::*;
use gateslab::seed;
use gateslab::trainer::TrainConfig;
use gateslab::Error;
use proptest::prelude::*;

fn synth_space(count: usize) -> Dataset {
    let space = SpaceSpec::by_id("oon/nb101-5k").unwrap();
    gen_synth_dataset(&space, count, &OracleSpec::new(0), 0).unwrap()
}

fn search_cfg(ds: &Dataset, inner: InnerMethod) -> SearchConfig {
    let space = ds.space().unwrap();
    let mut train = TrainConfig::new(
        EncoderConfig::desk_for(EncoderKind::Gates, space),
        LossConfig::new(LossKind::Hinge),
    );
    train.batch_size = 8;
    let mut c = SearchConfig::new(inner, train);
    c.initial = 20;
    c
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn check_trace(trace: &SearchTrace) {
    let mut ids = HashSet::new();
    let mut best = f64::NEG_INFINITY;
    for (i, r) in trace.rows.iter().enumerate() {
        assert_eq!(r.eval_index, i + 1);
        assert!(
            ids.insert(r.arch_id.clone()),
            "{} evaluated twice",
            r.arch_id
        );
        best = best.max(r.true_perf);
        assert_eq!(r.best_so_far, best);
    }
}

fn oracle_scorer(oracle: &OracleSpec) -> impl Fn(&[ArchDag]) -> gateslab::Result<Vec<f64>> + '_ {
    move |archs: &[ArchDag]| archs.iter().map(|a| synth_perf(a, oracle)).collect()
}

#[test]
fn single_stage_equals_random_search() {
    let ds = synth_space(600);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    for s in 0..3 {
        let mut cfg = search_cfg(&ds, InnerMethod::Random { n: 100, k: 5 });
        cfg.max_stages = 1;
        cfg.initial = 150;
        cfg.seed = s;
        let res = pbnas_run(&cfg, &ss, &ev, None).unwrap();
        let rs = random_search_baseline(&ss, &ev, 150, s, None).unwrap();
        assert_eq!(res.trace.to_csv(), rs.to_csv());
        assert_eq!(res.trace.evals(), 150);
        assert_eq!(Some(res.best.perf), rs.best());
    }
}

#[test]
fn traces_are_monotone_and_never_repeat() {
    let ds = synth_space(400);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    for s in 0..2 {
        let mut cfg = search_cfg(&ds, InnerMethod::Random { n: 50, k: 5 });
        cfg.max_stages = 6;
        cfg.seed = s;
        let t = pbnas_run(&cfg, &ss, &ev, None).unwrap().trace;
        assert_eq!(t.evals(), 20 + 5 * 5);
        assert!(t.rows[20..].iter().all(|r| r.pred_score.is_finite()));
        check_trace(&t);
        check_trace(&random_search_baseline(&ss, &ev, 400, s, None).unwrap());
        check_trace(&regularized_evolution_baseline(&ss, &ev, 300, 20, 5, s, None).unwrap());
        let mut ea = search_cfg(
            &ds,
            InnerMethod::Ea {
                n: 30,
                k: 1,
                pop: 10,
                tournament: 3,
            },
        );
        ea.max_stages = 8;
        ea.seed = s;
        let t = pbnas_run(&ea, &ss, &ev, None).unwrap().trace;
        assert_eq!(t.evals(), 20 + 7);
        check_trace(&t);
    }
}

#[test]
fn whole_space_budget_finds_the_optimum() {
    let ds = synth_space(300);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    let best = ds.perfs().into_iter().fold(f64::NEG_INFINITY, f64::max);
    let t = random_search_baseline(&ss, &ev, 300, 4, None).unwrap();
    assert_eq!(t.evals(), 300);
    assert_eq!(t.best(), Some(best));
    // one more than the space holds: stops early and says so
    let t = random_search_baseline(&ss, &ev, 301, 4, None).unwrap();
    assert_eq!(t.evals(), 300);
    assert!(t.exhausted);
}

#[test]
fn random_search_hit_time_is_geometric() {
    // top 1% of 5000: expected ~1/q = 100 draws (median ~69 without replacement)
    let ds = synth_space(5000);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    let q = 0.01;
    let top = true_top_ids(ds.records(), 50);
    let hits: Vec<f64> = (0..50)
        .map(|s| {
            random_search_baseline(&ss, &ev, 5000, s, Some(&top))
                .unwrap()
                .evals_to(&top)
                .unwrap() as f64
        })
        .collect();
    let m = median(hits);
    assert!(m >= 0.5 / q && m <= 2.0 / q, "median {m}");
}

#[test]
fn evolution_beats_random_search() {
    let ds = synth_space(5000);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    let top = true_top_ids(ds.records(), 1);
    let mut re = Vec::new();
    let mut rs = Vec::new();
    for s in 0..10 {
        let t = regularized_evolution_baseline(&ss, &ev, 5000, 20, 5, s, Some(&top)).unwrap();
        re.push(t.evals_to(&top).map_or(f64::INFINITY, |e| e as f64));
        let t = random_search_baseline(&ss, &ev, 5000, s, Some(&top)).unwrap();
        rs.push(t.evals_to(&top).unwrap() as f64);
    }
    let (re, rs) = (median(re), median(rs));
    assert!(re < rs, "RE {re} vs RS {rs}");
}

#[test]
fn inner_random_contracts() {
    let ds = synth_space(500);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let oracle = OracleSpec::new(0);
    let score = oracle_scorer(&oracle);
    let none = HashSet::new();
    // n = k: every sample is returned, scorer untouched
    let panics = |_: &[ArchDag]| -> gateslab::Result<Vec<f64>> { panic!("scorer used") };
    let pick = inner_random(&panics, &ss, 7, 7, &none, &mut seed::rng_from(1)).unwrap();
    assert_eq!(pick.picks.len(), 7);
    // oracle scorer: the true best k of the same n samples
    let (sampled, _) = ss.sample_fresh(60, &none, &mut seed::rng_from(2)).unwrap();
    let pick = inner_random(&score, &ss, 60, 5, &none, &mut seed::rng_from(2)).unwrap();
    let mut truth: Vec<f64> = sampled
        .iter()
        .map(|c| synth_perf(&c.arch, &oracle).unwrap())
        .collect();
    truth.sort_by(|a, b| b.total_cmp(a));
    let got: Vec<f64> = pick.picks.iter().map(|p| p.1).collect();
    assert_eq!(got, truth[..5]);
    // exhaustive ratio: best unevaluated architectures of the whole pool
    let evaluated: HashSet<_> = ds.records()[..100]
        .iter()
        .map(|r| canonical_key(&r.arch).unwrap())
        .collect();
    let pick = inner_random(&score, &ss, 10_000, 5, &evaluated, &mut seed::rng_from(3)).unwrap();
    assert!(pick.exhausted);
    let mut rest: Vec<f64> = ds.records()[100..].iter().map(|r| r.perf).collect();
    rest.sort_by(|a, b| b.total_cmp(a));
    let got: Vec<f64> = pick.picks.iter().map(|p| p.1).collect();
    assert_eq!(got, rest[..5]);
    assert!(matches!(
        inner_random(&score, &ss, 3, 5, &none, &mut seed::rng_from(0)),
        Err(Error::Config(_))
    ));
}

#[test]
fn inner_ea_without_steps_ranks_the_population() {
    let space = Arc::new(SpaceSpec::nb201());
    let oracle = OracleSpec::new(0);
    let ss = SearchSpace::open(space).unwrap();
    let score = oracle_scorer(&oracle);
    let none = HashSet::new();
    let pick = inner_ea(&score, &ss, 0, 3, 20, 5, &none, &mut seed::rng_from(9)).unwrap();
    let (init, _) = ss.sample_fresh(20, &none, &mut seed::rng_from(9)).unwrap();
    let mut truth: Vec<f64> = init
        .iter()
        .map(|c| synth_perf(&c.arch, &oracle).unwrap())
        .collect();
    truth.sort_by(|a, b| b.total_cmp(a));
    let got: Vec<f64> = pick.picks.iter().map(|p| p.1).collect();
    assert_eq!(got, truth[..3]);
    assert!(matches!(
        inner_ea(&score, &ss, 5, 1, 3, 5, &none, &mut seed::rng_from(0)),
        Err(Error::Config(_))
    ));
}

#[test]
fn evaluator_miss_names_the_architecture() {
    let ds = synth_space(50);
    let space = ds.space().unwrap().clone();
    let ss = SearchSpace::open(space).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    let err = random_search_baseline(&ss, &ev, 500, 0, None).unwrap_err();
    let Error::Eval(id) = err else {
        panic!("{err:?}")
    };
    assert_eq!(id.len(), 12);
}

#[test]
fn searches_are_deterministic() {
    let ds = synth_space(500);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    let mut cfg = search_cfg(&ds, InnerMethod::Random { n: 100, k: 5 });
    cfg.max_stages = 4;
    cfg.seed = 3;
    let a = pbnas_run(&cfg, &ss, &ev, None).unwrap().trace.to_csv();
    let b = pbnas_run(&cfg, &ss, &ev, None).unwrap().trace.to_csv();
    assert_eq!(a, b);
    cfg.warm_start = true;
    let w = pbnas_run(&cfg, &ss, &ev, None).unwrap().trace;
    check_trace(&w);
    assert_eq!(
        w.to_csv(),
        pbnas_run(&cfg, &ss, &ev, None).unwrap().trace.to_csv()
    );
    let re = |s| {
        regularized_evolution_baseline(&ss, &ev, 200, 20, 5, s, None)
            .unwrap()
            .to_csv()
    };
    assert_eq!(re(1), re(1));
    assert_ne!(re(1), re(2));
}

#[test]
fn oracle_evaluator_on_open_space() {
    let space = Arc::new(SpaceSpec::nb201());
    let ss = SearchSpace::open(space).unwrap();
    let ev = OracleEvaluator {
        oracle: OracleSpec::new(1),
    };
    let t = regularized_evolution_baseline(&ss, &ev, 120, 20, 5, 0, None).unwrap();
    assert_eq!(t.evals(), 120);
    assert!(t.rows[..20].iter().all(|r| r.stage == 1));
    assert!(t.rows[20..].iter().all(|r| r.stage == 2));
    check_trace(&t);
}

#[test]
fn stop_on_target_ends_the_run() {
    let ds = synth_space(300);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    let top = true_top_ids(ds.records(), 3);
    let t = random_search_baseline(&ss, &ev, 300, 0, Some(&top)).unwrap();
    assert_eq!(t.evals_to(&top), Some(t.evals()));
    assert!(top.contains(&t.rows.last().unwrap().arch_id));
}

#[test]
fn sweep_table_format() {
    let ds = synth_space(300);
    let ss = SearchSpace::from_dataset(&ds).unwrap();
    let ev = LookupEvaluator::new(&ds).unwrap();
    let top = true_top_ids(ds.records(), 5);
    let mut cfg = search_cfg(&ds, InnerMethod::Random { n: 5, k: 5 });
    cfg.max_stages = 8;
    let table = sweep_sample_ratio(&cfg, &[1, 4], &[0, 1, 2], &ss, &ev, &top).unwrap();
    let csv = table.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "r,seed,evals");
    assert_eq!(lines.len(), 1 + 2 * 3 + 2);
    assert!(lines[7].starts_with("1,median,") && lines[8].starts_with("4,median,"));
    assert_eq!(table.rows.iter().filter(|r| r.r == 4).count(), 3);
    let ea = search_cfg(
        &ds,
        InnerMethod::Ea {
            n: 10,
            k: 1,
            pop: 5,
            tournament: 2,
        },
    );
    assert!(matches!(
        sweep_sample_ratio(&ea, &[1], &[0], &ss, &ev, &top),
        Err(Error::Config(_))
    ));
}

#[test]
fn config_validation() {
    let ds = synth_space(50);
    let mut c = search_cfg(&ds, InnerMethod::Random { n: 2, k: 5 });
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    c.inner = InnerMethod::Ea {
        n: 10,
        k: 1,
        pop: 3,
        tournament: 5,
    };
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    c.inner = InnerMethod::Random { n: 10, k: 5 };
    c.train.encoder.comparator = true;
    c.train.loss = LossConfig::new(LossKind::Comparator);
    assert!(matches!(c.validate(), Err(Error::Unsupported(_))));
    assert_eq!(
        SearchConfig::new(
            InnerMethod::Ea {
                n: 100,
                k: 1,
                pop: 20,
                tournament: 5
            },
            c.train.clone()
        )
        .initial,
        50
    );
    assert_eq!(
        SearchConfig::new(InnerMethod::Random { n: 2500, k: 5 }, c.train)
            .train
            .epochs,
        50
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn budget_is_exact(budget in 20usize..120, seed in 0u64..1000) {
        let space = Arc::new(SpaceSpec::nb201());
        let ss = SearchSpace::open(space).unwrap();
        let ev = OracleEvaluator { oracle: OracleSpec::new(2) };
        let rs = random_search_baseline(&ss, &ev, budget, seed, None).unwrap();
        prop_assert_eq!(rs.evals(), budget);
        let re = regularized_evolution_baseline(&ss, &ev, budget, 20, 5, seed, None).unwrap();
        prop_assert_eq!(re.evals(), budget);
        check_trace(&rs);
        check_trace(&re);
    }
}
