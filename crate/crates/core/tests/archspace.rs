use std::collections::HashSet;
use std::sync::Arc;

use gateslab::archspace::*;
use gateslab::seed;
use proptest::prelude::*;

fn nb101() -> Arc<SpaceSpec> {
    Arc::new(SpaceSpec::nb101())
}

/// Relabels the internal nodes of `a` by a random permutation, keeping only
/// topologically valid results.
fn random_relabel(a: &ArchDag, s: u64) -> ArchDag {
    let vars = isomorphic_variants(a).unwrap();
    vars[(s as usize) % vars.len()].clone()
}

#[test]
fn canonical_equality_matches_brute_force_isomorphism() {
    let s = nb101();
    let mut iso = 0;
    for i in 0..500u64 {
        let a = sample_random(&s, i).unwrap();
        // half the pairs are relabellings, half independent draws
        let b = if i % 2 == 0 {
            random_relabel(&a, i)
        } else {
            let mut rng = seed::rng(5, "pair", i);
            mutate(&a, &mut rng).unwrap_or_else(|_| sample_random(&s, 10_000 + i).unwrap())
        };
        let by_canon = canonical_key(&a).unwrap() == canonical_key(&b).unwrap();
        let by_brute = is_isomorphic(&a, &b).unwrap();
        assert_eq!(by_canon, by_brute, "{a:?} vs {b:?}");
        iso += by_brute as usize;
    }
    assert!(iso >= 250);
}

#[test]
fn ooe_canonical_equality_matches_brute_force() {
    let s = Arc::new(SpaceSpec::enas());
    for i in 0..200u64 {
        let a = sample_random(&s, i).unwrap();
        let b = if i % 2 == 0 {
            random_relabel(&a, i * 7 + 1)
        } else {
            mutate(&a, &mut seed::rng(6, "pair", i)).unwrap()
        };
        assert_eq!(
            canonical_key(&a).unwrap() == canonical_key(&b).unwrap(),
            is_isomorphic(&a, &b).unwrap()
        );
    }
}

#[test]
fn single_path_is_already_canonical() {
    let a = ArchDag::oon_named(
        nb101(),
        &["input", "conv1x1", "conv3x3", "maxpool3x3", "output"],
        &[(0, 1), (1, 2), (2, 3), (3, 4)],
    )
    .unwrap();
    assert_eq!(canonicalize(&a).unwrap(), a);
    assert_eq!(isomorphic_variants(&a).unwrap().len(), 1);
}

#[test]
fn symmetric_branches_collapse_variants() {
    // two identical conv3x3 -> conv1x1 branches, five internal nodes
    let a = ArchDag::oon_named(
        nb101(),
        &[
            "input",
            "conv3x3",
            "conv3x3",
            "conv1x1",
            "conv1x1",
            "maxpool3x3",
            "output",
        ],
        &[(0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (4, 5), (5, 6)],
    )
    .unwrap();
    let vars = isomorphic_variants(&a).unwrap();
    assert!(vars.len() < 120);
    let keys: HashSet<_> = vars.iter().map(|v| canonical_key(v).unwrap()).collect();
    assert_eq!(keys.len(), 1);
    for v in &vars {
        assert!(is_isomorphic(v, &a).unwrap());
    }
}

#[test]
fn nb101_sampling_never_violates_invariants() {
    let s = nb101();
    let mut rng = seed::rng(1, "inv", 0);
    for _ in 0..10_000 {
        sample_with(&s, &mut rng).unwrap().validate().unwrap();
    }
}

#[test]
fn nb201_edge_ops_are_uniform() {
    let s = Arc::new(SpaceSpec::nb201());
    let choices = s.op_choices();
    let n = 50_000;
    let mut counts = vec![vec![0usize; s.vocab_size()]; 6];
    let mut rng = seed::rng(2, "uniform", 0);
    for _ in 0..n {
        let a = sample_with(&s, &mut rng).unwrap();
        assert_eq!((a.num_nodes(), a.num_edges()), (4, 6));
        for (i, e) in a.edges().iter().enumerate() {
            counts[i][e.op] += 1;
        }
    }
    let p = 1.0 / choices.len() as f64;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for row in &counts {
        for &op in &choices {
            assert!(
                (row[op] as f64 - n as f64 * p).abs() <= 3.0 * sigma,
                "{row:?}"
            );
        }
    }
}

#[test]
fn nb201_mutation_reaches_any_target() {
    let s = Arc::new(SpaceSpec::nb201());
    let mut rng = seed::rng(3, "reach", 0);
    let dist = |a: &ArchDag, b: &ArchDag| {
        a.edges()
            .iter()
            .zip(b.edges())
            .filter(|(x, y)| x.op != y.op)
            .count()
    };
    for i in 0..100 {
        let mut cur = sample_random(&s, 2 * i).unwrap();
        let target = sample_random(&s, 2 * i + 1).unwrap();
        let mut draws = 0;
        while cur != target {
            let m = mutate(&cur, &mut rng).unwrap();
            if dist(&m, &target) < dist(&cur, &target) {
                cur = m;
            }
            draws += 1;
            assert!(draws < 20_000, "target unreachable");
        }
    }
}

#[test]
fn two_node_cell_keeps_its_only_path() {
    let s = nb101();
    let a = ArchDag::oon_named(s, &["input", "output"], &[(0, 1)]).unwrap();
    let mut rng = seed::rng(4, "v2", 0);
    for _ in 0..20 {
        match mutate(&a, &mut rng) {
            Ok(m) => assert_eq!(m.edges().len(), 1),
            Err(e) => assert!(matches!(e, gateslab::Error::Mutation(100))),
        }
    }
}

#[test]
fn seven_node_variant_expansion_matches_benchmark() {
    // For labelled cells drawn uniformly, a unique graph with m labellings is
    // drawn with weight m, so 1 / E[1/m] estimates the mean variant count per
    // unique graph.
    let mut spec = SpaceSpec::nb101();
    spec.node_range = (7, 7);
    let s = Arc::new(spec);
    let n = 1500;
    let mut inv = 0.0;
    for i in 0..n {
        let a = sample_random(&s, i).unwrap();
        inv += 1.0 / isomorphic_variants(&a).unwrap().len() as f64;
    }
    let ratio = n as f64 / inv;
    let published = 116_102.0 / 36_064.0;
    assert!(
        (ratio - published).abs() < 0.5,
        "ratio {ratio:.3} vs {published:.3}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalize_is_idempotent(seed in 0u64..1_000_000, which in 0usize..4) {
        let s = Arc::new(SpaceSpec::presets()[which].clone());
        let a = sample_random(&s, seed).unwrap();
        let c = canonicalize(&a).unwrap();
        prop_assert_eq!(&canonicalize(&c).unwrap(), &c);
        prop_assert!(is_isomorphic(&a, &c).unwrap());
        c.validate().unwrap();
    }

    #[test]
    fn pad_unpad_round_trip(seeds in proptest::collection::vec(0u64..1_000_000, 1..8), which in 0usize..4) {
        let s = Arc::new(SpaceSpec::presets()[which].clone());
        let archs: Vec<_> = seeds.iter().map(|&x| sample_random(&s, x).unwrap()).collect();
        let p = pad_batch(&archs).unwrap();
        prop_assert_eq!(p.adj.shape(), &[archs.len(), s.max_nodes, s.max_nodes][..]);
        for (g, a) in archs.iter().enumerate() {
            prop_assert_eq!(&p.unpad(g).unwrap(), a);
        }
    }

    #[test]
    fn mutants_stay_valid(seed in 0u64..1_000_000, which in 0usize..4) {
        let s = Arc::new(SpaceSpec::presets()[which].clone());
        let a = sample_random(&s, seed).unwrap();
        let mut rng = seed::rng(seed, "prop", 0);
        if let Ok(m) = mutate(&a, &mut rng) {
            m.validate().unwrap();
            prop_assert_ne!(m, a);
        }
    }
}
