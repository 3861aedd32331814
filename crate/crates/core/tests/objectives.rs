use gateslab::numerics::{grad_check, Tape, Tensor};
use gateslab::objectives::*;
use gateslab::seed;
use proptest::prelude::*;
use rand::Rng;

fn random_vec<R: Rng>(rng: &mut R, n: usize, levels: u32) -> Vec<f64> {
    (0..n)
        .map(|_| f64::from(rng.random_range(0..levels)) / 7.0)
        .collect()
}

/// Item `i` is in the top-K iff fewer than K items beat it.
fn beats(v: &[f64], ids: &[usize], a: usize, b: usize) -> bool {
    v[a] > v[b] || (v[a] == v[b] && ids[a] < ids[b])
}

fn top_set(v: &[f64], ids: &[usize], k: usize) -> Vec<bool> {
    (0..v.len())
        .map(|i| (0..v.len()).filter(|&j| beats(v, ids, j, i)).count() < k)
        .collect()
}

#[test]
fn fast_tau_matches_pair_enumeration() {
    let mut rng = seed::rng(1, "tau", 0);
    for case in 0..1000 {
        let n = rng.random_range(2..=50);
        // few levels force plenty of ties
        let levels = if case % 2 == 0 { 4 } else { 1000 };
        let x = random_vec(&mut rng, n, levels);
        let y = random_vec(&mut rng, n, levels);
        let fast = pair_counts(&x, &y).unwrap();
        let brute = pair_counts_brute(&x, &y).unwrap();
        assert_eq!(fast, brute);
        for v in [TauVariant::A, TauVariant::B] {
            let (a, b) = (fast.tau(v), brute.tau(v));
            assert!(a.to_bits() == b.to_bits(), "{a} vs {b}");
        }
    }
}

#[test]
fn top_k_metrics_match_set_computation() {
    let mut rng = seed::rng(2, "topk", 0);
    for _ in 0..500 {
        let n = rng.random_range(1..=30);
        let pred = random_vec(&mut rng, n, 6);
        let truth = random_vec(&mut rng, n, 6);
        let mut ids: Vec<usize> = (0..n).collect();
        // shuffle ids so ties are not broken by position
        for i in (1..n).rev() {
            ids.swap(i, rng.random_range(0..=i));
        }
        for k in 1..=n {
            let tp = top_set(&pred, &ids, k);
            let tt = top_set(&truth, &ids, k);
            let hits = (0..n).filter(|&i| tp[i] && tt[i]).count();
            assert_eq!(
                precision_at_k(&pred, &truth, &ids, k).unwrap(),
                hits as f64 / k as f64
            );
            let best = (0..n)
                .filter(|&i| tp[i])
                .map(|i| 1 + (0..n).filter(|&j| beats(&truth, &ids, j, i)).count())
                .min()
                .unwrap();
            assert_eq!(n_at_k(&pred, &truth, &ids, k).unwrap(), best);
        }
    }
}

fn scalar_loss(
    f: impl FnOnce(&mut Tape, gateslab::numerics::Var) -> gateslab::Result<gateslab::numerics::Var>,
    s: &[f64],
) -> f64 {
    let mut t = Tape::new();
    let v = t.constant(Tensor::vector(s.to_vec()));
    let l = f(&mut t, v).unwrap();
    t.value(l).item().unwrap()
}

#[test]
fn loss_gradients() {
    let mut rng = seed::rng(3, "lossgrad", 0);
    for _ in 0..20 {
        let s: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = Tensor::vector(s);
        let checks = [
            grad_check(&x, |t, v| mse_loss(t, v, &y), 1e-6).unwrap(),
            grad_check(&x, |t, v| hinge_pair_loss(t, v, &y, 0.1), 1e-6).unwrap(),
            grad_check(&x, |t, v| bce_pair_loss(t, v, &y), 1e-6).unwrap(),
            grad_check(
                &x,
                |t, v| {
                    let m = t.reshape(v, &[2, 3])?;
                    listmle_loss(t, m)
                },
                1e-6,
            )
            .unwrap(),
            grad_check(
                &x,
                |t, v| {
                    let col = t_col(t, v)?;
                    let a = t.gather(col, &[0, 1, 2])?;
                    let b = t.gather(col, &[3, 4, 5])?;
                    let a = t.reshape(a, &[3])?;
                    let b = t.reshape(b, &[3])?;
                    comparator_loss(t, a, b, 0.1)
                },
                1e-6,
            )
            .unwrap(),
        ];
        for r in checks {
            assert!(r.max_rel_error <= 1e-4, "{r:?}");
        }
    }
}

fn t_col(t: &mut Tape, v: gateslab::numerics::Var) -> gateslab::Result<gateslab::numerics::Var> {
    t.reshape(v, &[6, 1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tau_is_symmetric_and_rank_based(
        x in proptest::collection::vec(-5i32..5, 2..30),
        seed in 0u64..1000,
    ) {
        let mut rng = seed::rng_from(seed);
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y = random_vec(&mut rng, x.len(), 5);
        let t = kendall_tau(&x, &y).unwrap();
        let r = kendall_tau(&y, &x).unwrap();
        prop_assert!(t.to_bits() == r.to_bits() || (t.is_nan() && r.is_nan()));
        let warped: Vec<f64> = x.iter().map(|v| (v * 0.3).exp() + 10.0).collect();
        let w = kendall_tau(&warped, &y).unwrap();
        prop_assert!(w.to_bits() == t.to_bits() || (t.is_nan() && w.is_nan()));
        if !t.is_nan() {
            prop_assert!((-1.0..=1.0).contains(&t));
        }
    }

    #[test]
    fn n_at_k_is_non_increasing(seed in 0u64..10_000, n in 1usize..25) {
        let mut rng = seed::rng_from(seed);
        let p = random_vec(&mut rng, n, 5);
        let y = random_vec(&mut rng, n, 5);
        let ids: Vec<usize> = (0..n).collect();
        let mut prev = usize::MAX;
        for k in 1..=n {
            let r = n_at_k(&p, &y, &ids, k).unwrap();
            prop_assert!(r <= prev);
            prev = r;
        }
        prop_assert_eq!(prev, 1);
        prop_assert_eq!(precision_at_k(&p, &y, &ids, n).unwrap(), 1.0);
    }

    #[test]
    fn pair_losses_ignore_sample_order(seed in 0u64..10_000, n in 2usize..10) {
        let mut rng = seed::rng_from(seed);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = random_vec(&mut rng, n, 4);
        let perm: Vec<usize> = (0..n).rev().collect();
        let ps: Vec<f64> = perm.iter().map(|&i| s[i]).collect();
        let py: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        for (a, b) in [
            (scalar_loss(|t, v| hinge_pair_loss(t, v, &y, 0.1), &s), scalar_loss(|t, v| hinge_pair_loss(t, v, &py, 0.1), &ps)),
            (scalar_loss(|t, v| bce_pair_loss(t, v, &y), &s), scalar_loss(|t, v| bce_pair_loss(t, v, &py), &ps)),
            (scalar_loss(|t, v| mse_loss(t, v, &y), &s), scalar_loss(|t, v| mse_loss(t, v, &py), &ps)),
        ] {
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!(a >= 0.0);
        }
    }
}
