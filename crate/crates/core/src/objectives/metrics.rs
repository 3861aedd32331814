use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tie handling for Kendall's tau.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauVariant {
    /// `(C - D) / n0`.
    A,
    /// `(C - D) / sqrt((n0 - n1)(n0 - n2))`.
    #[default]
    B,
}

/// Integer pair statistics underlying tau.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCounts {
    /// Concordant minus discordant pairs.
    pub s: i64,
    pub pairs: i64,
    /// Pairs tied in the first argument.
    pub ties_x: i64,
    /// Pairs tied in the second argument.
    pub ties_y: i64,
}

impl PairCounts {
    /// NaN when the denominator vanishes (e.g. one argument is constant).
    pub fn tau(&self, variant: TauVariant) -> f64 {
        let denom = match variant {
            TauVariant::A => self.pairs as f64,
            TauVariant::B => {
                (((self.pairs - self.ties_x) as f64) * ((self.pairs - self.ties_y) as f64)).sqrt()
            }
        };
        if denom == 0.0 {
            f64::NAN
        } else {
            self.s as f64 / denom
        }
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::shape("kendall_tau", &[x.len()], &[y.len()]));
    }
    if x.len() < 2 {
        return Err(Error::Empty("kendall_tau needs at least two items".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Numerics("kendall_tau got NaN".into()));
    }
    Ok(())
}

fn same(a: f64, b: f64) -> bool {
    a.total_cmp(&b).is_eq()
}

fn tied_pairs(sorted: impl Iterator<Item = bool>) -> i64 {
    // `sorted` yields whether each element equals its predecessor
    let (mut total, mut run) = (0i64, 1i64);
    for same in sorted {
        if same {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Knight's O(n log n) pair counts.
pub fn pair_counts(x: &[f64], y: &[f64]) -> Result<PairCounts> {
    check_pair(x, y)?;
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let ties_x = tied_pairs((1..n).map(|i| same(x[idx[i]], x[idx[i - 1]])));
    let ties_xy = tied_pairs(
        (1..n).map(|i| same(x[idx[i]], x[idx[i - 1]]) && same(y[idx[i]], y[idx[i - 1]])),
    );
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let swaps = merge_count(&mut ys);
    let ties_y = tied_pairs((1..n).map(|i| same(ys[i], ys[i - 1])));
    let pairs = (n as i64) * (n as i64 - 1) / 2;
    Ok(PairCounts {
        s: pairs - ties_x - ties_y + ties_xy - 2 * swaps,
        pairs,
        ties_x,
        ties_y,
    })
}

/// Sorts `v` ascending, returning the number of strict inversions.
fn merge_count(v: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]).is_lt() {
            swaps += (mid - i) as i64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

/// O(n²) pair enumeration, the reference for [`pair_counts`].
pub fn pair_counts_brute(x: &[f64], y: &[f64]) -> Result<PairCounts> {
    check_pair(x, y)?;
    let mut c = PairCounts {
        s: 0,
        pairs: 0,
        ties_x: 0,
        ties_y: 0,
    };
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            c.pairs += 1;
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            c.s += dx * dy;
            c.ties_x += (dx == 0) as i64;
            c.ties_y += (dy == 0) as i64;
        }
    }
    Ok(c)
}

/// Kendall's tau-b (tie-corrected); NaN when either argument is constant.
pub fn kendall_tau(pred: &[f64], truth: &[f64]) -> Result<f64> {
    Ok(pair_counts(pred, truth)?.tau(TauVariant::B))
}

pub fn kendall_tau_variant(pred: &[f64], truth: &[f64], variant: TauVariant) -> Result<f64> {
    Ok(pair_counts(pred, truth)?.tau(variant))
}

/// Indices sorted by `v` descending, ties broken by `ids` ascending.
pub fn rank_desc<T: Ord>(v: &[f64], ids: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| match v[b].total_cmp(&v[a]) {
        Ordering::Equal => ids[a].cmp(&ids[b]),
        o => o,
    });
    idx
}

fn check_k<T>(pred: &[f64], truth: &[f64], ids: &[T], k: usize) -> Result<()> {
    if pred.len() != truth.len() || pred.len() != ids.len() {
        return Err(Error::shape(
            "top_k",
            &[pred.len(), truth.len()],
            &[ids.len()],
        ));
    }
    if k == 0 || k > pred.len() {
        return Err(Error::Range(format!("K={k} outside 1..={}", pred.len())));
    }
    Ok(())
}

/// Best true rank (1 = best) among the top-`k` predicted items.
pub fn n_at_k<T: Ord>(pred: &[f64], truth: &[f64], ids: &[T], k: usize) -> Result<usize> {
    check_k(pred, truth, ids, k)?;
    let mut true_rank = vec![0; truth.len()];
    for (r, i) in rank_desc(truth, ids).into_iter().enumerate() {
        true_rank[i] = r + 1;
    }
    Ok(rank_desc(pred, ids)[..k]
        .iter()
        .map(|&i| true_rank[i])
        .min()
        .unwrap())
}

/// `|topK(pred) ∩ topK(truth)| / K`.
pub fn precision_at_k<T: Ord>(pred: &[f64], truth: &[f64], ids: &[T], k: usize) -> Result<f64> {
    check_k(pred, truth, ids, k)?;
    let mut in_true = vec![false; truth.len()];
    for i in &rank_desc(truth, ids)[..k] {
        in_true[*i] = true;
    }
    let hits = rank_desc(pred, ids)[..k]
        .iter()
        .filter(|&&i| in_true[i])
        .count();
    Ok(hits as f64 / k as f64)
}
