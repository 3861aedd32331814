use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Pairwise preference oracle. `compare(pairs)[i] > 0` means `pairs[i].0`
/// ranks above `pairs[i].1`.
pub trait Comparator {
    fn compare(&mut self, pairs: &[(usize, usize)]) -> Result<Vec<f64>>;
}

impl<F> Comparator for F
where
    F: FnMut(&[(usize, usize)]) -> Result<Vec<f64>>,
{
    fn compare(&mut self, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        self(pairs)
    }
}

/// Randomized quicksort of items `0..n`, best first. Every partition step
/// queries the comparator once with all `(item, pivot)` pairs. Fails with a
/// `Sort` error if more than `n²` comparisons are needed.
pub fn comparator_sort<C: Comparator>(n: usize, cmp: &mut C, rng_seed: u64) -> Result<Vec<usize>> {
    let mut rng = seed::rng(rng_seed, "quicksort", 0);
    let bound = n * n;
    let mut used = 0usize;
    let mut out = Vec::with_capacity(n);
    // stack of segments still to sort, processed best-first
    let mut stack: Vec<Vec<usize>> = vec![(0..n).collect()];
    while let Some(seg) = stack.pop() {
        if seg.len() <= 1 {
            out.extend(seg);
            continue;
        }
        let p = seg[rng.random_range(0..seg.len())];
        let rest: Vec<usize> = seg.into_iter().filter(|&i| i != p).collect();
        let pairs: Vec<(usize, usize)> = rest.iter().map(|&i| (i, p)).collect();
        used += pairs.len();
        if used > bound {
            return Err(Error::Sort(bound));
        }
        let s = cmp.compare(&pairs)?;
        if s.len() != pairs.len() {
            return Err(Error::shape("comparator_sort", &[s.len()], &[pairs.len()]));
        }
        let (mut above, mut below) = (Vec::new(), Vec::new());
        for (&i, &v) in rest.iter().zip(&s) {
            if v.is_nan() {
                return Err(Error::Numerics("comparator returned NaN".into()));
            }
            if v > 0.0 {
                above.push(i);
            } else {
                below.push(i);
            }
        }
        stack.push(below);
        stack.push(vec![p]);
        stack.push(above);
    }
    Ok(out)
}

/// Scores `n - position` so that downstream rank metrics can consume a
/// sorted order.
pub fn order_to_scores(order: &[usize]) -> Vec<f64> {
    let mut s = vec![0.0; order.len()];
    for (pos, &i) in order.iter().enumerate() {
        s[i] = (order.len() - pos) as f64;
    }
    s
}
