use std::collections::{HashSet, VecDeque};

use rand::seq::index;
use rand::Rng;

use crate::archspace::{ArchDag, CanonKey};
use crate::encoders::Predictor;
use crate::error::{Error, Result};
use crate::objectives::rank_desc;

use super::candidates::{Candidate, SearchSpace};

/// Anything that assigns a higher-is-better score to architectures.
pub trait Scorer {
    fn score(&self, archs: &[ArchDag]) -> Result<Vec<f64>>;
}

impl Scorer for Predictor {
    fn score(&self, archs: &[ArchDag]) -> Result<Vec<f64>> {
        if self.config().comparator {
            return Err(Error::Unsupported(
                "search needs a scoring predictor, not a comparator".into(),
            ));
        }
        self.scores(archs)
    }
}

impl<F: Fn(&[ArchDag]) -> Result<Vec<f64>>> Scorer for F {
    fn score(&self, archs: &[ArchDag]) -> Result<Vec<f64>> {
        self(archs)
    }
}

/// Architectures chosen by an inner search, best first.
#[derive(Clone, Debug)]
pub struct InnerPick {
    pub picks: Vec<(Candidate, f64)>,
    /// Fewer distinct candidates were available than requested.
    pub exhausted: bool,
}

fn top_k(pool: Vec<(Candidate, f64)>, k: usize) -> Vec<(Candidate, f64)> {
    let scores: Vec<f64> = pool.iter().map(|p| p.1).collect();
    let keys: Vec<&CanonKey> = pool.iter().map(|p| &p.0.key).collect();
    let order = rank_desc(&scores, &keys);
    let mut slots: Vec<Option<(Candidate, f64)>> = pool.into_iter().map(Some).collect();
    order
        .into_iter()
        .take(k)
        .map(|i| slots[i].take().unwrap())
        .collect()
}

fn score_all<S: Scorer + ?Sized>(scorer: &S, cands: &[Candidate]) -> Result<Vec<f64>> {
    if cands.is_empty() {
        return Ok(Vec::new());
    }
    let archs: Vec<ArchDag> = cands.iter().map(|c| c.arch.clone()).collect();
    scorer.score(&archs)
}

/// Samples `n` fresh architectures and keeps the `k` best-scored (ties by
/// canonical key). With `n == k` the scorer is not consulted.
pub fn inner_random<S: Scorer + ?Sized, R: Rng>(
    scorer: &S,
    space: &SearchSpace,
    n: usize,
    k: usize,
    exclude: &HashSet<CanonKey>,
    rng: &mut R,
) -> Result<InnerPick> {
    if k == 0 || n < k {
        return Err(Error::Config(format!(
            "inner random search needs n >= k >= 1, got n={n}, k={k}"
        )));
    }
    let (cands, exhausted) = space.sample_fresh(n, exclude, rng)?;
    if n == k {
        return Ok(InnerPick {
            picks: cands.into_iter().map(|c| (c, f64::NAN)).collect(),
            exhausted,
        });
    }
    let scores = score_all(scorer, &cands)?;
    Ok(InnerPick {
        picks: top_k(cands.into_iter().zip(scores).collect(), k),
        exhausted,
    })
}

/// Aging evolution driven by predicted scores. Returns the best `k` scored
/// architectures seen in this run (initial population included) that are
/// not in `exclude`.
#[allow(clippy::too_many_arguments)]
pub fn inner_ea<S: Scorer + ?Sized, R: Rng>(
    scorer: &S,
    space: &SearchSpace,
    n: usize,
    k: usize,
    pop: usize,
    tournament: usize,
    exclude: &HashSet<CanonKey>,
    rng: &mut R,
) -> Result<InnerPick> {
    if k == 0 || tournament == 0 || pop < tournament {
        return Err(Error::Config(format!(
            "inner evolution needs k >= 1 and pop >= tournament >= 1, got k={k}, pop={pop}, tournament={tournament}"
        )));
    }
    let (init, exhausted) = space.sample_fresh(pop, exclude, rng)?;
    let scores = score_all(scorer, &init)?;
    let mut population: VecDeque<(Candidate, f64)> = init.into_iter().zip(scores).collect();
    let mut seen: Vec<(Candidate, f64)> = population.iter().cloned().collect();
    let mut seen_keys: HashSet<CanonKey> = seen.iter().map(|p| p.0.key.clone()).collect();
    if !population.is_empty() {
        for _ in 0..n {
            let t = tournament.min(population.len());
            let parent = index::sample(rng, population.len(), t)
                .into_iter()
                .max_by(|&a, &b| {
                    let (pa, pb) = (&population[a], &population[b]);
                    pa.1.total_cmp(&pb.1).then_with(|| pb.0.key.cmp(&pa.0.key))
                })
                .unwrap();
            let child = space.mutate(&population[parent].0.arch, rng)?;
            let s = scorer.score(std::slice::from_ref(&child.arch))?[0];
            if !exclude.contains(&child.key) && seen_keys.insert(child.key.clone()) {
                seen.push((child.clone(), s));
            }
            population.push_back((child, s));
            if population.len() > pop {
                population.pop_front();
            }
        }
    }
    Ok(InnerPick {
        picks: top_k(seen, k),
        exhausted,
    })
}
