use std::collections::{HashSet, VecDeque};

use rand::seq::index;

use crate::error::{Error, Result};
use crate::seed;

use super::candidates::{Candidate, Evaluator, SearchSpace};
use super::trace::{SearchTrace, Tracker};

/// Longest mutation walk regularized evolution takes looking for an
/// unevaluated architecture before declaring the space exhausted.
pub const NOVELTY_WALK_LIMIT: usize = 10_000;

const RS_CHUNK: usize = 64;

/// Evaluates up to `count` uniform fresh architectures as stage 1; returns
/// whether the space ran out.
pub(crate) fn uniform_stage(
    t: &mut Tracker,
    space: &SearchSpace,
    count: usize,
    seed: u64,
) -> Result<bool> {
    let mut rng = seed::rng(seed, "random-search", 0);
    let mut done = 0;
    while done < count && !t.done() {
        let (batch, exhausted) =
            space.sample_fresh(RS_CHUNK.min(count - done), &t.seen, &mut rng)?;
        for c in &batch {
            if t.done() {
                break;
            }
            t.evaluate(1, c, f64::NAN)?;
            done += 1;
        }
        if exhausted {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Uniform sampling of distinct canonical forms, all evaluated.
pub fn random_search_baseline(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    budget: usize,
    seed: u64,
    stop_on: Option<&HashSet<String>>,
) -> Result<SearchTrace> {
    if budget == 0 {
        return Err(Error::Config(
            "random search budget must be positive".into(),
        ));
    }
    let mut t = Tracker::new(evaluator, budget, stop_on);
    let exhausted = uniform_stage(&mut t, space, budget, seed)?;
    let mut trace = t.trace;
    trace.exhausted = exhausted;
    Ok(trace)
}

/// Aging evolution on true performance. A mutant whose canonical form was
/// already evaluated is mutated again (a random walk starting at the parent)
/// until an unevaluated architecture is reached, so every iteration costs
/// exactly one evaluation. Warm-up rows are stage 1, evolved rows stage 2.
pub fn regularized_evolution_baseline(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    budget: usize,
    pop: usize,
    tournament: usize,
    seed: u64,
    stop_on: Option<&HashSet<String>>,
) -> Result<SearchTrace> {
    if tournament == 0 || pop < tournament || budget < pop {
        return Err(Error::Config(format!(
            "regularized evolution needs budget >= pop >= tournament >= 1, got {budget}, {pop}, {tournament}"
        )));
    }
    let mut t = Tracker::new(evaluator, budget, stop_on);
    let mut rng = seed::rng(seed, "evolution", 0);
    let (init, exhausted) = space.sample_fresh(pop, &t.seen, &mut rng)?;
    let mut population: VecDeque<(Candidate, f64)> = VecDeque::with_capacity(pop + 1);
    for c in init {
        if t.done() {
            break;
        }
        let perf = t.evaluate(1, &c, f64::NAN)?;
        population.push_back((c, perf));
    }
    let mut exhausted = exhausted;
    while !t.done() && !population.is_empty() {
        let parent = index::sample(&mut rng, population.len(), tournament.min(population.len()))
            .into_iter()
            .max_by(|&a, &b| {
                let (pa, pb) = (&population[a], &population[b]);
                pa.1.total_cmp(&pb.1).then_with(|| pb.0.key.cmp(&pa.0.key))
            })
            .unwrap();
        let mut child = space.mutate(&population[parent].0.arch, &mut rng)?;
        let mut steps = 1;
        while t.seen.contains(&child.key) && steps < NOVELTY_WALK_LIMIT {
            child = space.mutate(&child.arch, &mut rng)?;
            steps += 1;
        }
        if t.seen.contains(&child.key) {
            exhausted = true;
            break;
        }
        let perf = t.evaluate(2, &child, f64::NAN)?;
        population.push_back((child, perf));
        if population.len() > pop {
            population.pop_front();
        }
    }
    let mut trace = t.trace;
    trace.exhausted = exhausted;
    Ok(trace)
}
