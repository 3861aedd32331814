use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::archspace::{ArchDag, Edge, SpaceKind, SpaceSpec, Wiring};
use crate::error::{Error, Result};
use crate::seed;

/// Attempts before the OON rejection sampler gives up.
const MAX_SAMPLE_ATTEMPTS: usize = 100_000;
/// Attempts before a mutation gives up.
pub const MAX_MUTATION_ATTEMPTS: usize = 100;

/// Draws a valid cell using the seeded stream `seed`.
pub fn sample_random(space: &Arc<SpaceSpec>, seed: u64) -> Result<ArchDag> {
    sample_with(space, &mut seed::rng_from(seed))
}

/// Draws a valid cell. OON cells pick a node count uniformly from the
/// space's range and keep each forward edge with probability 1/2, rejecting
/// invalid graphs; OOE cells draw every edge operation (and, for fixed
/// in-degree cells, every source) uniformly.
pub fn sample_with<R: Rng>(space: &Arc<SpaceSpec>, rng: &mut R) -> Result<ArchDag> {
    space.validate()?;
    let choices = space.op_choices();
    let ni = space.num_inputs;
    match (space.kind, space.wiring) {
        (SpaceKind::Oon, _) => {
            for _ in 0..MAX_SAMPLE_ATTEMPTS {
                let v = rng.random_range(space.node_range.0..=space.node_range.1);
                let mut edges = Vec::new();
                for dst in ni..v {
                    for src in 0..dst {
                        if rng.random_bool(0.5) {
                            edges.push((src, dst));
                        }
                    }
                }
                let mut ops = vec![space.input_token(); ni];
                ops.extend((ni..v - 1).map(|_| *choices.choose(rng).unwrap()));
                ops.push(space.output_token());
                if let Ok(a) = ArchDag::oon(space.clone(), ops, &edges) {
                    return Ok(a);
                }
            }
            Err(Error::Space(format!(
                "{}: no valid cell after {MAX_SAMPLE_ATTEMPTS} draws",
                space.id
            )))
        }
        (SpaceKind::Ooe, Wiring::Complete) => {
            let v = space.max_nodes;
            let mut edges = Vec::new();
            for dst in ni..v {
                for src in 0..dst {
                    edges.push(Edge {
                        dst,
                        slot: 0,
                        src,
                        op: *choices.choose(rng).unwrap(),
                    });
                }
            }
            ArchDag::ooe(space.clone(), v, edges)
        }
        (SpaceKind::Ooe, Wiring::FixedInDegree) => {
            let v = space.max_nodes;
            let mut edges = Vec::new();
            for dst in ni..v {
                for slot in 0..space.max_in_degree {
                    let src = rng.random_range(0..dst);
                    edges.push(Edge {
                        dst,
                        slot,
                        src,
                        op: *choices.choose(rng).unwrap(),
                    });
                }
            }
            ArchDag::ooe(space.clone(), v, edges)
        }
        (SpaceKind::Ooe, Wiring::Free) => Err(Error::Unsupported(format!(
            "{}: sampling free-wired OOE cells",
            space.id
        ))),
    }
}

/// Applies exactly one random change: either an operation is redrawn to a
/// different one, or one edge is rewired to a different source. Invalid
/// results are retried; after [`MAX_MUTATION_ATTEMPTS`] failures a
/// `Mutation` error is returned.
pub fn mutate<R: Rng>(arch: &ArchDag, rng: &mut R) -> Result<ArchDag> {
    let space = arch.space();
    let choices = space.op_choices();
    let oon = space.kind == SpaceKind::Oon;
    let can_rewire = space.wiring != Wiring::Complete && arch.num_edges() > 0;
    for _ in 0..MAX_MUTATION_ATTEMPTS {
        let mut ops = arch.node_ops().to_vec();
        let mut edges = arch.edges().to_vec();
        if !can_rewire || rng.random_bool(0.5) {
            // redraw one operation
            let Some(slot) = (if oon {
                let internal = arch.internal_nodes();
                (!internal.is_empty()).then(|| rng.random_range(internal))
            } else {
                (!edges.is_empty()).then(|| rng.random_range(0..edges.len()))
            }) else {
                continue;
            };
            let cur = if oon { ops[slot] } else { edges[slot].op };
            let others: Vec<usize> = choices.iter().copied().filter(|&o| o != cur).collect();
            let Some(&new) = others.choose(rng) else {
                continue;
            };
            if oon {
                ops[slot] = new;
            } else {
                edges[slot].op = new;
            }
        } else {
            let k = rng.random_range(0..edges.len());
            let e = edges[k];
            let taken: Vec<usize> = if oon {
                arch.in_edges(e.dst).map(|x| x.src).collect()
            } else {
                vec![e.src]
            };
            let options: Vec<usize> = (0..e.dst).filter(|s| !taken.contains(s)).collect();
            let Some(&src) = options.choose(rng) else {
                continue;
            };
            edges[k].src = src;
        }
        if let Ok(m) = ArchDag::from_parts(space.clone(), arch.num_nodes(), ops, edges) {
            return Ok(m);
        }
    }
    Err(Error::Mutation(MAX_MUTATION_ATTEMPTS))
}

/// Adds or removes one edge of a free-wired OON cell, keeping the result
/// valid. Unlike [`mutate`] this changes the edge count, connecting cells
/// with different in-degree profiles.
pub fn toggle_edge<R: Rng>(arch: &ArchDag, rng: &mut R) -> Result<ArchDag> {
    let space = arch.space();
    if space.kind != SpaceKind::Oon || space.wiring != Wiring::Free {
        return Err(Error::Unsupported(format!(
            "edge toggling needs a free-wired OON space, not {}",
            space.id
        )));
    }
    let v = arch.num_nodes();
    for _ in 0..MAX_MUTATION_ATTEMPTS {
        let dst = rng.random_range(1..v);
        let src = rng.random_range(0..dst);
        let mut pairs: Vec<(usize, usize)> = arch.edges().iter().map(|e| (e.src, e.dst)).collect();
        match pairs.iter().position(|&p| p == (src, dst)) {
            Some(i) => {
                pairs.remove(i);
            }
            None => pairs.push((src, dst)),
        }
        if let Ok(m) = ArchDag::oon(space.clone(), arch.node_ops().to_vec(), &pairs) {
            return Ok(m);
        }
    }
    Err(Error::Mutation(MAX_MUTATION_ATTEMPTS))
}
