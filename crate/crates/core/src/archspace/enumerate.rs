use std::collections::BTreeMap;
use std::sync::Arc;

use crate::archspace::{canonical_key, canonicalize, ArchDag, Edge, SpaceKind, SpaceSpec, Wiring};
use crate::error::{Error, Result};

/// Labelled candidates beyond which enumeration is refused.
pub const MAX_ENUMERATION: u64 = 50_000_000;

/// Calls `f` with every vector `x` with `x[i] < radix[i]`.
fn odometer(radix: &[usize], mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if radix.contains(&0) {
        return Ok(());
    }
    let mut x = vec![0; radix.len()];
    loop {
        f(&x)?;
        let mut i = 0;
        loop {
            if i == x.len() {
                return Ok(());
            }
            x[i] += 1;
            if x[i] < radix[i] {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

fn too_big(space: &SpaceSpec, count: u64) -> Result<()> {
    if count > MAX_ENUMERATION {
        return Err(Error::Unsupported(format!(
            "{}: {count} labelled candidates exceed the enumeration limit",
            space.id
        )));
    }
    Ok(())
}

/// Every distinct cell (up to isomorphism) with exactly `v` nodes, as
/// canonical representatives sorted by canonical key.
pub fn enumerate_nodes(space: &Arc<SpaceSpec>, v: usize) -> Result<Vec<ArchDag>> {
    space.validate()?;
    let choices = space.op_choices();
    let ni = space.num_inputs;
    let mut found: BTreeMap<Vec<u32>, ArchDag> = BTreeMap::new();
    let mut keep = |a: ArchDag| -> Result<()> {
        let k = canonical_key(&a)?.0;
        if let std::collections::btree_map::Entry::Vacant(e) = found.entry(k) {
            e.insert(canonicalize(&a)?);
        }
        Ok(())
    };
    if v < ni + 1 || v > space.max_nodes {
        return Ok(Vec::new());
    }
    match (space.kind, space.wiring) {
        (SpaceKind::Oon, _) => {
            let pairs: Vec<(usize, usize)> =
                (ni..v).flat_map(|d| (0..d).map(move |s| (s, d))).collect();
            let internal = v - ni - 1;
            let labelled =
                (1u64 << pairs.len()).saturating_mul((choices.len() as u64).pow(internal as u32));
            too_big(space, labelled)?;
            let none = space.none_token();
            for mask in 0u64..(1 << pairs.len()) {
                if mask.count_ones() as usize > space.max_edges {
                    continue;
                }
                let edges: Vec<Edge> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &(src, dst))| Edge {
                        dst,
                        slot: 0,
                        src,
                        op: none,
                    })
                    .collect();
                let mut ops = vec![space.input_token(); ni];
                ops.extend(std::iter::repeat_n(choices[0], internal));
                ops.push(space.output_token());
                // structure check once per edge set
                if ArchDag::from_parts(space.clone(), v, ops.clone(), edges.clone()).is_err() {
                    continue;
                }
                odometer(&vec![choices.len(); internal], |x| {
                    for (j, &c) in x.iter().enumerate() {
                        ops[ni + j] = choices[c];
                    }
                    keep(ArchDag::from_parts_unchecked(
                        space.clone(),
                        v,
                        ops.clone(),
                        edges.clone(),
                    ))
                })?;
            }
        }
        (SpaceKind::Ooe, Wiring::Complete) => {
            if v != space.max_nodes {
                return Ok(Vec::new());
            }
            let pairs: Vec<(usize, usize)> =
                (ni..v).flat_map(|d| (0..d).map(move |s| (s, d))).collect();
            too_big(
                space,
                (choices.len() as u64).saturating_pow(pairs.len() as u32),
            )?;
            odometer(&vec![choices.len(); pairs.len()], |x| {
                let edges = pairs
                    .iter()
                    .zip(x)
                    .map(|(&(src, dst), &c)| Edge {
                        dst,
                        slot: 0,
                        src,
                        op: choices[c],
                    })
                    .collect();
                keep(ArchDag::from_parts_unchecked(
                    space.clone(),
                    v,
                    Vec::new(),
                    edges,
                ))
            })?;
        }
        (SpaceKind::Ooe, Wiring::FixedInDegree) => {
            if v != space.max_nodes {
                return Ok(Vec::new());
            }
            let nd = space.max_in_degree;
            let radix: Vec<usize> = (ni..v)
                .flat_map(|d| std::iter::repeat_n(d * choices.len(), nd))
                .collect();
            too_big(
                space,
                radix.iter().fold(1u64, |p, &r| p.saturating_mul(r as u64)),
            )?;
            odometer(&radix, |x| {
                let edges = x
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| Edge {
                        dst: ni + i / nd,
                        slot: i % nd,
                        src: c / choices.len(),
                        op: choices[c % choices.len()],
                    })
                    .collect();
                keep(ArchDag::from_parts_unchecked(
                    space.clone(),
                    v,
                    Vec::new(),
                    edges,
                ))
            })?;
        }
        (SpaceKind::Ooe, Wiring::Free) => {
            return Err(Error::Unsupported(format!(
                "{}: enumerating free-wired OOE cells",
                space.id
            )))
        }
    }
    Ok(found.into_values().collect())
}

/// [`enumerate_nodes`] over the space's whole node range.
pub fn enumerate_space(space: &Arc<SpaceSpec>) -> Result<Vec<ArchDag>> {
    let mut all = Vec::new();
    for v in space.node_range.0..=space.node_range.1 {
        all.extend(enumerate_nodes(space, v)?);
    }
    Ok(all)
}
