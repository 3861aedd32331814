//! Isomorphism tests and canonical forms by exhaustive relabelling.

use std::collections::HashSet;

use sha2::{Digest, Sha256};

use crate::archspace::{ArchDag, Edge, SpaceKind, Wiring};
use crate::error::{Error, Result};

/// Largest node count accepted by the brute-force routines.
pub const MAX_ISO_NODES: usize = 8;

/// Key of the canonical representative; equal iff the cells are isomorphic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonKey(pub Vec<u32>);

impl CanonKey {
    /// Stable 12-hex-digit identifier.
    pub fn short_id(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.0 {
            h.update(v.to_le_bytes());
        }
        hex::encode(&h.finalize()[..6])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

fn check_size(a: &ArchDag) -> Result<()> {
    if a.num_nodes() > MAX_ISO_NODES {
        return Err(Error::Size {
            nodes: a.num_nodes(),
            max: MAX_ISO_NODES,
        });
    }
    Ok(())
}

/// Calls `f` with every permutation of `0..k` (lexicographic order).
pub(crate) fn for_each_perm(k: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..k).collect();
    loop {
        f(&p);
        // next permutation
        let Some(i) = (1..k).rev().find(|&i| p[i - 1] < p[i]) else {
            return;
        };
        let j = (i..k).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Node map `old -> new` permuting only the internal nodes.
fn node_map(a: &ArchDag, perm: &[usize]) -> Vec<usize> {
    let internal = a.internal_nodes();
    let mut map: Vec<usize> = (0..a.num_nodes()).collect();
    for (j, &p) in perm.iter().enumerate() {
        map[internal.start + j] = internal.start + p;
    }
    map
}

/// Relabelled parts, or `None` when the map breaks topological order.
/// Slotted OOE edges are renumbered by sorted `(src, op)` within each node.
fn relabel(a: &ArchDag, map: &[usize]) -> Option<(Vec<usize>, Vec<Edge>)> {
    let mut ops = vec![0; a.node_ops().len()];
    for (i, &o) in a.node_ops().iter().enumerate() {
        ops[map[i]] = o;
    }
    let mut edges = Vec::with_capacity(a.num_edges());
    for e in a.edges() {
        let (src, dst) = (map[e.src], map[e.dst]);
        if src >= dst {
            return None;
        }
        edges.push(Edge {
            dst,
            slot: 0,
            src,
            op: e.op,
        });
    }
    if a.space().kind == SpaceKind::Ooe && a.space().wiring != Wiring::Complete {
        edges.sort_unstable_by_key(|e| (e.dst, e.src, e.op));
        for i in 1..edges.len() {
            if edges[i].dst == edges[i - 1].dst {
                edges[i].slot = edges[i - 1].slot + 1;
            }
        }
    } else {
        edges.sort_unstable();
    }
    Some((ops, edges))
}

fn key_of(num_nodes: usize, ops: &[usize], edges: &[Edge]) -> Vec<u32> {
    let mut k = Vec::with_capacity(1 + ops.len() + 4 * edges.len());
    k.push(num_nodes as u32);
    k.extend(ops.iter().map(|&o| o as u32));
    for e in edges {
        k.extend([e.dst as u32, e.slot as u32, e.src as u32, e.op as u32]);
    }
    k
}

/// Representative with the lexicographically smallest key among all
/// topologically ordered relabellings of the internal nodes.
pub fn canonicalize(a: &ArchDag) -> Result<ArchDag> {
    check_size(a)?;
    let mut best: Option<(Vec<u32>, Vec<usize>, Vec<Edge>)> = None;
    for_each_perm(a.internal_nodes().len(), |perm| {
        let map = node_map(a, perm);
        if let Some((ops, edges)) = relabel(a, &map) {
            let key = key_of(a.num_nodes(), &ops, &edges);
            if best.as_ref().is_none_or(|b| key < b.0) {
                best = Some((key, ops, edges));
            }
        }
    });
    let (_, ops, edges) = best.expect("identity relabelling is always valid");
    Ok(ArchDag::from_parts_unchecked(
        a.space().clone(),
        a.num_nodes(),
        ops,
        edges,
    ))
}

pub fn canonical_key(a: &ArchDag) -> Result<CanonKey> {
    Ok(CanonKey(canonicalize(a)?.key()))
}

/// Every distinct labelled cell isomorphic to `a` (including `a` itself,
/// with OOE slots normalized), `a` first.
pub fn isomorphic_variants(a: &ArchDag) -> Result<Vec<ArchDag>> {
    check_size(a)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for_each_perm(a.internal_nodes().len(), |perm| {
        let map = node_map(a, perm);
        if let Some((ops, edges)) = relabel(a, &map) {
            if seen.insert(key_of(a.num_nodes(), &ops, &edges)) {
                out.push(ArchDag::from_parts_unchecked(
                    a.space().clone(),
                    a.num_nodes(),
                    ops,
                    edges,
                ));
            }
        }
    });
    Ok(out)
}

/// Brute-force isomorphism test. Searches for a bijection of the internal
/// nodes preserving operations and edges (as multisets of `(src, op)` per
/// destination for OOE cells). Independent of [`canonicalize`].
pub fn is_isomorphic(a: &ArchDag, b: &ArchDag) -> Result<bool> {
    check_size(a)?;
    check_size(b)?;
    if a.space().id != b.space().id
        || a.num_nodes() != b.num_nodes()
        || a.num_edges() != b.num_edges()
    {
        return Ok(false);
    }
    let v = a.num_nodes();
    let ooe = a.space().kind == SpaceKind::Ooe;
    let incoming = |d: &ArchDag, map: &dyn Fn(usize) -> usize| {
        let mut inc: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v];
        for e in d.edges() {
            inc[map(e.dst)].push((map(e.src), if ooe { e.op } else { 0 }));
        }
        for l in &mut inc {
            l.sort_unstable();
        }
        inc
    };
    let target = incoming(b, &|i| i);
    let mut found = false;
    for_each_perm(a.internal_nodes().len(), |perm| {
        if found {
            return;
        }
        let map = node_map(a, perm);
        let ops_match = a
            .node_ops()
            .iter()
            .enumerate()
            .all(|(i, &o)| b.node_ops()[map[i]] == o);
        if ops_match && incoming(a, &|i| map[i]) == target {
            found = true;
        }
    });
    Ok(found)
}
