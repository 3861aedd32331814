use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::archspace::{SpaceKind, SpaceSpec, Wiring};
use crate::error::{Error, Result};

/// Directed edge `src -> dst`. For OOE cells `slot` numbers the incoming
/// edges of `dst` and `op` is the edge operation; OON edges use slot 0 and the
/// `none` token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub dst: usize,
    pub slot: usize,
    pub src: usize,
    pub op: usize,
}

/// A single cell: nodes `0..num_nodes` in topological order, inputs first.
#[derive(Clone)]
pub struct ArchDag {
    space: Arc<SpaceSpec>,
    num_nodes: usize,
    node_ops: Vec<usize>,
    edges: Vec<Edge>,
}

impl ArchDag {
    /// Builds and validates an OON cell from per-node operations and
    /// `(src, dst)` pairs.
    pub fn oon(
        space: Arc<SpaceSpec>,
        node_ops: Vec<usize>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        if space.kind != SpaceKind::Oon {
            return Err(Error::InvalidArch(format!(
                "{} is not an OON space",
                space.id
            )));
        }
        let none = space.none_token();
        let edges = edges
            .iter()
            .map(|&(src, dst)| Edge {
                dst,
                slot: 0,
                src,
                op: none,
            })
            .collect();
        Self::from_parts(space, node_ops.len(), node_ops, edges)
    }

    /// Like [`ArchDag::oon`], with operations given by name.
    pub fn oon_named(
        space: Arc<SpaceSpec>,
        ops: &[&str],
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let ops = ops
            .iter()
            .map(|o| {
                space
                    .op_index(o)
                    .ok_or_else(|| Error::InvalidArch(format!("unknown op `{o}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::oon(space, ops, edges)
    }

    /// Builds and validates an OOE cell with `num_nodes` nodes.
    pub fn ooe(space: Arc<SpaceSpec>, num_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        if space.kind != SpaceKind::Ooe {
            return Err(Error::InvalidArch(format!(
                "{} is not an OOE space",
                space.id
            )));
        }
        Self::from_parts(space, num_nodes, Vec::new(), edges)
    }

    pub(crate) fn from_parts(
        space: Arc<SpaceSpec>,
        num_nodes: usize,
        node_ops: Vec<usize>,
        mut edges: Vec<Edge>,
    ) -> Result<Self> {
        edges.sort_unstable();
        let dag = ArchDag {
            space,
            num_nodes,
            node_ops,
            edges,
        };
        dag.validate()?;
        Ok(dag)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(
        space: Arc<SpaceSpec>,
        num_nodes: usize,
        node_ops: Vec<usize>,
        mut edges: Vec<Edge>,
    ) -> Self {
        edges.sort_unstable();
        ArchDag {
            space,
            num_nodes,
            node_ops,
            edges,
        }
    }

    pub fn space(&self) -> &Arc<SpaceSpec> {
        &self.space
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Per-node operations (OON only; empty for OOE cells).
    pub fn node_ops(&self) -> &[usize] {
        &self.node_ops
    }

    /// Edges sorted by `(dst, slot, src, op)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn in_edges(&self, dst: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.dst == dst)
    }

    /// Index of the node read as the cell output.
    pub fn out_index(&self) -> usize {
        self.num_nodes - 1
    }

    /// Non-input nodes without outgoing edges.
    pub fn loose_ends(&self) -> Vec<usize> {
        let mut has_succ = vec![false; self.num_nodes];
        for e in &self.edges {
            has_succ[e.src] = true;
        }
        (self.space.num_inputs..self.num_nodes)
            .filter(|&n| !has_succ[n])
            .collect()
    }

    /// Nodes whose label may be permuted by isomorphisms.
    pub fn internal_nodes(&self) -> std::ops::Range<usize> {
        let end = if self.space.output_node {
            self.num_nodes - 1
        } else {
            self.num_nodes
        };
        self.space.num_inputs..end
    }

    /// Length of the longest input-to-output path, in edges.
    pub fn longest_path(&self) -> usize {
        let mut depth = vec![0usize; self.num_nodes];
        for e in &self.edges {
            depth[e.dst] = depth[e.dst].max(depth[e.src] + 1);
        }
        depth.into_iter().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &*self.space;
        let v = self.num_nodes;
        let bad = |m: String| Err(Error::InvalidArch(m));
        if v < s.num_inputs + 1 || v > s.max_nodes {
            return bad(format!(
                "{v} nodes outside {}..={}",
                s.num_inputs + 1,
                s.max_nodes
            ));
        }
        for e in &self.edges {
            if e.src >= e.dst || e.dst >= v {
                return bad(format!(
                    "edge {}->{} breaks topological order",
                    e.src, e.dst
                ));
            }
            if e.dst < s.num_inputs {
                return bad(format!("edge into input node {}", e.dst));
            }
        }
        match s.kind {
            SpaceKind::Oon => self.validate_oon(),
            SpaceKind::Ooe => self.validate_ooe(),
        }
    }

    fn validate_oon(&self) -> Result<()> {
        let s = &*self.space;
        let v = self.num_nodes;
        let bad = |m: String| Err(Error::InvalidArch(m));
        if self.node_ops.len() != v {
            return bad(format!("{} node ops for {v} nodes", self.node_ops.len()));
        }
        for (i, &op) in self.node_ops.iter().enumerate() {
            let want = if i < s.num_inputs {
                Some(s.input_token())
            } else if i == v - 1 {
                Some(s.output_token())
            } else {
                None
            };
            match want {
                Some(w) if op != w => return bad(format!("node {i} must be `{}`", s.op_vocab[w])),
                None if op >= s.vocab_size() || s.is_reserved(op) => {
                    return bad(format!("node {i} has invalid op {op}"))
                }
                _ => {}
            }
        }
        if self.edges.len() > s.max_edges {
            return bad(format!(
                "{} edges exceed the cap of {}",
                self.edges.len(),
                s.max_edges
            ));
        }
        let none = s.none_token();
        let mut has_pred = vec![false; v];
        let mut has_succ = vec![false; v];
        for w in self.edges.windows(2) {
            if (w[0].src, w[0].dst) == (w[1].src, w[1].dst) {
                return bad(format!("duplicate edge {}->{}", w[0].src, w[0].dst));
            }
        }
        for e in &self.edges {
            if e.slot != 0 || e.op != none {
                return bad("OON edges carry no operation".into());
            }
            has_pred[e.dst] = true;
            has_succ[e.src] = true;
        }
        for n in 0..v {
            if n >= s.num_inputs && !has_pred[n] {
                return bad(format!("node {n} is unreachable from the input"));
            }
            if n < v - 1 && !has_succ[n] {
                return bad(format!("node {n} does not reach the output"));
            }
        }
        Ok(())
    }

    fn validate_ooe(&self) -> Result<()> {
        let s = &*self.space;
        let v = self.num_nodes;
        let bad = |m: String| Err(Error::InvalidArch(m));
        if !self.node_ops.is_empty() {
            return bad("OOE cells carry no node operations".into());
        }
        for e in &self.edges {
            if e.op >= s.vocab_size() || s.is_reserved(e.op) {
                return bad(format!("edge {}->{} has invalid op {}", e.src, e.dst, e.op));
            }
        }
        match s.wiring {
            Wiring::Complete => {
                if v != s.max_nodes {
                    return bad(format!("complete cells have exactly {} nodes", s.max_nodes));
                }
                let mut k = 0;
                for dst in s.num_inputs..v {
                    for src in 0..dst {
                        let e = self.edges.get(k);
                        if e.map(|e| (e.dst, e.slot, e.src)) != Some((dst, 0, src)) {
                            return bad(format!("missing or extra edge at {src}->{dst}"));
                        }
                        k += 1;
                    }
                }
                if k != self.edges.len() {
                    return bad("extra edges in a complete cell".into());
                }
            }
            Wiring::FixedInDegree => {
                if v != s.max_nodes {
                    return bad(format!("cells have exactly {} nodes", s.max_nodes));
                }
                let nd = s.max_in_degree;
                if self.edges.len() != nd * (v - s.num_inputs) {
                    return bad(format!("every node needs exactly {nd} incoming edges"));
                }
                for (k, e) in self.edges.iter().enumerate() {
                    if e.dst != s.num_inputs + k / nd || e.slot != k % nd {
                        return bad(format!("node {} has a malformed slot list", e.dst));
                    }
                }
            }
            Wiring::Free => {
                if self.edges.len() > s.max_edges {
                    return bad(format!(
                        "{} edges exceed the cap of {}",
                        self.edges.len(),
                        s.max_edges
                    ));
                }
                for e in &self.edges {
                    if e.slot >= s.max_in_degree {
                        return bad(format!("slot {} out of range", e.slot));
                    }
                }
            }
        }
        Ok(())
    }

    /// Flat integer serialization; equal keys mean identical labelled cells.
    pub fn key(&self) -> Vec<u32> {
        let mut k = Vec::with_capacity(1 + self.node_ops.len() + 4 * self.edges.len());
        k.push(self.num_nodes as u32);
        k.extend(self.node_ops.iter().map(|&o| o as u32));
        for e in &self.edges {
            k.extend([e.dst as u32, e.slot as u32, e.src as u32, e.op as u32]);
        }
        k
    }

    /// Adjacency as sorted `(dst, src)` pairs.
    pub fn adjacency_pairs(&self) -> Vec<(usize, usize)> {
        let mut p: Vec<_> = self.edges.iter().map(|e| (e.dst, e.src)).collect();
        p.dedup();
        p
    }
}

impl PartialEq for ArchDag {
    fn eq(&self, other: &Self) -> bool {
        self.space.id == other.space.id
            && self.num_nodes == other.num_nodes
            && self.node_ops == other.node_ops
            && self.edges == other.edges
    }
}

impl Eq for ArchDag {}

impl Hash for ArchDag {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.space.id.hash(state);
        self.key().hash(state);
    }
}

impl fmt::Debug for ArchDag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let voc = &self.space.op_vocab;
        let mut d = f.debug_struct("ArchDag");
        d.field("space", &self.space.id)
            .field("nodes", &self.num_nodes);
        if !self.node_ops.is_empty() {
            let ops: Vec<&str> = self.node_ops.iter().map(|&o| voc[o].as_str()).collect();
            d.field("ops", &ops);
            d.field("edges", &self.adjacency_pairs());
        } else {
            let edges: Vec<String> = self
                .edges
                .iter()
                .map(|e| format!("{}->{}#{}:{}", e.src, e.dst, e.slot, voc[e.op]))
                .collect();
            d.field("edges", &edges);
        }
        d.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nb101() -> Arc<SpaceSpec> {
        Arc::new(SpaceSpec::nb101())
    }

    #[test]
    fn valid_chain() {
        let a = ArchDag::oon_named(nb101(), &["input", "conv3x3", "output"], &[(0, 1), (1, 2)])
            .unwrap();
        assert_eq!(a.longest_path(), 2);
        assert_eq!(a.internal_nodes(), 1..2);
    }

    #[test]
    fn rejects_dangling_and_backward_edges() {
        let s = nb101();
        // node 2 has no successor
        assert!(ArchDag::oon_named(
            s.clone(),
            &["input", "conv3x3", "conv1x1", "output"],
            &[(0, 1), (1, 3), (0, 2)]
        )
        .is_err());
        assert!(ArchDag::oon_named(
            s.clone(),
            &["input", "conv3x3", "output"],
            &[(0, 2), (2, 1)]
        )
        .is_err());
        // reserved op inside
        assert!(
            ArchDag::oon_named(s.clone(), &["input", "none", "output"], &[(0, 1), (1, 2)]).is_err()
        );
        // too many nodes
        let ops = [
            "input", "conv3x3", "conv3x3", "conv3x3", "conv3x3", "conv3x3", "conv3x3", "output",
        ];
        let edges: Vec<_> = (0..7).map(|i| (i, i + 1)).collect();
        assert!(ArchDag::oon_named(s, &ops, &edges).is_err());
    }

    #[test]
    fn edge_cap() {
        let s = nb101();
        let ops = [
            "input", "conv3x3", "conv3x3", "conv3x3", "conv3x3", "conv3x3", "output",
        ];
        let mut edges = vec![];
        for d in 1..7 {
            for src in 0..d {
                edges.push((src, d));
            }
        }
        assert!(matches!(
            ArchDag::oon_named(s, &ops, &edges),
            Err(Error::InvalidArch(_))
        ));
    }

    #[test]
    fn complete_ooe_cell() {
        let s = Arc::new(SpaceSpec::nb201());
        let op = s.op_index("conv3x3").unwrap();
        let mut edges = vec![];
        for dst in 1..4 {
            for src in 0..dst {
                edges.push(Edge {
                    dst,
                    slot: 0,
                    src,
                    op,
                });
            }
        }
        ArchDag::ooe(s.clone(), 4, edges.clone()).unwrap();
        edges.pop();
        assert!(ArchDag::ooe(s, 4, edges).is_err());
    }
}
