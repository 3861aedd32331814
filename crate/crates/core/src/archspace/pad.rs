use std::sync::Arc;

use crate::archspace::{ArchDag, Edge, SpaceKind, SpaceSpec};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Zero-padded batch of cells from one space, ready for batched encoding.
#[derive(Clone, Debug)]
pub struct PaddedBatch {
    pub space: Arc<SpaceSpec>,
    pub size: usize,
    /// `[b, V, V]`, `adj[g][dst][src] = 1` for every edge `src -> dst`.
    pub adj: Tensor,
    /// OON: `b * V` node operations, `none` on padded nodes. Empty for OOE.
    pub node_ops: Vec<usize>,
    /// OOE: `b * n_d * V * V` edge operations indexed `(g, slot, dst, src)`,
    /// `none` where there is no edge. Empty for OON.
    pub edge_ops: Vec<usize>,
    pub num_nodes: Vec<usize>,
    pub out_index: Vec<usize>,
    pub loose_ends: Vec<Vec<usize>>,
}

pub fn pad_batch(archs: &[ArchDag]) -> Result<PaddedBatch> {
    let first = archs
        .first()
        .ok_or_else(|| Error::Empty("pad_batch needs at least one architecture".into()))?;
    let space = first.space().clone();
    if let Some(a) = archs.iter().find(|a| a.space().id != space.id) {
        return Err(Error::Space(format!(
            "mixed spaces {} and {}",
            space.id,
            a.space().id
        )));
    }
    let (b, v, nd) = (archs.len(), space.max_nodes, space.slots());
    let none = space.none_token();
    let mut adj = vec![0.0; b * v * v];
    let oon = space.kind == SpaceKind::Oon;
    let mut node_ops = if oon { vec![none; b * v] } else { Vec::new() };
    let mut edge_ops = if oon {
        Vec::new()
    } else {
        vec![none; b * nd * v * v]
    };
    for (g, a) in archs.iter().enumerate() {
        if oon {
            node_ops[g * v..g * v + a.num_nodes()].copy_from_slice(a.node_ops());
        }
        for e in a.edges() {
            adj[(g * v + e.dst) * v + e.src] = 1.0;
            if !oon {
                edge_ops[((g * nd + e.slot) * v + e.dst) * v + e.src] = e.op;
            }
        }
    }
    Ok(PaddedBatch {
        space,
        size: b,
        adj: Tensor::from_parts(&[b, v, v], adj),
        node_ops,
        edge_ops,
        num_nodes: archs.iter().map(ArchDag::num_nodes).collect(),
        out_index: archs.iter().map(ArchDag::out_index).collect(),
        loose_ends: archs.iter().map(ArchDag::loose_ends).collect(),
    })
}

impl PaddedBatch {
    pub fn max_nodes(&self) -> usize {
        self.space.max_nodes
    }

    /// `[b, |vocab|, V, V]` edge counts per operation (OOE), so that
    /// `Σ_o gate_o ⊙ (A_o X)` sums one gated message per edge.
    pub fn op_adjacency(&self) -> Tensor {
        let (b, v, nd, k) = (
            self.size,
            self.max_nodes(),
            self.space.slots(),
            self.space.vocab_size(),
        );
        let none = self.space.none_token();
        let mut out = vec![0.0; b * k * v * v];
        for g in 0..b {
            for s in 0..nd {
                for cell in 0..v * v {
                    let op = self.edge_ops[(g * nd + s) * v * v + cell];
                    if op != none {
                        out[(g * k + op) * v * v + cell] += 1.0;
                    }
                }
            }
        }
        Tensor::from_parts(&[b, k, v, v], out)
    }

    /// `[b, V, 1]` indicator of real (non-padded) nodes.
    pub fn node_mask(&self) -> Tensor {
        let v = self.max_nodes();
        let mut m = vec![0.0; self.size * v];
        for (g, &n) in self.num_nodes.iter().enumerate() {
            m[g * v..g * v + n].fill(1.0);
        }
        Tensor::from_parts(&[self.size, v, 1], m)
    }

    /// Strips the padding of entry `g`, recovering the original cell.
    pub fn unpad(&self, g: usize) -> Result<ArchDag> {
        if g >= self.size {
            return Err(Error::Range(format!(
                "entry {g} of a batch of {}",
                self.size
            )));
        }
        let (v, n, nd) = (self.max_nodes(), self.num_nodes[g], self.space.slots());
        let a = &self.adj.data()[g * v * v..(g + 1) * v * v];
        match self.space.kind {
            SpaceKind::Oon => {
                let ops = self.node_ops[g * v..g * v + n].to_vec();
                let edges: Vec<(usize, usize)> = (0..n)
                    .flat_map(|dst| (0..n).map(move |src| (src, dst)))
                    .filter(|&(src, dst)| a[dst * v + src] != 0.0)
                    .collect();
                ArchDag::oon(self.space.clone(), ops, &edges)
            }
            SpaceKind::Ooe => {
                let none = self.space.none_token();
                let mut edges = Vec::new();
                for slot in 0..nd {
                    for dst in 0..n {
                        for src in 0..n {
                            let op = self.edge_ops[((g * nd + slot) * v + dst) * v + src];
                            if op != none {
                                edges.push(Edge { dst, slot, src, op });
                            }
                        }
                    }
                }
                ArchDag::ooe(self.space.clone(), n, edges)
            }
        }
    }
}
