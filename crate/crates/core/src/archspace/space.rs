use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INPUT: &str = "input";
pub const OUTPUT: &str = "output";
pub const NONE: &str = "none";

/// Where the operations live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    /// Operations label nodes.
    Oon,
    /// Operations label edges.
    Ooe,
}

/// Which edge sets are admissible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wiring {
    /// Any DAG with at most `max_edges` edges in which every node lies on an
    /// input-to-output path.
    Free,
    /// Exactly one edge for every pair `src < dst`.
    Complete,
    /// Every non-input node has exactly `max_in_degree` incoming edges, one
    /// per slot.
    FixedInDegree,
}

/// Description of a cell search space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub id: String,
    pub kind: SpaceKind,
    pub wiring: Wiring,
    /// Maximum node count `V`.
    pub max_nodes: usize,
    /// Node counts drawn by the random generator, inclusive.
    pub node_range: (usize, usize),
    pub num_inputs: usize,
    /// Operation vocabulary including the reserved `input`, `output` and
    /// `none` tokens.
    pub op_vocab: Vec<String>,
    /// Incoming edge slots per node (OOE).
    pub max_in_degree: usize,
    pub max_edges: usize,
    /// When false, the cell output aggregates every loose-end node instead
    /// of reading a dedicated output node.
    pub output_node: bool,
}

fn vocab(ops: &[&str]) -> Vec<String> {
    [INPUT, OUTPUT, NONE]
        .iter()
        .chain(ops)
        .map(|s| s.to_string())
        .collect()
}

impl SpaceSpec {
    /// Operation-on-node space shaped like NAS-Bench-101: up to 7 nodes, up to
    /// 9 edges, three operations.
    pub fn nb101() -> Self {
        SpaceSpec {
            id: "oon/nb101".into(),
            kind: SpaceKind::Oon,
            wiring: Wiring::Free,
            max_nodes: 7,
            node_range: (3, 7),
            num_inputs: 1,
            op_vocab: vocab(&["conv3x3", "conv1x1", "maxpool3x3"]),
            max_in_degree: 1,
            max_edges: 9,
            output_node: true,
        }
    }

    /// Closed operation-on-node space small enough to enumerate: up to 5
    /// nodes, up to 8 edges, four operations; 5429 distinct cells.
    pub fn nb101_5k() -> Self {
        SpaceSpec {
            id: "oon/nb101-5k".into(),
            max_nodes: 5,
            node_range: (2, 5),
            op_vocab: vocab(&["conv3x3", "conv1x1", "maxpool3x3", "avgpool3x3"]),
            max_edges: 8,
            ..Self::nb101()
        }
    }

    /// Operation-on-edge space shaped like NAS-Bench-201: a complete DAG on
    /// 4 nodes with one of five operations on each of its 6 edges.
    pub fn nb201() -> Self {
        SpaceSpec {
            id: "ooe/nb201".into(),
            kind: SpaceKind::Ooe,
            wiring: Wiring::Complete,
            max_nodes: 4,
            node_range: (4, 4),
            num_inputs: 1,
            op_vocab: vocab(&["zero", "skip_connect", "conv1x1", "conv3x3", "avgpool3x3"]),
            max_in_degree: 1,
            max_edges: 6,
            output_node: true,
        }
    }

    /// Operation-on-edge space shaped like an ENAS cell: two inputs, four
    /// intermediate nodes with two incoming edges each, loose ends summed.
    pub fn enas() -> Self {
        SpaceSpec {
            id: "ooe/enas".into(),
            kind: SpaceKind::Ooe,
            wiring: Wiring::FixedInDegree,
            max_nodes: 6,
            node_range: (6, 6),
            num_inputs: 2,
            op_vocab: vocab(&[
                "sep_conv3x3",
                "sep_conv5x5",
                "avgpool3x3",
                "maxpool3x3",
                "identity",
            ]),
            max_in_degree: 2,
            max_edges: 8,
            output_node: false,
        }
    }

    pub fn presets() -> Vec<SpaceSpec> {
        vec![Self::nb101(), Self::nb101_5k(), Self::nb201(), Self::enas()]
    }

    pub fn by_id(id: &str) -> Result<Arc<SpaceSpec>> {
        Self::presets()
            .into_iter()
            .find(|s| s.id == id)
            .map(Arc::new)
            .ok_or_else(|| Error::Space(format!("unknown space `{id}`")))
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Space(format!("{}: {m}", self.id)));
        if self.max_nodes < self.num_inputs + 1 {
            return err("V must be at least n_i + 1".into());
        }
        if self.num_inputs == 0 {
            return err("need at least one input node".into());
        }
        for tok in [INPUT, OUTPUT, NONE] {
            let n = self.op_vocab.iter().filter(|o| *o == tok).count();
            if n != 1 {
                return err(format!("reserved token `{tok}` appears {n} times"));
            }
        }
        if self.op_choices().is_empty() {
            return err("no operations besides reserved tokens".into());
        }
        if self.kind == SpaceKind::Ooe && self.max_in_degree == 0 {
            return err("OOE spaces need n_d >= 1".into());
        }
        let (lo, hi) = self.node_range;
        if lo < self.num_inputs + 1 || hi > self.max_nodes || lo > hi {
            return err(format!("bad node range {lo}..={hi}"));
        }
        if self.kind == SpaceKind::Oon && self.wiring != Wiring::Free {
            return err("OON spaces use free wiring".into());
        }
        if !self.output_node && self.wiring == Wiring::Free {
            return err("free wiring needs an output node".into());
        }
        Ok(())
    }

    pub fn op_index(&self, name: &str) -> Option<usize> {
        self.op_vocab.iter().position(|o| o == name)
    }

    pub fn input_token(&self) -> usize {
        self.op_index(INPUT).expect("validated vocab")
    }

    pub fn output_token(&self) -> usize {
        self.op_index(OUTPUT).expect("validated vocab")
    }

    pub fn none_token(&self) -> usize {
        self.op_index(NONE).expect("validated vocab")
    }

    pub fn is_reserved(&self, op: usize) -> bool {
        matches!(self.op_vocab[op].as_str(), INPUT | OUTPUT | NONE)
    }

    /// Vocabulary indices of the non-reserved operations, in vocab order.
    pub fn op_choices(&self) -> Vec<usize> {
        (0..self.op_vocab.len())
            .filter(|&i| !self.is_reserved(i))
            .collect()
    }

    pub fn vocab_size(&self) -> usize {
        self.op_vocab.len()
    }

    /// Number of incoming edge slots tracked per node in padded batches.
    pub fn slots(&self) -> usize {
        match self.kind {
            SpaceKind::Oon => 1,
            SpaceKind::Ooe => self.max_in_degree,
        }
    }
}
