//! Architecture encoders (GATES, GCN, MLP) and the scalar predictor head.

pub mod gates;
pub mod gcn;
mod head;
mod iso;
mod predictor;

use serde::{Deserialize, Serialize};

use crate::archspace::{SpaceKind, SpaceSpec};
use crate::error::{Error, Result};

pub use iso::{iso_variance, IsoGroup, IsoReport};
pub use predictor::{Predictor, CHECKPOINT_HEADER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    Gates,
    Gcn,
    GcnGlobal,
    Mlp,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Gates => "gates",
            EncoderKind::Gcn => "gcn",
            EncoderKind::GcnGlobal => "gcn-global",
            EncoderKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gates" => Ok(EncoderKind::Gates),
            "gcn" => Ok(EncoderKind::Gcn),
            "gcn-global" | "gcn_global" => Ok(EncoderKind::GcnGlobal),
            "mlp" => Ok(EncoderKind::Mlp),
            _ => Err(Error::Config(format!("unknown encoder `{s}`"))),
        }
    }
}

/// Encoder and head hyperparameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub layers: usize,
    /// Width of the propagated information (GATES/GCN output dim).
    pub hidden: usize,
    pub op_emb: usize,
    pub input_emb: usize,
    /// OON GATES: add the identity to the propagation matrix.
    pub self_loop: bool,
    /// OOE GATES: reset input rows after every layer.
    pub reinject_input: bool,
    /// Hidden widths of the head; the final scalar layer is implicit.
    pub head_widths: Vec<usize>,
    /// Cells per architecture whose embeddings are concatenated.
    pub cells: usize,
    /// Head scores ordered pairs `[E(a), E(b)]` instead of single cells.
    pub comparator: bool,
}

impl EncoderConfig {
    /// Full-scale defaults: 5 layers of 128 with 48-dim embeddings and a
    /// 64-32 head; the MLP baseline uses a 512-2048-2048-512 stack.
    pub fn new(kind: EncoderKind) -> Self {
        EncoderConfig {
            kind,
            layers: 5,
            hidden: 128,
            op_emb: 48,
            input_emb: 48,
            self_loop: true,
            reinject_input: false,
            head_widths: match kind {
                EncoderKind::Mlp => vec![512, 2048, 2048, 512],
                _ => vec![64, 32],
            },
            cells: 1,
            comparator: false,
        }
    }

    /// Scaled-down widths for quick CPU runs. Six layers let information
    /// cross the longest 7-node cell.
    pub fn desk(kind: EncoderKind) -> Self {
        EncoderConfig {
            layers: 6,
            hidden: 32,
            op_emb: 16,
            input_emb: 16,
            head_widths: match kind {
                EncoderKind::Mlp => vec![64, 128, 64],
                _ => vec![64, 32],
            },
            ..Self::new(kind)
        }
    }

    /// [`EncoderConfig::desk`] fitted to `space`: one layer per edge of the
    /// longest possible input-to-output path and, for OOE cells, input
    /// re-injection so that shorter paths also reach the output.
    pub fn desk_for(kind: EncoderKind, space: &SpaceSpec) -> Self {
        let mut c = Self::desk(kind);
        c.layers = space.max_nodes - space.num_inputs;
        c.fit_ooe(space);
        c
    }

    /// Full-scale [`EncoderConfig::new`] with the OOE re-injection fix.
    pub fn for_space(kind: EncoderKind, space: &SpaceSpec) -> Self {
        let mut c = Self::new(kind);
        c.fit_ooe(space);
        c
    }

    fn fit_ooe(&mut self, space: &SpaceSpec) {
        if space.kind == SpaceKind::Ooe && self.kind == EncoderKind::Gates {
            self.reinject_input = true;
            self.input_emb = self.hidden;
        }
    }

    pub fn validate(&self, space: &SpaceSpec) -> Result<()> {
        if self.kind != EncoderKind::Mlp
            && (self.layers == 0 || self.hidden == 0 || self.op_emb == 0)
        {
            return Err(Error::Config("layers and widths must be at least 1".into()));
        }
        if self.kind == EncoderKind::Gates && self.input_emb == 0 {
            return Err(Error::Config(
                "input embedding must be at least 1 wide".into(),
            ));
        }
        if self.cells == 0 {
            return Err(Error::Config("cells must be at least 1".into()));
        }
        if self.head_widths.contains(&0) {
            return Err(Error::Config("head widths must be positive".into()));
        }
        if matches!(self.kind, EncoderKind::Gcn | EncoderKind::GcnGlobal)
            && space.kind == SpaceKind::Ooe
        {
            return Err(Error::Unsupported(format!(
                "{} cannot encode operation-on-edge space {}",
                self.kind.name(),
                space.id
            )));
        }
        if self.kind == EncoderKind::Gates
            && self.reinject_input
            && space.kind == SpaceKind::Ooe
            && self.input_emb != self.hidden
        {
            return Err(Error::Config(
                "reinjecting inputs needs the input embedding as wide as the hidden state".into(),
            ));
        }
        Ok(())
    }
}
