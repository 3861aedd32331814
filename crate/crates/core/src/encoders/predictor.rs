use std::sync::Arc;

use rayon::prelude::*;

use crate::archspace::{flat_len, flatten_for_mlp, pad_batch, ArchDag, SpaceSpec};
use crate::encoders::gates::{self, GatesParams};
use crate::encoders::gcn::{self, GcnParams};
use crate::encoders::head::Dense;
use crate::encoders::{EncoderConfig, EncoderKind};
use crate::error::{Error, Result};
use crate::numerics::{ParamStore, Tape, Tensor, Var};
use crate::seed;

pub const CHECKPOINT_HEADER: &str = "gateslab-checkpoint v1";

/// Rows per inference chunk.
const INFER_CHUNK: usize = 256;

#[derive(Clone, Debug)]
enum EncParams {
    Gates(GatesParams),
    Gcn(GcnParams),
    Mlp,
}

/// Encoder plus scalar head over one search space.
#[derive(Clone, Debug)]
pub struct Predictor {
    config: EncoderConfig,
    space: Arc<SpaceSpec>,
    params: ParamStore,
    enc: EncParams,
    head: Dense,
}

impl Predictor {
    pub fn new(space: Arc<SpaceSpec>, config: EncoderConfig, seed: u64) -> Result<Self> {
        space.validate()?;
        config.validate(&space)?;
        let mut rng = seed::rng(seed, "init", 0);
        let mut params = ParamStore::new();
        let vocab = space.vocab_size();
        let enc = match config.kind {
            EncoderKind::Gates => EncParams::Gates(GatesParams::init(
                &mut params,
                space.num_inputs,
                vocab,
                &config,
                &mut rng,
            )),
            EncoderKind::Gcn => EncParams::Gcn(GcnParams::init(
                &mut params,
                vocab,
                &config,
                false,
                &mut rng,
            )),
            EncoderKind::GcnGlobal => {
                EncParams::Gcn(GcnParams::init(&mut params, vocab, &config, true, &mut rng))
            }
            EncoderKind::Mlp => EncParams::Mlp,
        };
        let dim =
            Self::dim_for(&space, &config) * config.cells * if config.comparator { 2 } else { 1 };
        let head = Dense::init(&mut params, "head", dim, &config.head_widths, &mut rng);
        Ok(Predictor {
            config,
            space,
            params,
            enc,
            head,
        })
    }

    fn dim_for(space: &SpaceSpec, config: &EncoderConfig) -> usize {
        match config.kind {
            EncoderKind::Mlp => flat_len(space),
            _ => config.hidden,
        }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn space(&self) -> &Arc<SpaceSpec> {
        &self.space
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Per-cell embedding width.
    pub fn embedding_dim(&self) -> usize {
        Self::dim_for(&self.space, &self.config)
    }

    /// Registers every parameter on `tape`, indexed by `ParamId`.
    pub fn leaves(&self, tape: &mut Tape) -> Vec<Var> {
        self.params
            .ids()
            .map(|id| self.params.leaf(tape, id))
            .collect()
    }

    fn check_space(&self, archs: &[ArchDag]) -> Result<()> {
        match archs.iter().find(|a| a.space().id != self.space.id) {
            Some(a) => Err(Error::Space(format!(
                "predictor built for {} got an architecture from {}",
                self.space.id,
                a.space().id
            ))),
            None => Ok(()),
        }
    }

    /// `[b, d]` embeddings of single cells.
    pub fn embed(&self, tape: &mut Tape, leaves: &[Var], archs: &[ArchDag]) -> Result<Var> {
        self.check_space(archs)?;
        if archs.is_empty() {
            return Err(Error::Empty("no architectures to embed".into()));
        }
        match &self.enc {
            EncParams::Gates(p) => {
                let batch = pad_batch(archs)?;
                gates::embed(tape, leaves, p, &batch, &self.config)
            }
            EncParams::Gcn(p) => {
                let batch = pad_batch(archs)?;
                gcn::embed(tape, leaves, p, &batch)
            }
            EncParams::Mlp => {
                let f = flat_len(&self.space);
                let data: Vec<f64> = archs.iter().flat_map(flatten_for_mlp).collect();
                Ok(tape.constant(Tensor::from_parts(&[archs.len(), f], data)))
            }
        }
    }

    /// Concatenated embeddings of multi-cell architectures; `cells[c]` holds
    /// cell `c` of every architecture in the batch.
    pub fn embed_cells(
        &self,
        tape: &mut Tape,
        leaves: &[Var],
        cells: &[&[ArchDag]],
    ) -> Result<Var> {
        if cells.len() != self.config.cells {
            return Err(Error::Config(format!(
                "expected {} cells, got {}",
                self.config.cells,
                cells.len()
            )));
        }
        let parts = cells
            .iter()
            .map(|c| self.embed(tape, leaves, c))
            .collect::<Result<Vec<_>>>()?;
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        tape.concat(&parts, 1)
    }

    /// Scores `[b]` from embeddings `[b, d]`.
    pub fn head(&self, tape: &mut Tape, leaves: &[Var], emb: Var) -> Result<Var> {
        self.head.forward(tape, leaves, emb)
    }

    /// Single-cell scores `[b]`.
    pub fn score_var(&self, tape: &mut Tape, leaves: &[Var], archs: &[ArchDag]) -> Result<Var> {
        if self.config.comparator {
            return Err(Error::Config(
                "comparator heads score pairs, not single architectures".into(),
            ));
        }
        let e = self.embed_cells(tape, leaves, &[archs])?;
        self.head(tape, leaves, e)
    }

    /// Comparator scores `s(a, b)` for embeddings `[b, d]` of each side.
    pub fn compare_var(&self, tape: &mut Tape, leaves: &[Var], ea: Var, eb: Var) -> Result<Var> {
        if !self.config.comparator {
            return Err(Error::Config("not a comparator predictor".into()));
        }
        let e = tape.concat(&[ea, eb], 1)?;
        self.head(tape, leaves, e)
    }

    /// Inference scores, computed in parallel chunks without tracing.
    pub fn scores(&self, archs: &[ArchDag]) -> Result<Vec<f64>> {
        let chunks: Vec<Vec<f64>> = archs
            .par_chunks(INFER_CHUNK)
            .map(|c| {
                let mut tape = Tape::untraced();
                let leaves = self.leaves(&mut tape);
                let s = self.score_var(&mut tape, &leaves, c)?;
                Ok(tape.value(s).data().to_vec())
            })
            .collect::<Result<_>>()?;
        Ok(chunks.concat())
    }

    /// Inference embeddings `[n, d]`.
    pub fn embeddings(&self, archs: &[ArchDag]) -> Result<Tensor> {
        let chunks: Vec<Vec<f64>> = archs
            .par_chunks(INFER_CHUNK)
            .map(|c| {
                let mut tape = Tape::untraced();
                let leaves = self.leaves(&mut tape);
                let e = self.embed(&mut tape, &leaves, c)?;
                Ok(tape.value(e).data().to_vec())
            })
            .collect::<Result<_>>()?;
        Tensor::new(vec![archs.len(), self.embedding_dim()], chunks.concat())
    }

    /// Comparator scores for aligned pairs `(a[i], b[i])`.
    pub fn compare(&self, a: &[ArchDag], b: &[ArchDag]) -> Result<Vec<f64>> {
        if a.len() != b.len() {
            return Err(Error::shape("compare", &[a.len()], &[b.len()]));
        }
        let mut tape = Tape::untraced();
        let leaves = self.leaves(&mut tape);
        let ea = self.embed(&mut tape, &leaves, a)?;
        let eb = self.embed(&mut tape, &leaves, b)?;
        let s = self.compare_var(&mut tape, &leaves, ea, eb)?;
        Ok(tape.value(s).data().to_vec())
    }

    /// Line-record checkpoint: header, space JSON, config JSON, then one
    /// `tensor` record per parameter.
    pub fn to_checkpoint(&self) -> String {
        format!(
            "{CHECKPOINT_HEADER}\nspace {}\nconfig {}\n{}",
            serde_json::to_string(&*self.space).expect("space serializes"),
            serde_json::to_string(&self.config).expect("config serializes"),
            self.params.to_records()
        )
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let parse_err = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        if lines.next() != Some(CHECKPOINT_HEADER) {
            return Err(parse_err(1, "not a predictor checkpoint"));
        }
        let json_line = |l: Option<&str>, key: &str, n: usize| -> Result<String> {
            l.and_then(|l| l.strip_prefix(key))
                .map(str::to_string)
                .ok_or_else(|| parse_err(n, &format!("expected `{}` record", key.trim())))
        };
        let space: SpaceSpec = serde_json::from_str(&json_line(lines.next(), "space ", 2)?)
            .map_err(|e| parse_err(2, &e.to_string()))?;
        let config: EncoderConfig = serde_json::from_str(&json_line(lines.next(), "config ", 3)?)
            .map_err(|e| parse_err(3, &e.to_string()))?;
        let stored = ParamStore::from_records(lines, 4)?;
        let mut p = Predictor::new(Arc::new(space), config, 0)?;
        if stored.len() != p.params.len() {
            return Err(parse_err(4, "parameter count does not match the config"));
        }
        for id in stored.ids() {
            if stored.name(id) != p.params.name(id)
                || stored.get(id).shape() != p.params.get(id).shape()
            {
                return Err(parse_err(
                    4 + id.0,
                    &format!("unexpected tensor `{}`", stored.name(id)),
                ));
            }
        }
        p.params = stored;
        Ok(p)
    }
}
