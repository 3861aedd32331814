use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor, Var};

/// Index of a tensor inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// Ordered collection of named trainable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    /// Weight matrix drawn from `uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn add_weight<R: Rng>(
        &mut self,
        name: impl Into<String>,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        self.add(
            name,
            Tensor::uniform(&[fan_in, fan_out], -bound, bound, rng),
        )
    }

    /// Embedding table drawn from `uniform(-0.1, 0.1)`.
    pub fn add_embedding<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        dim: usize,
        rng: &mut R,
    ) -> ParamId {
        self.add(name, Tensor::uniform(&[rows, dim], -0.1, 0.1, rng))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Registers `id` on the tape as a trainable leaf.
    pub fn leaf(&self, tape: &mut Tape, id: ParamId) -> Var {
        tape.param(id, &self.tensors[id.0])
    }

    /// Order-sensitive digest of every value, used to detect mutation.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.tensors {
            for v in t.data() {
                for b in v.to_bits().to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }

    /// Line-record dump: one `tensor <name> <d0,d1,..> <v0> <v1> ..` line per
    /// tensor. Values use the shortest decimal form that parses back to the
    /// identical `f64`.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for (name, t) in self.names.iter().zip(&self.tensors) {
            let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            write!(out, "tensor {name} {}", dims.join(",")).unwrap();
            for v in t.data() {
                write!(out, " {v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses lines produced by [`ParamStore::to_records`]; `first_line` is the
    /// 1-based line number of the first record, used in error messages.
    pub fn from_records<'a>(
        lines: impl Iterator<Item = &'a str>,
        first_line: usize,
    ) -> Result<Self> {
        let mut store = ParamStore::new();
        for (i, line) in lines.enumerate() {
            let lineno = first_line + i;
            let err = |msg: &str| Error::Parse {
                line: lineno,
                msg: msg.to_string(),
            };
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            if parts.next() != Some("tensor") {
                return Err(err("expected a `tensor` record"));
            }
            let name = parts.next().ok_or_else(|| err("missing tensor name"))?;
            let shape = parts
                .next()
                .ok_or_else(|| err("missing shape"))?
                .split(',')
                .map(|d| d.parse::<usize>().map_err(|_| err("bad dimension")))
                .collect::<Result<Vec<_>>>()?;
            let data = parts
                .map(|v| v.parse::<f64>().map_err(|_| err("bad float")))
                .collect::<Result<Vec<_>>>()?;
            let t =
                Tensor::new(shape, data).map_err(|_| err("value count does not match shape"))?;
            store.add(name, t);
        }
        Ok(store)
    }
}
