use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{ParamId, ParamStore, Tape, Tensor, Var};

/// Affine stack with ReLU between layers, ending in one output per row.
#[derive(Clone, Debug)]
pub(crate) struct Dense {
    pub layers: Vec<(ParamId, ParamId)>,
    pub input_dim: usize,
}

impl Dense {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        widths: &[usize],
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::new();
        let mut fan_in = input_dim;
        for (k, &w) in widths.iter().chain(&[1]).enumerate() {
            let wid = store.add_weight(format!("{prefix}.w.{k}"), fan_in, w, rng);
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            let bid = store.add(
                format!("{prefix}.b.{k}"),
                Tensor::uniform(&[w], -bound, bound, rng),
            );
            layers.push((wid, bid));
            fan_in = w;
        }
        Dense { layers, input_dim }
    }

    /// `[b, input_dim] -> [b]`.
    pub fn forward(&self, tape: &mut Tape, leaves: &[Var], x: Var) -> Result<Var> {
        let shape = tape.value(x).shape().to_vec();
        if shape.len() != 2 || shape[1] != self.input_dim {
            return Err(Error::shape("predict", &shape, &[0, self.input_dim]));
        }
        let mut h = x;
        for (k, (w, b)) in self.layers.iter().enumerate() {
            h = tape.matmul(h, leaves[w.0])?;
            h = tape.add(h, leaves[b.0])?;
            if k + 1 < self.layers.len() {
                h = tape.relu(h)?;
            }
        }
        tape.reshape(h, &[shape[0]])
    }
}
