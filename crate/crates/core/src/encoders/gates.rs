//! GATES: operations act as soft gates on information flowing from the
//! input nodes.

use rand::Rng;

use crate::archspace::{PaddedBatch, SpaceKind};
use crate::encoders::EncoderConfig;
use crate::error::{Error, Result};
use crate::numerics::{ParamId, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Debug)]
pub(crate) struct GatesParams {
    pub input_emb: ParamId,
    pub op_emb: ParamId,
    pub w_o: Vec<ParamId>,
    pub w_x: Vec<ParamId>,
}

impl GatesParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        num_inputs: usize,
        vocab: usize,
        cfg: &EncoderConfig,
        rng: &mut R,
    ) -> Self {
        let input_emb = store.add_embedding("gates.input_emb", num_inputs, cfg.input_emb, rng);
        let op_emb = store.add_embedding("gates.op_emb", vocab, cfg.op_emb, rng);
        let mut w_o = Vec::new();
        let mut w_x = Vec::new();
        let mut h_prev = cfg.input_emb;
        for k in 0..cfg.layers {
            w_o.push(store.add_weight(format!("gates.w_o.{k}"), cfg.op_emb, cfg.hidden, rng));
            w_x.push(store.add_weight(format!("gates.w_x.{k}"), h_prev, cfg.hidden, rng));
            h_prev = cfg.hidden;
        }
        GatesParams {
            input_emb,
            op_emb,
            w_o,
            w_x,
        }
    }
}

/// `[b, V, h0]` state with the input embedding on input rows, zero elsewhere.
pub fn initial_state(tape: &mut Tape, batch: &PaddedBatch, input_emb: Var) -> Result<Var> {
    let (b, v, ni) = (batch.size, batch.max_nodes(), batch.space.num_inputs);
    let mut sel = vec![0.0; b * v * ni];
    for g in 0..b {
        for i in 0..ni {
            sel[((g * v) + i) * ni + i] = 1.0;
        }
    }
    let sel = tape.constant(Tensor::from_parts(&[b * v, ni], sel));
    let x = tape.matmul(sel, input_emb)?;
    let h0 = tape.value(input_emb).shape()[1];
    tape.reshape(x, &[b, v, h0])
}

/// `A + I` on real nodes (or just `A`), destination rows.
fn propagation_matrix(batch: &PaddedBatch, self_loop: bool) -> Tensor {
    let mut a = batch.adj.clone();
    if self_loop {
        let v = batch.max_nodes();
        let d = a.data_mut();
        for (g, &n) in batch.num_nodes.iter().enumerate() {
            for i in 0..n {
                d[(g * v + i) * v + i] += 1.0;
            }
        }
    }
    a
}

/// One OON layer: `X_k = σ(EMB(o)·W_o) ⊙ (Ã·X_prev·W_x)`.
pub fn gates_layer_oon(
    tape: &mut Tape,
    x_prev: Var,
    batch: &PaddedBatch,
    op_emb: Var,
    w_o: Var,
    w_x: Var,
    self_loop: bool,
) -> Result<Var> {
    let (b, v) = (batch.size, batch.max_nodes());
    let xs = tape.value(x_prev).shape().to_vec();
    if xs.len() != 3 || xs[0] != b || xs[1] != v {
        return Err(Error::shape("gates_layer_oon", &xs, &[b, v, 0]));
    }
    let a = tape.constant(propagation_matrix(batch, self_loop));
    let agg = tape.matmul(a, x_prev)?;
    let msg = tape.matmul(agg, w_x)?;
    let table = tape.matmul(op_emb, w_o)?;
    let gate = tape.gather(table, &batch.node_ops)?;
    let h = tape.value(gate).shape()[1];
    let gate = tape.reshape(gate, &[b, v, h])?;
    let gate = tape.sigmoid(gate)?;
    tape.mul(gate, msg)
}

/// One OOE layer: every edge `src -> dst` with operation `o` adds
/// `σ(EMB(o)·W_o) ⊙ (X_prev[src]·W_x)` to `dst`. With `reinject` set to
/// `(X⁰, input mask)`, input rows are reset to `X⁰` afterwards.
pub fn gates_layer_ooe(
    tape: &mut Tape,
    x_prev: Var,
    batch: &PaddedBatch,
    op_emb: Var,
    w_o: Var,
    w_x: Var,
    reinject: Option<(Var, Var)>,
) -> Result<Var> {
    let (b, v, k) = (batch.size, batch.max_nodes(), batch.space.vocab_size());
    let xs = tape.value(x_prev).shape().to_vec();
    if xs.len() != 3 || xs[0] != b || xs[1] != v {
        return Err(Error::shape("gates_layer_ooe", &xs, &[b, v, 0]));
    }
    let op_adj = batch.op_adjacency().reshape(&[b, k * v, v])?;
    let op_adj = tape.constant(op_adj);
    let xw = tape.matmul(x_prev, w_x)?;
    let h = tape.value(xw).shape()[2];
    let per_op = tape.matmul(op_adj, xw)?;
    let per_op = tape.reshape(per_op, &[b, k, v, h])?;
    let table = tape.matmul(op_emb, w_o)?;
    let gate = tape.sigmoid(table)?;
    let gate = tape.reshape(gate, &[k, 1, h])?;
    let gated = tape.mul(per_op, gate)?;
    let x = tape.sum_axis(gated, 1)?;
    match reinject {
        None => Ok(x),
        Some((x0, in_mask)) => {
            let kept = tape.mul(x, in_mask)?;
            let kept = tape.sub(x, kept)?;
            let inputs = tape.mul(x0, in_mask)?;
            tape.add(kept, inputs)
        }
    }
}

/// `[b, V, 1]` readout weights: the output row, or every loose end.
pub(crate) fn readout_mask(batch: &PaddedBatch) -> Tensor {
    let v = batch.max_nodes();
    let mut m = vec![0.0; batch.size * v];
    for g in 0..batch.size {
        if batch.space.output_node {
            m[g * v + batch.out_index[g]] = 1.0;
        } else {
            for &n in &batch.loose_ends[g] {
                m[g * v + n] = 1.0;
            }
        }
    }
    Tensor::from_parts(&[batch.size, v, 1], m)
}

fn input_mask(batch: &PaddedBatch) -> Tensor {
    let (v, ni) = (batch.max_nodes(), batch.space.num_inputs);
    let mut m = vec![0.0; batch.size * v];
    for g in 0..batch.size {
        m[g * v..g * v + ni].fill(1.0);
    }
    Tensor::from_parts(&[batch.size, v, 1], m)
}

/// Runs every layer and returns the final node states `[b, V, h]`.
pub(crate) fn node_states(
    tape: &mut Tape,
    leaves: &[Var],
    p: &GatesParams,
    batch: &PaddedBatch,
    cfg: &EncoderConfig,
) -> Result<Var> {
    let x0 = initial_state(tape, batch, leaves[p.input_emb.0])?;
    let emb = leaves[p.op_emb.0];
    let reinject = if cfg.reinject_input && batch.space.kind == SpaceKind::Ooe {
        Some((x0, tape.constant(input_mask(batch))))
    } else {
        None
    };
    let mut x = x0;
    for (wo, wx) in p.w_o.iter().zip(&p.w_x) {
        let (wo, wx) = (leaves[wo.0], leaves[wx.0]);
        x = match batch.space.kind {
            SpaceKind::Oon => gates_layer_oon(tape, x, batch, emb, wo, wx, cfg.self_loop)?,
            SpaceKind::Ooe => gates_layer_ooe(tape, x, batch, emb, wo, wx, reinject)?,
        };
    }
    Ok(x)
}

/// `[b, h]` architecture embeddings.
pub(crate) fn embed(
    tape: &mut Tape,
    leaves: &[Var],
    p: &GatesParams,
    batch: &PaddedBatch,
    cfg: &EncoderConfig,
) -> Result<Var> {
    let x = node_states(tape, leaves, p, batch, cfg)?;
    let mask = tape.constant(readout_mask(batch));
    let picked = tape.mul(x, mask)?;
    tape.sum_axis(picked, 1)
}
