//! Graph-convolution baseline for OON cells.

use rand::Rng;

use crate::archspace::PaddedBatch;
use crate::encoders::EncoderConfig;
use crate::error::Result;
use crate::numerics::{ParamId, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Debug)]
pub(crate) struct GcnParams {
    pub op_emb: ParamId,
    /// Feature row of the virtual global node.
    pub global_emb: Option<ParamId>,
    pub w: Vec<ParamId>,
}

impl GcnParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        vocab: usize,
        cfg: &EncoderConfig,
        global: bool,
        rng: &mut R,
    ) -> Self {
        let op_emb = store.add_embedding("gcn.op_emb", vocab, cfg.op_emb, rng);
        let global_emb = global.then(|| store.add_embedding("gcn.global_emb", 1, cfg.op_emb, rng));
        let mut h_prev = cfg.op_emb;
        let w = (0..cfg.layers)
            .map(|k| {
                let id = store.add_weight(format!("gcn.w.{k}"), h_prev, cfg.hidden, rng);
                h_prev = cfg.hidden;
                id
            })
            .collect();
        GcnParams {
            op_emb,
            global_emb,
            w,
        }
    }
}

/// `D⁻¹(A + Aᵀ + I)` over real nodes, `[b, n, n]`. With `global`, a virtual
/// node at index `V` is linked to every real node.
pub fn normalized_adjacency(batch: &PaddedBatch, global: bool) -> Tensor {
    let v = batch.max_nodes();
    let n = v + global as usize;
    let src = batch.adj.data();
    let mut out = vec![0.0; batch.size * n * n];
    for (g, &real) in batch.num_nodes.iter().enumerate() {
        let a = &src[g * v * v..(g + 1) * v * v];
        let o = &mut out[g * n * n..(g + 1) * n * n];
        for i in 0..real {
            for j in 0..real {
                o[i * n + j] = a[i * v + j] + a[j * v + i] + f64::from(u8::from(i == j));
            }
            if global {
                o[i * n + v] = 1.0;
                o[v * n + i] = 1.0;
            }
        }
        if global {
            o[v * n + v] = 1.0;
        }
        for row in o.chunks_mut(n) {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|x| *x /= s);
            }
        }
    }
    Tensor::from_parts(&[batch.size, n, n], out)
}

/// One layer: `ReLU(Â·X_prev·W)`.
pub fn gcn_layer(tape: &mut Tape, x_prev: Var, a_hat: Var, w: Var) -> Result<Var> {
    let agg = tape.matmul(a_hat, x_prev)?;
    let z = tape.matmul(agg, w)?;
    tape.relu(z)
}

pub(crate) fn embed(
    tape: &mut Tape,
    leaves: &[Var],
    p: &GcnParams,
    batch: &PaddedBatch,
) -> Result<Var> {
    let (b, v) = (batch.size, batch.max_nodes());
    let global = p.global_emb.is_some();
    let n = v + global as usize;
    let emb = leaves[p.op_emb.0];
    let vocab = tape.value(emb).shape()[0];
    let (table, rows) = match p.global_emb {
        Some(gid) => {
            let table = tape.concat(&[emb, leaves[gid.0]], 0)?;
            let mut rows = Vec::with_capacity(b * n);
            for g in 0..b {
                rows.extend_from_slice(&batch.node_ops[g * v..(g + 1) * v]);
                rows.push(vocab);
            }
            (table, rows)
        }
        None => (emb, batch.node_ops.clone()),
    };
    let e = tape.value(table).shape()[1];
    let x0 = tape.gather(table, &rows)?;
    let mut x = tape.reshape(x0, &[b, n, e])?;
    let a_hat = tape.constant(normalized_adjacency(batch, global));
    for w in &p.w {
        x = gcn_layer(tape, x, a_hat, leaves[w.0])?;
    }
    let mut pool = vec![0.0; b * n];
    for (g, &real) in batch.num_nodes.iter().enumerate() {
        if global {
            pool[g * n + v] = 1.0;
        } else {
            pool[g * n..g * n + real].fill(1.0 / real as f64);
        }
    }
    let pool = tape.constant(Tensor::from_parts(&[b, n, 1], pool));
    let pooled = tape.mul(x, pool)?;
    tape.sum_axis(pooled, 1)
}
