//! Reverse-mode differentiation over an append-only operation record.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::ops::{backward_op, forward_op, OpKind};
use crate::numerics::{ParamId, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Origin {
    Constant,
    Param(ParamId),
    Op { kind: OpKind, inputs: Vec<usize> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    origin: Origin,
}

/// Records every value produced during a forward pass. Node `i` only ever
/// consumes nodes with smaller ids, so the record is topologically ordered.
#[derive(Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    tracing: bool,
}

/// Gradients keyed by parameter, plus bookkeeping from the reverse sweep.
#[derive(Debug, Default)]
pub struct Gradients {
    grads: BTreeMap<ParamId, Tensor>,
    /// Number of nodes visited by the reverse sweep.
    pub visits: usize,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.grads.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    /// A tape that records operations for differentiation.
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            tracing: true,
        }
    }

    /// A tape for inference only; [`Tape::backward`] is rejected.
    pub fn untraced() -> Self {
        Tape {
            nodes: Vec::new(),
            tracing: false,
        }
    }

    pub fn is_tracing(&self) -> bool {
        self.tracing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, origin: Origin) -> Var {
        self.nodes.push(Node { value, origin });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Origin::Constant)
    }

    /// Registers a trainable leaf.
    pub fn param(&mut self, id: ParamId, value: &Tensor) -> Var {
        self.push(value.clone(), Origin::Param(id))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn apply(&mut self, kind: OpKind, inputs: &[Var]) -> Result<Var> {
        let value = {
            let xs: Vec<&Tensor> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
            forward_op(&kind, &xs)?
        };
        let origin = if self.tracing {
            Origin::Op {
                kind,
                inputs: inputs.iter().map(|v| v.0).collect(),
            }
        } else {
            Origin::Constant
        };
        Ok(self.push(value, origin))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(OpKind::MatMul, &[a, b])
    }
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(OpKind::Add, &[a, b])
    }
    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(OpKind::Sub, &[a, b])
    }
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(OpKind::Mul, &[a, b])
    }
    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.apply(OpKind::Scale(c), &[a])
    }
    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        self.apply(OpKind::AddScalar(c), &[a])
    }
    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Sigmoid, &[a])
    }
    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Relu, &[a])
    }
    pub fn softplus(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Softplus, &[a])
    }
    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Square, &[a])
    }
    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.apply(OpKind::SumAxis(axis), &[a])
    }
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Sum, &[a])
    }
    pub fn mean(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Mean, &[a])
    }
    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var> {
        self.apply(OpKind::Concat(axis), xs)
    }
    pub fn expand(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.apply(OpKind::Expand(axis), &[a])
    }
    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        self.apply(OpKind::Reshape(shape.to_vec()), &[a])
    }
    pub fn logsumexp(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.apply(OpKind::LogSumExp(axis), &[a])
    }
    pub fn gather(&mut self, a: Var, rows: &[usize]) -> Result<Var> {
        self.apply(OpKind::Gather(rows.to_vec()), &[a])
    }

    /// Reverse sweep from a one-element `loss`. Every registered parameter
    /// receives a gradient; parameters the loss does not depend on get zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if !self.tracing {
            return Err(Error::Trace("backward on an untraced tape".into()));
        }
        if loss.0 >= self.nodes.len() {
            return Err(Error::Trace(format!("unknown variable {}", loss.0)));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::Trace(format!(
                "loss must be a scalar, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        let mut adj: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[loss.0] = Some(Tensor::full(self.nodes[loss.0].value.shape(), 1.0));
        let mut out = Gradients::default();
        for id in (0..self.nodes.len()).rev() {
            out.visits += 1;
            let node = &self.nodes[id];
            match &node.origin {
                Origin::Constant => {}
                Origin::Param(pid) => {
                    let g = adj[id]
                        .take()
                        .unwrap_or_else(|| Tensor::zeros(node.value.shape()));
                    match out.grads.get_mut(pid) {
                        Some(acc) => {
                            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                                *a += b;
                            }
                        }
                        None => {
                            out.grads.insert(*pid, g);
                        }
                    }
                }
                Origin::Op { kind, inputs } => {
                    let Some(g) = adj[id].take() else { continue };
                    let xs: Vec<&Tensor> = inputs.iter().map(|&i| &self.nodes[i].value).collect();
                    let grads = backward_op(kind, &xs, &node.value, &g)?;
                    for (&i, gi) in inputs.iter().zip(grads) {
                        match &mut adj[i] {
                            Some(acc) => {
                                for (a, b) in acc.data_mut().iter_mut().zip(gi.data()) {
                                    *a += b;
                                }
                            }
                            slot => *slot = Some(gi),
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_loss_gives_zero_gradients() {
        let mut tape = Tape::new();
        let w = tape.param(ParamId(0), &Tensor::vector(vec![1.0, 2.0]));
        let _unused = tape.square(w).unwrap();
        let c = tape.constant(Tensor::scalar(3.0));
        let g = tape.backward(c).unwrap();
        assert_eq!(g.get(ParamId(0)).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let mut tape = Tape::new();
        let w = tape.param(ParamId(0), &Tensor::scalar(0.0));
        let s = tape.sigmoid(w).unwrap();
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(ParamId(0)).unwrap().data(), &[0.25]);
    }

    #[test]
    fn product_rule() {
        let mut tape = Tape::new();
        let a = tape.param(ParamId(0), &Tensor::vector(vec![1.0, 2.0]));
        let b = tape.param(ParamId(1), &Tensor::vector(vec![3.0, 4.0]));
        let p = tape.mul(a, b).unwrap();
        let loss = tape.sum(p).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(ParamId(0)).unwrap().data(), &[3.0, 4.0]);
        assert_eq!(g.get(ParamId(1)).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn reverse_sweep_visits_each_node_once() {
        let mut tape = Tape::new();
        let a = tape.param(ParamId(0), &Tensor::vector(vec![0.3, -0.2]));
        let b = tape.sigmoid(a).unwrap();
        let c = tape.mul(b, a).unwrap();
        let d = tape.sum(c).unwrap();
        let g = tape.backward(d).unwrap();
        assert_eq!(g.visits, tape.len());
    }

    #[test]
    fn untraced_and_non_scalar_are_trace_errors() {
        let mut tape = Tape::untraced();
        let a = tape.constant(Tensor::scalar(1.0));
        let b = tape.sigmoid(a).unwrap();
        assert!(matches!(tape.backward(b), Err(Error::Trace(_))));

        let mut tape = Tape::new();
        let a = tape.param(ParamId(0), &Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(tape.backward(a), Err(Error::Trace(_))));
    }

    #[test]
    fn shared_parameter_accumulates() {
        let mut tape = Tape::new();
        let w = tape.param(ParamId(0), &Tensor::scalar(2.0));
        let w2 = tape.param(ParamId(0), &Tensor::scalar(2.0));
        let p = tape.mul(w, w2).unwrap();
        let g = tape.backward(p).unwrap();
        assert_eq!(g.get(ParamId(0)).unwrap().data(), &[4.0]);
    }
}
