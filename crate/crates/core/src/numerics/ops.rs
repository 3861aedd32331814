//! Forward kernels and their vector-Jacobian products.
//!
//! Every kernel is a pure function of its inputs. Elementwise binary kernels
//! broadcast with trailing-axis alignment: shapes are right-aligned and a
//! size-1 (or missing) axis stretches to the other operand's size.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub enum OpKind {
    /// `[.., m, k] x [k, n]`, or batched `[b, m, k] x [b, k, n]`.
    MatMul,
    Add,
    Sub,
    Mul,
    Scale(f64),
    AddScalar(f64),
    Sigmoid,
    Relu,
    Softplus,
    Square,
    /// Sum over one axis, removing it.
    SumAxis(usize),
    /// Sum of every entry, shape `[1]`.
    Sum,
    /// Mean of every entry, shape `[1]`.
    Mean,
    Concat(usize),
    /// Inserts a size-1 axis at the given position.
    Expand(usize),
    Reshape(Vec<usize>),
    /// Overflow-safe `ln Σ exp` over one axis, removing it.
    LogSumExp(usize),
    /// Selects rows along axis 0.
    Gather(Vec<usize>),
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::MatMul => "matmul",
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "elementwise_mul",
            OpKind::Scale(_) => "scale",
            OpKind::AddScalar(_) => "add_scalar",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Relu => "relu",
            OpKind::Softplus => "softplus",
            OpKind::Square => "square",
            OpKind::SumAxis(_) => "sum_over_axis",
            OpKind::Sum => "sum",
            OpKind::Mean => "mean",
            OpKind::Concat(_) => "concat_axis",
            OpKind::Expand(_) => "expand_axis",
            OpKind::Reshape(_) => "reshape",
            OpKind::LogSumExp(_) => "logsumexp_over_axis",
            OpKind::Gather(_) => "gather",
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            OpKind::MatMul | OpKind::Add | OpKind::Sub | OpKind::Mul => Some(2),
            OpKind::Concat(_) => None,
            _ => Some(1),
        }
    }
}

/// Evaluates one kernel.
pub fn forward_op(kind: &OpKind, inputs: &[&Tensor]) -> Result<Tensor> {
    if let Some(n) = kind.arity() {
        if inputs.len() != n {
            return Err(Error::Numerics(format!(
                "{} expects {n} inputs, got {}",
                kind.name(),
                inputs.len()
            )));
        }
    } else if inputs.is_empty() {
        return Err(Error::Numerics(format!("{} needs inputs", kind.name())));
    }
    let out = match kind {
        OpKind::MatMul => matmul(inputs[0], inputs[1])?,
        OpKind::Add => binary(kind, inputs[0], inputs[1], |a, b| a + b)?,
        OpKind::Sub => binary(kind, inputs[0], inputs[1], |a, b| a - b)?,
        OpKind::Mul => binary(kind, inputs[0], inputs[1], |a, b| a * b)?,
        OpKind::Scale(c) => inputs[0].map(|v| v * c),
        OpKind::AddScalar(c) => inputs[0].map(|v| v + c),
        OpKind::Sigmoid => inputs[0].map(sigmoid),
        OpKind::Relu => inputs[0].map(|v| if v > 0.0 { v } else { 0.0 }),
        OpKind::Softplus => inputs[0].map(softplus),
        OpKind::Square => inputs[0].map(|v| v * v),
        OpKind::SumAxis(axis) => reduce_axis(inputs[0], *axis, kind)?,
        OpKind::Sum => Tensor::scalar(inputs[0].data().iter().sum()),
        OpKind::Mean => {
            let x = inputs[0];
            if x.is_empty() {
                return Err(Error::Empty("mean of empty tensor".into()));
            }
            Tensor::scalar(x.data().iter().sum::<f64>() / x.len() as f64)
        }
        OpKind::Concat(axis) => concat(inputs, *axis)?,
        OpKind::Expand(axis) => {
            let x = inputs[0];
            if *axis > x.rank() {
                return Err(Error::shape("expand_axis", x.shape(), &[*axis]));
            }
            let mut shape = x.shape().to_vec();
            shape.insert(*axis, 1);
            x.reshape(&shape)?
        }
        OpKind::Reshape(shape) => inputs[0].reshape(shape)?,
        OpKind::LogSumExp(axis) => reduce_axis(inputs[0], *axis, kind)?,
        OpKind::Gather(idx) => gather(inputs[0], idx)?,
    };
    if !out.is_finite() {
        return Err(Error::Numerics(format!(
            "{} produced a non-finite value",
            kind.name()
        )));
    }
    Ok(out)
}

/// Gradients of every input given the upstream gradient of the output.
pub fn backward_op(
    kind: &OpKind,
    inputs: &[&Tensor],
    output: &Tensor,
    grad: &Tensor,
) -> Result<Vec<Tensor>> {
    let g = grad.data();
    Ok(match kind {
        OpKind::MatMul => matmul_backward(inputs[0], inputs[1], grad)?,
        OpKind::Add | OpKind::Sub | OpKind::Mul => {
            binary_backward(kind, inputs[0], inputs[1], grad)?
        }
        OpKind::Scale(c) => vec![grad.map(|v| v * c)],
        OpKind::AddScalar(_) => vec![grad.clone()],
        OpKind::Sigmoid => vec![zip_map(grad, output, |g, y| g * y * (1.0 - y))],
        OpKind::Relu => vec![zip_map(
            grad,
            inputs[0],
            |g, x| if x > 0.0 { g } else { 0.0 },
        )],
        OpKind::Softplus => vec![zip_map(grad, inputs[0], |g, x| g * sigmoid(x))],
        OpKind::Square => vec![zip_map(grad, inputs[0], |g, x| 2.0 * g * x)],
        OpKind::SumAxis(axis) => {
            let x = inputs[0];
            let (outer, len, inner) = axis_split(x.shape(), *axis);
            let mut gx = vec![0.0; x.len()];
            for o in 0..outer {
                for l in 0..len {
                    let base = (o * len + l) * inner;
                    gx[base..base + inner].copy_from_slice(&g[o * inner..(o + 1) * inner]);
                }
            }
            vec![Tensor::from_parts(x.shape(), gx)]
        }
        OpKind::Sum => vec![Tensor::full(inputs[0].shape(), g[0])],
        OpKind::Mean => {
            let x = inputs[0];
            vec![Tensor::full(x.shape(), g[0] / x.len() as f64)]
        }
        OpKind::Concat(axis) => {
            let (outer, _, inner) = axis_split(output.shape(), *axis);
            let total = output.shape()[*axis];
            let mut grads = Vec::with_capacity(inputs.len());
            let mut offset = 0;
            for x in inputs {
                let len = x.shape()[*axis];
                let mut gx = Vec::with_capacity(x.len());
                for o in 0..outer {
                    let start = (o * total + offset) * inner;
                    gx.extend_from_slice(&g[start..start + len * inner]);
                }
                offset += len;
                grads.push(Tensor::from_parts(x.shape(), gx));
            }
            grads
        }
        OpKind::Expand(_) | OpKind::Reshape(_) => vec![grad.reshape(inputs[0].shape())?],
        OpKind::LogSumExp(axis) => {
            let x = inputs[0];
            let (outer, len, inner) = axis_split(x.shape(), *axis);
            let xd = x.data();
            let od = output.data();
            let mut gx = vec![0.0; x.len()];
            for o in 0..outer {
                for l in 0..len {
                    for i in 0..inner {
                        let at = (o * len + l) * inner + i;
                        let r = o * inner + i;
                        gx[at] = g[r] * (xd[at] - od[r]).exp();
                    }
                }
            }
            vec![Tensor::from_parts(x.shape(), gx)]
        }
        OpKind::Gather(idx) => {
            let x = inputs[0];
            let row: usize = x.shape()[1..].iter().product();
            let mut gx = vec![0.0; x.len()];
            for (r, &src) in idx.iter().enumerate() {
                let dst = &mut gx[src * row..(src + 1) * row];
                for (d, s) in dst.iter_mut().zip(&g[r * row..(r + 1) * row]) {
                    *d += s;
                }
            }
            vec![Tensor::from_parts(x.shape(), gx)]
        }
    })
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_parts(a.shape(), data)
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn reduce_axis(x: &Tensor, axis: usize, kind: &OpKind) -> Result<Tensor> {
    if axis >= x.rank() {
        return Err(Error::shape(kind.name(), x.shape(), &[axis]));
    }
    let (outer, len, inner) = axis_split(x.shape(), axis);
    let mut shape = x.shape().to_vec();
    shape.remove(axis);
    if shape.is_empty() {
        shape.push(1);
    }
    let xd = x.data();
    let mut out = vec![0.0; outer * inner];
    match kind {
        OpKind::SumAxis(_) => {
            for o in 0..outer {
                for l in 0..len {
                    let base = (o * len + l) * inner;
                    for i in 0..inner {
                        out[o * inner + i] += xd[base + i];
                    }
                }
            }
        }
        _ => {
            if len == 0 {
                return Err(Error::Empty("logsumexp over an empty axis".into()));
            }
            for o in 0..outer {
                for i in 0..inner {
                    let at = |l: usize| xd[(o * len + l) * inner + i];
                    let m = (0..len).map(at).fold(f64::NEG_INFINITY, f64::max);
                    let s: f64 = (0..len).map(|l| (at(l) - m).exp()).sum();
                    out[o * inner + i] = m + s.ln();
                }
            }
        }
    }
    Tensor::new(shape, out)
}

fn concat(inputs: &[&Tensor], axis: usize) -> Result<Tensor> {
    let first = inputs[0];
    if axis >= first.rank() {
        return Err(Error::shape("concat_axis", first.shape(), &[axis]));
    }
    let mut total = 0;
    for x in inputs {
        let same = x.rank() == first.rank()
            && x.shape()
                .iter()
                .zip(first.shape())
                .enumerate()
                .all(|(d, (a, b))| d == axis || a == b);
        if !same {
            return Err(Error::shape("concat_axis", first.shape(), x.shape()));
        }
        total += x.shape()[axis];
    }
    let (outer, _, inner) = axis_split(first.shape(), axis);
    let mut shape = first.shape().to_vec();
    shape[axis] = total;
    let mut data = Vec::with_capacity(outer * total * inner);
    for o in 0..outer {
        for x in inputs {
            let chunk = x.shape()[axis] * inner;
            data.extend_from_slice(&x.data()[o * chunk..(o + 1) * chunk]);
        }
    }
    Tensor::new(shape, data)
}

fn gather(x: &Tensor, idx: &[usize]) -> Result<Tensor> {
    if x.rank() == 0 || idx.iter().any(|&i| i >= x.shape()[0]) {
        return Err(Error::shape("gather", x.shape(), &[idx.len()]));
    }
    let row: usize = x.shape()[1..].iter().product();
    let mut data = Vec::with_capacity(idx.len() * row);
    for &i in idx {
        data.extend_from_slice(&x.data()[i * row..(i + 1) * row]);
    }
    let mut shape = x.shape().to_vec();
    shape[0] = idx.len();
    Tensor::new(shape, data)
}

// ---- broadcasting -------------------------------------------------------

fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for d in 0..rank {
        let da = if d + a.len() >= rank {
            a[d + a.len() - rank]
        } else {
            1
        };
        let db = if d + b.len() >= rank {
            b[d + b.len() - rank]
        } else {
            1
        };
        out[d] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// Strides of `shape` viewed in `out`'s rank, zero along broadcast axes.
fn broadcast_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let rank = out.len();
    let mut strides = vec![0; rank];
    let mut s = 1;
    for d in (0..shape.len()).rev() {
        let od = d + rank - shape.len();
        strides[od] = if shape[d] == 1 { 0 } else { s };
        s *= shape[d];
    }
    strides
}

/// Visits `(out_index, a_index, b_index)` for every output element.
fn for_each_broadcast(
    out: &[usize],
    sa: &[usize],
    sb: &[usize],
    mut f: impl FnMut(usize, usize, usize),
) {
    let rank = out.len();
    let total: usize = out.iter().product();
    if total == 0 {
        return;
    }
    let inner = out[rank - 1];
    let (ia, ib) = (sa[rank - 1], sb[rank - 1]);
    let mut idx = vec![0usize; rank];
    let (mut oa, mut ob, mut o) = (0usize, 0usize, 0usize);
    loop {
        for j in 0..inner {
            f(o + j, oa + j * ia, ob + j * ib);
        }
        o += inner;
        let mut d = rank - 1;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            oa += sa[d];
            ob += sb[d];
            if idx[d] < out[d] {
                break;
            }
            oa -= sa[d] * out[d];
            ob -= sb[d] * out[d];
            idx[d] = 0;
        }
    }
}

fn binary(kind: &OpKind, a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
    if a.shape() == b.shape() {
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        return Ok(Tensor::from_parts(a.shape(), data));
    }
    let out = broadcast_shape(a.shape(), b.shape())
        .ok_or_else(|| Error::shape(kind.name(), a.shape(), b.shape()))?;
    let sa = broadcast_strides(a.shape(), &out);
    let sb = broadcast_strides(b.shape(), &out);
    let mut data = vec![0.0; out.iter().product()];
    let (ad, bd) = (a.data(), b.data());
    for_each_broadcast(&out, &sa, &sb, |o, i, j| data[o] = f(ad[i], bd[j]));
    Tensor::new(out, data)
}

fn binary_backward(kind: &OpKind, a: &Tensor, b: &Tensor, grad: &Tensor) -> Result<Vec<Tensor>> {
    let out = grad.shape();
    let sa = broadcast_strides(a.shape(), out);
    let sb = broadcast_strides(b.shape(), out);
    let mut ga = vec![0.0; a.len()];
    let mut gb = vec![0.0; b.len()];
    let (ad, bd, g) = (a.data(), b.data(), grad.data());
    match kind {
        OpKind::Add => for_each_broadcast(out, &sa, &sb, |o, i, j| {
            ga[i] += g[o];
            gb[j] += g[o];
        }),
        OpKind::Sub => for_each_broadcast(out, &sa, &sb, |o, i, j| {
            ga[i] += g[o];
            gb[j] -= g[o];
        }),
        _ => for_each_broadcast(out, &sa, &sb, |o, i, j| {
            ga[i] += g[o] * bd[j];
            gb[j] += g[o] * ad[i];
        }),
    }
    Ok(vec![
        Tensor::from_parts(a.shape(), ga),
        Tensor::from_parts(b.shape(), gb),
    ])
}

// ---- matmul -------------------------------------------------------------

/// `c = a * b (+ beta * c)` on strided row/column views.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (ars, acs): (usize, usize),
    b: &[f64],
    (brs, bcs): (usize, usize),
    c: &mut [f64],
    beta: f64,
) {
    debug_assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the slices cover every index addressed by the given dimensions
    // and strides; the caller passes dense row-major buffers or their
    // transposed views.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            ars as isize,
            acs as isize,
            b.as_ptr(),
            brs as isize,
            bcs as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

enum MatMulForm {
    /// `a` is `[rows, k]` after flattening, `b` is `[k, n]`.
    Flat { rows: usize, k: usize, n: usize },
    Batched {
        batch: usize,
        m: usize,
        k: usize,
        n: usize,
    },
}

fn matmul_form(a: &Tensor, b: &Tensor) -> Result<(MatMulForm, Vec<usize>)> {
    let err = || Error::shape("matmul", a.shape(), b.shape());
    if a.rank() < 2 {
        return Err(err());
    }
    let k = a.shape()[a.rank() - 1];
    match b.rank() {
        2 => {
            if b.shape()[0] != k {
                return Err(err());
            }
            let n = b.shape()[1];
            let rows = a.len() / k.max(1);
            let mut shape = a.shape().to_vec();
            *shape.last_mut().unwrap() = n;
            Ok((MatMulForm::Flat { rows, k, n }, shape))
        }
        3 if a.rank() == 3 => {
            let (batch, m) = (a.shape()[0], a.shape()[1]);
            if b.shape()[0] != batch || b.shape()[1] != k {
                return Err(err());
            }
            let n = b.shape()[2];
            Ok((MatMulForm::Batched { batch, m, k, n }, vec![batch, m, n]))
        }
        _ => Err(err()),
    }
}

fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (form, shape) = matmul_form(a, b)?;
    let mut out = vec![0.0; shape.iter().product()];
    match form {
        MatMulForm::Flat { rows, k, n } => gemm(
            rows,
            k,
            n,
            a.data(),
            (k, 1),
            b.data(),
            (n, 1),
            &mut out,
            0.0,
        ),
        MatMulForm::Batched { batch, m, k, n } => {
            for i in 0..batch {
                gemm(
                    m,
                    k,
                    n,
                    &a.data()[i * m * k..],
                    (k, 1),
                    &b.data()[i * k * n..],
                    (n, 1),
                    &mut out[i * m * n..],
                    0.0,
                );
            }
        }
    }
    Tensor::new(shape, out)
}

fn matmul_backward(a: &Tensor, b: &Tensor, grad: &Tensor) -> Result<Vec<Tensor>> {
    let (form, _) = matmul_form(a, b)?;
    let g = grad.data();
    let mut ga = vec![0.0; a.len()];
    let mut gb = vec![0.0; b.len()];
    match form {
        MatMulForm::Flat { rows, k, n } => {
            // dA = G B^T, dB = A^T G
            gemm(rows, n, k, g, (n, 1), b.data(), (1, n), &mut ga, 0.0);
            gemm(k, rows, n, a.data(), (1, k), g, (n, 1), &mut gb, 0.0);
        }
        MatMulForm::Batched { batch, m, k, n } => {
            for i in 0..batch {
                let gi = &g[i * m * n..];
                gemm(
                    m,
                    n,
                    k,
                    gi,
                    (n, 1),
                    &b.data()[i * k * n..],
                    (1, n),
                    &mut ga[i * m * k..],
                    0.0,
                );
                gemm(
                    k,
                    m,
                    n,
                    &a.data()[i * m * k..],
                    (1, k),
                    gi,
                    (n, 1),
                    &mut gb[i * k * n..],
                    0.0,
                );
            }
        }
    }
    Ok(vec![
        Tensor::from_parts(a.shape(), ga),
        Tensor::from_parts(b.shape(), gb),
    ])
}
