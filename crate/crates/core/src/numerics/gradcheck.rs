//! Central-difference verification of tape gradients.

use crate::error::{Error, Result};
use crate::numerics::{ParamId, ParamStore, Tape, Tensor, Var};

/// Outcome of a gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic - numeric| / max(1, |analytic|, |numeric|)` over the
    /// checked coordinates.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates where the left and right difference quotients disagree,
    /// i.e. a kink lies within `eps` of the point. They are not compared.
    pub excluded: usize,
}

/// Relative slope jump above which a coordinate counts as non-differentiable.
const KINK_TOL: f64 = 1e-2;

fn scalar_of(tape: &Tape, v: Var) -> Result<f64> {
    let t = tape.value(v);
    let x = t.item().ok_or_else(|| {
        Error::Numerics(format!(
            "checked function must be scalar, got {:?}",
            t.shape()
        ))
    })?;
    if !x.is_finite() {
        return Err(Error::Numerics("non-finite function value".into()));
    }
    Ok(x)
}

fn eval<F>(params: &ParamStore, f: &F) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::untraced();
    let vars: Vec<Var> = params.ids().map(|id| params.leaf(&mut tape, id)).collect();
    let out = f(&mut tape, &vars)?;
    scalar_of(&tape, out)
}

/// Checks the gradient of `f` with respect to every scalar in `params`.
pub fn grad_check_params<F>(params: &ParamStore, f: F, eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if eps <= 0.0 {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.ids().map(|id| params.leaf(&mut tape, id)).collect();
    let out = f(&mut tape, &vars)?;
    let f0 = scalar_of(&tape, out)?;
    let grads = tape.backward(out)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        excluded: 0,
    };
    let mut probe = params.clone();
    for id in params.ids() {
        let zero = Tensor::zeros(params.get(id).shape());
        let analytic = grads.get(id).unwrap_or(&zero);
        for i in 0..params.get(id).len() {
            let x = params.get(id).data()[i];
            probe.get_mut(id).data_mut()[i] = x + eps;
            let fp = eval(&probe, &f)?;
            probe.get_mut(id).data_mut()[i] = x - eps;
            let fm = eval(&probe, &f)?;
            probe.get_mut(id).data_mut()[i] = x;

            let right = (fp - f0) / eps;
            let left = (f0 - fm) / eps;
            if (right - left).abs() > KINK_TOL * 1f64.max(right.abs()).max(left.abs()) {
                report.excluded += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * eps);
            let a = analytic.data()[i];
            let err = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Checks the gradient of a scalar function of a single tensor.
pub fn grad_check<F>(x: &Tensor, f: F, eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut store = ParamStore::new();
    store.add("x", x.clone());
    grad_check_params(&store, |tape, vars| f(tape, vars[0]), eps)
}

/// Convenience for reading a parameter's gradient in tests.
pub fn gradient_of(tape: &Tape, loss: Var, id: ParamId) -> Result<Tensor> {
    let g = tape.backward(loss)?;
    g.get(id)
        .cloned()
        .ok_or_else(|| Error::Trace(format!("parameter {} not on tape", id.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_sum_is_exact() {
        let x = Tensor::vector(vec![0.1, -2.0, 3.5]);
        let r = grad_check(&x, |t, v| t.sum(v), 1e-5).unwrap();
        assert!(r.max_rel_error <= 1e-10, "{r:?}");
        assert_eq!(r.checked, 3);
    }

    #[test]
    fn hinge_kink_is_excluded() {
        // max(0, m - d) with d exactly at the margin
        let x = Tensor::scalar(0.1);
        let r = grad_check(
            &x,
            |t, d| {
                let neg = t.scale(d, -1.0)?;
                let z = t.add_scalar(neg, 0.1)?;
                t.relu(z)
            },
            1e-5,
        )
        .unwrap();
        assert_eq!(r.excluded, 1);
        assert_eq!(r.checked, 0);
    }

    #[test]
    fn smooth_composition() {
        let x = Tensor::vector(vec![0.3, -0.7, 1.1, 0.05]);
        let r = grad_check(
            &x,
            |t, v| {
                let s = t.sigmoid(v)?;
                let sp = t.softplus(v)?;
                let p = t.mul(s, sp)?;
                let e = t.reshape(p, &[2, 2])?;
                let l = t.logsumexp(e, 1)?;
                let q = t.square(l)?;
                t.mean(q)
            },
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_error <= 1e-8, "{r:?}");
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(grad_check(&Tensor::scalar(1.0), |t, v| t.sum(v), 0.0).is_err());
    }
}
