use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::{Gradients, ParamId, ParamStore, Tensor};

/// ADAM optimizer state with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: BTreeMap<ParamId, Tensor>,
    second: BTreeMap<ParamId, Tensor>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to every parameter that has a gradient.
    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) -> Result<()> {
        for (id, g) in grads.iter() {
            if params.get(id).shape() != g.shape() {
                return Err(Error::shape("adam_step", params.get(id).shape(), g.shape()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (id, g) in grads.iter() {
            let p = params.get_mut(id);
            let m = self
                .first
                .entry(id)
                .or_insert_with(|| Tensor::zeros(g.shape()));
            let v = self
                .second
                .entry(id)
                .or_insert_with(|| Tensor::zeros(g.shape()));
            let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
            for (i, &gi) in g.data().iter().enumerate() {
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * gi;
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * gi * gi;
                let mhat = md[i] / c1;
                let vhat = vd[i] / c2;
                pd[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tape;

    fn grads_for(
        store: &ParamStore,
        f: impl Fn(&mut Tape, crate::numerics::Var) -> crate::numerics::Var,
    ) -> Gradients {
        let mut tape = Tape::new();
        let w = store.leaf(&mut tape, ParamId(0));
        let loss = f(&mut tape, w);
        tape.backward(loss).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut store = ParamStore::new();
        store.add("w", Tensor::vector(vec![0.5, -1.5]));
        let before = store.clone();
        let g = grads_for(&store, |t, _| t.constant(Tensor::scalar(1.0)));
        let mut adam = Adam::new(1e-3);
        adam.step(&mut store, &g).unwrap();
        assert_eq!(store, before);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn first_step_closed_form() {
        let mut store = ParamStore::new();
        store.add("w", Tensor::scalar(0.0));
        // d/dw of w is 1
        let g = grads_for(&store, |_, w| w);
        let mut adam = Adam::new(1e-3);
        adam.step(&mut store, &g).unwrap();
        let delta = store.get(ParamId(0)).data()[0];
        assert!((delta - (-1e-3 / (1.0 + 1e-8))).abs() < 1e-18, "{delta}");
    }

    #[test]
    fn first_step_is_sign_of_gradient() {
        for scale in [1e-3, 0.3, 250.0, -4.0] {
            let mut store = ParamStore::new();
            store.add("w", Tensor::scalar(1.0));
            let g = grads_for(&store, |t, w| t.scale(w, scale).unwrap());
            let mut adam = Adam::new(1e-3);
            adam.step(&mut store, &g).unwrap();
            let delta = store.get(ParamId(0)).data()[0] - 1.0;
            assert!((delta.abs() - 1e-3).abs() < 1e-6, "{scale}: {delta}");
            assert_eq!(delta.signum(), -scale.signum());
        }
    }
}
