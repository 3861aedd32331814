//! Dense `f64` tensors, reverse-mode differentiation and ADAM.

mod adam;
mod gradcheck;
pub mod ops;
mod params;
mod tape;
mod tensor;

pub use adam::Adam;
pub use gradcheck::{grad_check, grad_check_params, gradient_of, GradCheckReport};
pub use ops::{forward_op, OpKind};
pub use params::{ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
