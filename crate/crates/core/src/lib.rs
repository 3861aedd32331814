pub mod archspace;
pub mod dataset;
pub mod encoders;
pub mod error;
pub mod numerics;
pub mod objectives;
pub mod search;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
