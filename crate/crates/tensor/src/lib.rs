//! Small dense-tensor library with a reverse-mode autodiff tape.
//!
//! Everything the model needs is expressed on row-major matrices: a
//! [`Tensor`] is a shaped buffer, a [`Tape`] records differentiable ops on
//! tensors in execution order and replays them backwards, [`ParamStore`]
//! holds named trainable parameters and [`AdamState`] updates them.
//!
//! Precision is a type parameter ([`Scalar`] is implemented for `f32` and
//! `f64`); gradient checks run at `f64`.

mod adam;
mod checkpoint;
mod error;
pub mod gradcheck;
mod params;
mod scalar;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_header, Checkpoint, CheckpointHeader, ParamEntry};
pub use error::{Result, TensorError};
pub use params::{Bound, ParamStore};
pub use scalar::{Precision, Scalar};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
