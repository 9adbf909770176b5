pub mod corpus;
pub mod encoder;
pub mod gnn;
pub mod gradcheck;
pub mod pipeline;
pub mod srl;
mod error;

pub use error::{Error, Result};
