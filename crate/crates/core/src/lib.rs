pub mod dyadic;
pub mod entropy;
pub mod error;
pub mod finite;
pub mod numeric;
pub mod passage;
pub mod quad;
pub mod simplex;
pub mod solvers;
pub mod stopped_pair;

pub use error::{Error, Result};
