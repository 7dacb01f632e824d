//! Step kernels, the cut metric, multitype branching, dual kernels and
//! inhomogeneous random graphs.

pub mod branching;
pub mod cli;
pub mod cut;
pub mod duality;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod trees;

pub use error::{Error, Result};
pub use kernel::{BlockMatrix, StepFunction, StepKernel, WeightedMeasure};
