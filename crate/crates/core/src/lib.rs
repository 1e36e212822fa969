//! Dynamic directed networks with mixed-membership communities, reciprocity
//! and Markovian edge turnover: likelihood, EM inference, sampling and
//! evaluation.

pub mod em;
pub mod error;
pub mod eval;
pub mod generator;
pub mod graph;
pub mod io;
pub mod model;
pub mod params;
pub mod preprocess;
mod terms;

pub use error::{Error, Result};
pub use graph::{reciprocity, Snapshot, TemporalNetwork};
pub use params::{Hyperparams, ModelParams, RecLag, Variant};
pub use terms::TermMask;
