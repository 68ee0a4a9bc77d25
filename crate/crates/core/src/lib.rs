pub mod align;
pub mod chi2;
pub mod concepts;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod graph;
pub mod pipeline;
pub mod pseudocorpus;
pub mod seed;
pub mod synth;
pub(crate) mod tsv;
pub mod unit;

pub use error::{Error, Result};
