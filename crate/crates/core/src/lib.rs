//! Synthetic curve-shape and momentum series, simplified pattern mining, the
//! pattern-count regression model, baseline learners, and the
//! selected-sample precision benchmark that compares them.

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod generators;
pub mod io;
pub mod learners;
pub mod oracles;
pub mod patterns;
pub mod rng;
pub mod series;
pub mod smcsf;

pub use dataset::{Dataset, Label, LabeledWindow, Provenance};
pub use error::{Error, Result};
pub use exec::Exec;
pub use series::Family;
