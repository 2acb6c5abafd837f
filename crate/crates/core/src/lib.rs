pub mod error;
pub mod coloring;
pub mod intset;
pub mod engine;
pub mod seed;
pub mod selector;
pub mod verifier;
pub mod montecarlo;
pub mod report;
pub mod cli;

pub use error::{Error, Result};
pub use intset::{IntegerSet, OpenRationalInterval};

/// Exact membership probabilities.
pub type ExactProbability = num_rational::Ratio<i64>;
/// Floating-point membership probabilities.
pub type FloatProbability = f64;
