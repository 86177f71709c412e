pub mod cli;
pub mod dsp;
pub mod error;
pub mod evalx;
pub mod grid;
pub mod ingest;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
pub use rng::SplitMix64;
