pub mod bandit;
pub mod error;
pub mod experiment;
pub mod instability;
pub mod lp;
pub mod market;
pub mod rng;
pub mod zerosum;

pub use error::{Error, Result};
