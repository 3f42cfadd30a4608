pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod logspace;
pub mod oracle;
pub mod polymer;
pub mod rng;
pub mod spin_model;
pub mod verify;

pub use error::{Error, Result};
