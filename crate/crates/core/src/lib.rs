pub mod domain;
pub mod equilibrium;
pub mod error;
pub mod estimators;
pub mod fixtures;
pub mod io;
pub mod regression;
pub mod simulator;
pub mod tick_policy;

pub use error::{Error, Result};
