pub mod analytics;
pub mod error;
pub mod estimator;
pub mod quad;
pub mod kernel;
pub mod noise;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
