pub mod cross;
pub mod dense;
pub mod error;
pub mod eval;
pub mod listwise;
pub mod model;
pub mod pipeline;
pub mod rewrite;
pub mod services;
pub mod sparse;
pub mod stats;
pub mod synthetic;
pub mod tuning;

pub use error::{Error, Result, ServiceError};
