//! Finite-state good-deal pricing engine.

pub mod acceptance;
pub mod cli;
pub mod duality;
pub mod error;
pub mod expr;
pub mod gooddeal;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pricing;
pub mod scenario;
pub mod program;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
