pub mod calculus;
pub mod cli;
pub mod config;
pub mod error;
pub mod forward;
pub mod gelfand;
pub mod linalg;
pub mod manifold;
pub mod quadrature;
pub mod ucp;

pub use error::{Error, Result};
