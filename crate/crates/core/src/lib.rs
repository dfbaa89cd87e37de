pub mod error;
pub mod prime;
pub mod rational;
pub mod zp_core;

pub use error::{Error, Result};
pub mod torus_grid;
pub mod encode;
pub mod digest;
pub mod inequalities;
pub mod gap;
pub mod search;
