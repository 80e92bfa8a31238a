pub mod cli;
pub mod error;
pub mod expr;
pub mod funcalc;
pub mod lattice;
pub mod models;
pub mod starform;
pub mod verify;

pub use error::{Error, Region, Result};
