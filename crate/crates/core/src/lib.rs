//! Simulator for generalized controlled order rearrangement encryption
//! (GCORE) quantum key distribution.

pub mod analytics;
pub mod attacks;
pub mod cli;
pub mod error;
pub mod permutation;
pub mod protocol;
pub mod states;

pub use error::{GcoreError, Result};
