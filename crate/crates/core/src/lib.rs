//! Chiral signature operators and their indices for explicitly solvable
//! models: a shift causal fermion system, a conformally deformed torus,
//! a spiral model with a perturbed measure, and finite-lifetime examples.

pub mod angle;
pub mod cfs;
pub mod error;
pub mod homotopy;
pub mod index;
pub mod report;
pub mod scenario;
pub mod spectral;
pub mod spiral;
pub mod torus;
pub mod trig;

pub use error::{Error, Result};
