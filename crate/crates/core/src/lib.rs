//! Learning-assisted innovized repair (IR2) for evolutionary
//! multi-objective optimization.
//!
//! The crate bundles the repair operator itself together with everything
//! needed to evaluate it: benchmark problems, reference directions,
//! a random-forest learner, NSGA-II / NSGA-III / MOEA/D, indicators and
//! an experiment harness.

pub mod algorithms;
pub mod error;
pub mod forest;
pub mod harness;
pub mod ir2;
pub mod metrics;
pub mod problems;
pub mod refassoc;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
