//! Off-policy temporal-difference prediction with linear function
//! approximation.
//!
//! The crate is split along the lines of an experiment:
//!
//! - [`env`]: the Collision task, its policies, random binary features, the
//!   ground-truth values and the value-error objective.
//! - [`learners`]: eleven off-policy prediction algorithms behind one step
//!   interface.
//! - [`harness`]: parameter grids, deterministic runs, cross-run statistics,
//!   CSV output and best-instance reruns.
//! - [`report`]: derived tables (sensitivity, learning curves, waterfall)
//!   computed from sweep output files only.
//! - [`verify`]: small-scale self-checks of the learners and environment.

pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod learners;
mod linalg;
pub mod report;
pub mod seeding;
pub mod verify;

pub use error::{Error, Result};
