//! Device-independent self-testing of multipartite states.
//!
//! Build a [`strategies::Strategy`] (ideal, loaded from a file, or
//! adversarially re-embedded), evaluate its correlations, check a family's
//! self-testing conditions, and run the local isometry that extracts the
//! target state. [`pipeline::verify`] does all of it at once.

pub mod cli;
pub mod conditions;
pub mod correlations;
pub mod error;
pub mod isometry;
pub mod linalg;
pub mod observables;
pub mod pipeline;
pub mod states;
pub mod strategies;

pub use error::{Error, Result};
