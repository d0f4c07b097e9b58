//! Twisted real spectral triples: finite geometry, twisting operators and
//! lattice product geometries.

pub mod catalog;
pub mod classify;
pub mod cli;
pub mod error;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod report;
pub mod twist;
pub mod triple;

pub use error::{Error, Result};
