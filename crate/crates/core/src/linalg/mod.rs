//! Sparse storage, factorization and eigen-solvers used by the assembly and
//! spectra modules.

pub mod dense;
pub mod envelope;
pub mod lanczos;
pub mod sparse;

pub use sparse::{CsrMatrix, TripletBuilder};
