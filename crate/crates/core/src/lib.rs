pub mod assembly;
pub mod bounds;
pub mod curvature;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod scenario;
pub mod spaceform;
pub mod spectra;

pub use error::{Error, Result};
