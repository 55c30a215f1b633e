pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod magnus;
pub mod model;
pub mod numerics;
pub mod par;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
