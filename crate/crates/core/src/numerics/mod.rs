//! Self-contained numerical kernels.

pub mod bessel;
pub mod eigh;
pub mod ode;
pub mod quadrature;
mod types;

pub use bessel::{bessel_j, bessel_j_symmetric};
pub use eigh::{eigh, eigh_lowest, Eigh};
pub use ode::{integrate_ode, OdeOptions, Trajectory};
pub use quadrature::{quadrature, quadrature_complex};
pub use types::{ComplexVector2, HermitianMatrix, Matrix2};
