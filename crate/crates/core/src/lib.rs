//! Return maps of nilpotent monodromic singularities via the Poincaré–Lyapunov
//! normal form.

pub mod error;
pub mod ode;
pub mod oracle;
pub mod profile;
pub mod quadrature;
pub mod retmap;
pub mod series;
pub mod sysnorm;
pub mod vsolver;
pub mod xi;

pub use error::{Error, Result};
