//! Numerical laboratory for Korányi spherical means on the free two-step
//! nilpotent Lie group `N_v`.

pub mod error;
pub mod group;
pub mod maximal;
pub mod plancherel;
pub mod quadrature;
pub mod special_fn;
pub mod squarefn;
pub mod spherical;

pub use error::{Error, Result};
