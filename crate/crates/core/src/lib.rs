//! Pointwise verification of locally conformally symplectic geometry.

pub mod actions;
pub mod chart;
pub mod cohomology;
pub mod coupling;
pub mod decl;
pub mod error;
pub mod expr;
pub mod form;
pub mod gallery;
pub mod jet;
pub mod lcs;
mod linalg;
pub mod multiindex;
pub mod random;
pub mod reduction;
pub mod report;
pub mod runner;

pub use chart::{Chart, SmoothMap};
pub use error::{Error, Result};
pub use expr::Expr;
pub use form::{DifferentialForm, EndoField, ScalarField, VectorField};
pub use jet::Jet;
