//! Recovery of gradient-sparse images from a few tomographic projections.
//!
//! The crate covers the whole pipeline: grid graphs and the discrete gradient
//! ([`lattice`]), binary projection matrices ([`geometry`]), matrix
//! diagnostics ([`analysis`]), cosparsity bounds ([`bounds`]), random test
//! phantoms ([`phantom`]), a sparse LP solver ([`lpsolve`]), total-variation
//! recovery with uniqueness certificates ([`recovery`]) and phase-transition
//! experiments ([`harness`]).

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod lpsolve;
pub mod mtx;
pub mod phantom;
pub mod recovery;
pub mod sparse;

pub use error::{Error, Result};
pub use geometry::{build_projection_2d, build_projection_3d, Perturbation, ProjectionGeometry};
pub use lattice::{Cosupport, Image, Lattice};
pub use sparse::SparseMatrix;
