//! Interior-penalty discontinuous Galerkin solver for the 2D elastic
//! Helmholtz equations with first-order absorbing boundary conditions, with a
//! conforming P1 baseline and experiment drivers.

pub mod assembly;
pub mod experiments;
pub mod manufactured;
pub mod mesh;
pub mod norms;
pub mod plot;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use assembly::{assemble_dg, assemble_elliptic_projection, assemble_fem, DgSystem, FemSystem};
pub use manufactured::ProblemParams;
pub use mesh::Mesh;
pub use space::{DgField, DgSpace, FemField, FemSpace};
pub use sparse::ComplexSparseMatrix;
