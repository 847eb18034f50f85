//! Interface-fitted P1 finite elements for `∇·(a∇u) + b·∇u + qu = f + ∇·F`.

mod assembly;
mod coefficients;
mod field;
pub mod io;
pub mod linalg;
mod mesh;
mod oracle;
mod transmission;

pub use assembly::{
    assemble_load, assemble_stiffness, laplace_stiffness, mass_matrix, solve_dirichlet, DirichletSolver,
};
pub use coefficients::{CoefficientBounds, MatrixField, PiecewiseCoefficients, ScalarField, VectorField};
pub use field::DiscreteField;
pub use mesh::{
    build_mesh, slab_mesh, star_mesh, BoundaryEdge, Mesh, MARKER_BOTTOM, MARKER_LEFT, MARKER_RIGHT, MARKER_TOP,
};
pub use oracle::ExactFlatSolution;
pub use transmission::{verify_transmission, TransmissionReport};

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, SolverError>;
