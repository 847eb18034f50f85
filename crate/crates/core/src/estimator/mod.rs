//! Region-restricted norms and the checks and fits of the three-region,
//! three-ball and propagation inequalities.

mod fit;
mod lift;
mod norms;
mod propagation;
mod surface;
mod three_ball;
mod three_region;

pub use fit::{
    envelope_log_c, fit_exponent, slack, ExponentFit, InequalityReport, NormSample, PropagationBound, Regime,
    ThreeBallShape, INEQUALITY_HEADER,
};
pub use lift::{lift_inhomogeneous, LiftRegion, LiftReport, ScalarData, VectorData};
pub use norms::{ball_l2_norm, region_l2_norm, RegionQuadrature, SUBDIVISION_DEPTH};
pub use propagation::{propagation_check, ChainGeometry, FieldCertificate, PropagationOptions, PropagationOutcome};
pub use surface::{ball_runs, ball_surface_measure, kappa, sigma_in_d, sigma_in_omega, surface_measure};
pub use three_ball::{fit_family, three_ball_check, BallRadii, ThreeBallProbe};
pub use three_region::{three_region_check, ThreeRegionProbe};

use crate::geometry::GeometryError;
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error("region does not meet the mesh: {0}")]
    EmptyRegion(String),
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("radii must satisfy 0 < r1 < r2 < r3, got {r1}, {r2}, {r3}")]
    RadiiOrder { r1: f64, r2: f64, r3: f64 },
    #[error("ball of radius {r} about ({x:.4}, {y:.4}) leaves the domain")]
    BallOutsideDomain { x: f64, y: f64, r: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;
