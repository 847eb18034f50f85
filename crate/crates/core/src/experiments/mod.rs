//! Numerical experiments for the consequences of propagation of smallness:
//! extremal smallness sweeps, global and positive-measure moduli, Cauchy
//! data completion and quantitative Runge approximation.

mod basis;
mod boundary;
mod cauchy;
mod extremal;
mod family;
mod global;
mod modulus;
mod positive_measure;
mod runge;
mod sweep;

pub use basis::HarmonicBasis;
pub use boundary::BoundarySpace;
pub use cauchy::{cauchy_experiment, CauchyConfig, CauchyOutcome, CauchyRow, HolderFit};
pub use extremal::{multiplier_grid, smallness_extremizer, smallness_pencil, ExtremalPoint, PencilProblem, SetGrams};
pub use family::{solution_family, FamilyConfig};
pub use global::{
    extremal_family, global_propagation_experiment, GlobalConfig, GlobalOutcome, GlobalRow, Normaliser, Target,
};
pub use modulus::{fit_exponential_growth, fit_log_modulus, fit_power_law, ExpGrowthFit, ModulusFit, PowerFit};
pub use positive_measure::{
    positive_measure_experiment, MeasurableSet, PositiveMeasureConfig, PositiveMeasureOutcome, PositiveMeasureRow,
};
pub use runge::{
    equation_residual, runge_experiment, Rect, RungeConfig, RungeOutcome, RungeRow, RungeTarget, TargetClass,
    DISCREPANCY_BAND,
};
pub use sweep::{random_solution, smallness_sweep, SweepConfig, SweepOutcome, SweepRow};

use crate::estimator::EstimatorError;
use crate::geometry::GeometryError;
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("need at least {needed} usable points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("eigen solve failed: {0}")]
    EigSolveFailure(String),
    #[error("ill-posed: {0}")]
    IllPosedFailure(String),
    #[error("set is empty at mesh resolution: {0}")]
    EmptySet(String),
    #[error("target is not a solution: {0}")]
    TargetNotSolution(String),
    #[error("schedule infeasible: {0}")]
    ScheduleInfeasible(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
