use uc_lab::config::ConfigError;
use uc_lab::estimator::EstimatorError;
use uc_lab::experiments::ExperimentError;
use uc_lab::geometry::GeometryError;
use uc_lab::solver::SolverError;

/// Failure of a run, split by exit status: bad input versus a numerical
/// breakdown on valid input.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn split(validation: bool, msg: String) -> CliError {
    if validation {
        CliError::Validation(msg)
    } else {
        CliError::Numerical(msg)
    }
}

fn geometry_is_validation(e: &GeometryError) -> bool {
    match e {
        GeometryError::OutOfChart { .. }
        | GeometryError::InvalidParams(_)
        | GeometryError::InvalidChart(_)
        | GeometryError::InvalidDomain(_)
        | GeometryError::PathNotFound { .. }
        | GeometryError::GeometryInfeasible(_) => true,
        GeometryError::CoverFailure(_) => false,
    }
}

fn solver_is_validation(e: &SolverError) -> bool {
    match e {
        SolverError::DimensionMismatch { .. }
        | SolverError::InvalidParams(_)
        | SolverError::InvalidCoefficients(_)
        | SolverError::Io(_)
        | SolverError::Parse(_) => true,
        SolverError::MeshFailure(_) | SolverError::SolveFailure(_) => false,
        SolverError::Geometry(g) => geometry_is_validation(g),
    }
}

fn estimator_is_validation(e: &EstimatorError) -> bool {
    match e {
        EstimatorError::EmptyRegion(_)
        | EstimatorError::RadiiOrder { .. }
        | EstimatorError::BallOutsideDomain { .. }
        | EstimatorError::InvalidParams(_) => true,
        EstimatorError::DegenerateSamples(_) | EstimatorError::InsufficientSamples { .. } => false,
        EstimatorError::Geometry(g) => geometry_is_validation(g),
        EstimatorError::Solver(s) => solver_is_validation(s),
    }
}

fn experiment_is_validation(e: &ExperimentError) -> bool {
    match e {
        ExperimentError::EmptySet(_)
        | ExperimentError::TargetNotSolution(_)
        | ExperimentError::ScheduleInfeasible(_)
        | ExperimentError::InvalidConfig(_) => true,
        ExperimentError::InsufficientPoints { .. }
        | ExperimentError::EigSolveFailure(_)
        | ExperimentError::IllPosedFailure(_) => false,
        ExperimentError::Solver(s) => solver_is_validation(s),
        ExperimentError::Geometry(g) => geometry_is_validation(g),
        ExperimentError::Estimator(x) => estimator_is_validation(x),
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        split(geometry_is_validation(&e), e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        split(solver_is_validation(&e), e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        split(estimator_is_validation(&e), e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        split(experiment_is_validation(&e), e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let validation = match &e {
            ConfigError::Parse(_) | ConfigError::Schema(_) => true,
            ConfigError::Geometry(g) => geometry_is_validation(g),
            ConfigError::Solver(s) => solver_is_validation(s),
        };
        split(validation, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let e: CliError = ExperimentError::EmptySet("x".into()).into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError =
            ExperimentError::Estimator(EstimatorError::Solver(SolverError::SolveFailure("x".into()))).into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = ConfigError::Parse("x".into()).into();
        assert_eq!(e.exit_code(), 2);
    }
}
