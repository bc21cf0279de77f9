use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("incompatible basis: k + l = {total} exceeds subcell count {subcells}")]
    IncompatibleBasis { total: usize, subcells: usize },

    #[error("averaging matrix is numerically rank deficient (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("coordinate {x} lies outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("conjugate gradients did not converge: relative residual {residual:e} after {iterations} iterations")]
    CgNotConverged { residual: f64, iterations: usize },

    #[error("operator is not positive definite: <p, Ap> = {curvature:e}")]
    Indefinite { curvature: f64 },

    #[error("infeasible starting point: constrained coefficient {index} = {value:e}")]
    Infeasible { index: usize, value: f64 },

    #[error("active set method made no progress after {iterations} outer iterations")]
    CycleDetected { iterations: usize },

    #[error("non-physical state (rho = {rho:e}, p = {pressure:e}){context}")]
    NonPhysical {
        rho: f64,
        pressure: f64,
        context: String,
    },

    #[error("recovery failed in macrocell {macrocell}: {source}")]
    Recovery {
        macrocell: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Riemann problem generates vacuum")]
    Vacuum,

    #[error("Newton iteration for the star pressure did not converge after {iterations} iterations")]
    NewtonNotConverged { iterations: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{step} (t = {time}): {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed profile file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by user input rather than the numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidConfig(_) | Error::IncompatibleBasis { .. } => true,
            Error::Step { source, .. } | Error::Recovery { source, .. } => source.is_config_error(),
            _ => false,
        }
    }

    pub(crate) fn with_context(self, context: impl FnOnce() -> String) -> Self {
        match self {
            Error::NonPhysical { rho, pressure, .. } => Error::NonPhysical {
                rho,
                pressure,
                context: format!(" at {}", context()),
            },
            other => other,
        }
    }
}
