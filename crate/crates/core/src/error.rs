use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polynomial degree {degree} exceeds the supported maximum of {max}")]
    DegreeTooHigh { degree: usize, max: usize },

    #[error(
        "wavefunction {state} leaks to the grid boundary (|psi| = {value:.3e}); widen the grid"
    )]
    BoundaryLeak { state: usize, value: f64 },

    #[error("eigensolver not converged: {0}")]
    NotConverged(String),

    #[error("Boltzmann tail {tail:.3e} exceeds tolerance {tolerance:.1e}; request more states")]
    TruncationError { tail: f64, tolerance: f64 },

    #[error("thermostat diverged (relative drift {drift:.3e}){}", at_point(*.q_c))]
    ThermostatDivergence { drift: f64, q_c: Option<f64> },

    #[error("least-squares normal equations ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("generating-function integrand peaks at q = {q_peak:.4} near the integration edge for J = {j}")]
    BoundaryDominated { j: f64, q_peak: f64 },

    #[error("Legendre supremum for Q = {q} sits on the J-grid edge; extend the J grid")]
    SupremumAtEdge { q: f64 },

    #[error("curvature {curvature:.3e} at the minimum is too small to define a frequency")]
    FlatCurvature { curvature: f64 },

    #[error("minimum of the curve lies at the grid edge (index {index})")]
    MinimumAtEdge { index: usize },

    #[error("energy drift {drift:.3e} exceeds tolerance {tolerance:.1e}")]
    EnergyDrift { drift: f64, tolerance: f64 },

    #[error("time grid is not uniform")]
    NonuniformGrid,

    #[error("unknown {family} strategy `{name}` (available: {available})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        available: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn at_point(q_c: Option<f64>) -> String {
    match q_c {
        Some(q) => format!(" at centroid grid point q_c = {q}"),
        None => String::new(),
    }
}

impl Error {
    /// Attach the centroid grid point to sampler failures.
    pub fn at_centroid(self, q: f64) -> Self {
        match self {
            Error::ThermostatDivergence { drift, .. } => Error::ThermostatDivergence {
                drift,
                q_c: Some(q),
            },
            other => other,
        }
    }
}
