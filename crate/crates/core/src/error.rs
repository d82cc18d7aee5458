use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("metric is not positive definite at {point:?} (leading minor {minor} = {value:e})")]
    NotPositiveDefinite { point: Vec<f64>, minor: usize, value: f64 },

    #[error("point {point:?} lies outside the chart domain: {reason}")]
    Domain { point: Vec<f64>, reason: String },

    #[error("Richardson extrapolation did not settle (discrepancy {discrepancy:e})")]
    DerivativeTolerance { discrepancy: f64 },

    #[error("unsupported dimension n = {n}: {reason}")]
    UnsupportedDimension { n: usize, reason: &'static str },

    #[error("least-squares fit is ill-conditioned (condition {condition:e} > {limit:e})")]
    FitConditioning { condition: f64, limit: f64 },

    #[error("renormalized volume is unstable under dropping the largest rung (change {change:e} > {limit:e})")]
    UnstableFit { change: f64, limit: f64 },

    #[error("normal-form construction failed: {0}")]
    CharacteristicFailure(String),

    #[error("quadrature did not converge (estimate {estimate:e} > tolerance {tolerance:e})")]
    QuadratureTolerance { estimate: f64, tolerance: f64 },

    #[error("eigenfunction solver failed: {0}")]
    SolverFailure(String),

    #[error("eigenfunction is not positive: u({s}) = {u:e}")]
    PositivityViolation { s: f64, u: f64 },

    #[error("boundary is not totally geodesic (|II| = {second_fundamental_form:e})")]
    BoundaryNotGeodesic { second_fundamental_form: f64 },

    #[error("invalid model parameters: {0}")]
    ModelParameter(String),

    #[error("no closed-form data: {0}")]
    NotAvailable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Innermost error beneath any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Attaches the pipeline stage to an error.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage { stage, source: Box::new(e) })
    }
}
