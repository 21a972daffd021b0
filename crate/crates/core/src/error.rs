use thiserror::Error;

#[derive(Debug, Error)]
pub enum LapError {
    #[error("shift {re}{im:+}i is numerically in the spectrum (distance {distance:.3e})")]
    SingularShift { re: f64, im: f64, distance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("rigging is not invertible (smallest singular value {0:.3e})")]
    SingularRigging(f64),

    #[error("coupling r = {r} is resonant at lambda = {lambda}")]
    ResonantCoupling { r: f64, lambda: f64 },

    #[error("no non-resonant coupling among the first {0} candidates")]
    ExhaustedCandidates(usize),

    #[error("direction #{index} is not regular at lambda = {lambda}")]
    NotRegularDirection { index: usize, lambda: f64 },

    #[error("vector is not in the kernel (residual {residual:.3e} > {tolerance:.3e})")]
    NotInKernel { residual: f64, tolerance: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("interval endpoint {endpoint} lies within {distance:.3e} of the spectrum")]
    EndpointOnSpectrum { endpoint: f64, distance: f64 },

    #[error("matrix input: {0}")]
    MatrixFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LapError>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LapError::DimensionMismatch { expected, found })
    }
}
