use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates an admissibility constraint.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },

    /// Argument outside the domain of a special function or kernel.
    #[error("domain error in {function}: {reason}")]
    Domain { function: &'static str, reason: String },

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("field contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    /// Spectral data is far from Hermitian, so it cannot be the transform of a real field.
    #[error("spectral data is not Hermitian (relative violation {violation:.3e})")]
    CorruptSpectrum { violation: f64 },

    #[error("Nehari projection undefined: {0}")]
    ProjectionUndefined(&'static str),

    #[error("field is not on the Nehari manifold (relative residual {residual:.3e})")]
    NotOnManifold { residual: f64 },

    #[error("quadrature did not converge (last estimate {estimate:.6e}, error {error:.3e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),

    #[error("singular linear system at row {row}")]
    SingularSystem { row: usize },

    /// The iteration shrank to the zero field; usually the box or grid is too small.
    #[error("iterate collapsed to zero at iteration {iteration}")]
    Collapse { iteration: usize },

    #[error("mass m = {m} outside the admissible range [0, {limit}) for the uniform upper bound")]
    MassOutOfRange { m: f64, limit: f64 },

    #[error("malformed field dump: {0}")]
    FieldFormat(String),

    #[error("config error for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            function,
            reason: reason.into(),
        }
    }
}
