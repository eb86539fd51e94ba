use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Argument outside the mathematical domain of an operation (evanescent
    /// wavevector, non-positive idler frequency, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported pump profile for {0}: a Gaussian pump is required")]
    UnsupportedProfile(&'static str),

    #[error(
        "quadrature did not converge: achieved {achieved:.3e} > requested {requested:.3e} \
         (n_theta = {n_theta}, {refinements} refinements)"
    )]
    NonConvergence {
        achieved: f64,
        requested: f64,
        n_theta: usize,
        refinements: usize,
    },

    #[error("x_I window too small: boundary ratio {ratio:.2e} at half-width {half_width:.3e} m")]
    WindowTooSmall { ratio: f64, half_width: f64 },

    #[error("bracket failure: {reason}")]
    Bracket {
        reason: String,
        /// `(d, dip)` pairs evaluated by the coarse scan.
        scan: Vec<(f64, f64)>,
    },

    #[error("malformed profile: {0}")]
    MalformedProfile(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("empty axis: {0}")]
    EmptyAxis(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
