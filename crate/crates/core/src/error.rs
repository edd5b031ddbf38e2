use thiserror::Error;

/// Errors produced by synthesis, validation, and simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The regulator equations `AX + bU = 0, cX = 1` have no solution; the
    /// plant has a transmission zero at the origin.
    #[error("regulator equations are singular (transmission zero at the origin)")]
    SingularSystem,

    #[error("pair (A, b) is not controllable")]
    Uncontrollable,

    #[error("pair (c, A) is not observable")]
    Unobservable,

    #[error("matrix is not Hurwitz (max eigenvalue real part {0:.6e})")]
    NotHurwitz(f64),

    #[error("invalid pole set: {0}")]
    InvalidPoles(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("static output-feedback certificate rejected: {0}")]
    CertificateInvalid(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The integrator detected a non-finite state component.
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
