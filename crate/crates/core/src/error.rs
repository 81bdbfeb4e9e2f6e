use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mass must be positive and finite, got {0}")]
    InvalidMass(f64),

    #[error("squared distance must be positive and finite, got {0}")]
    Singular(f64),

    #[error("shape is not a physical triangle (A² = {0:e})")]
    NonPhysicalShape(f64),

    #[error("B vanishes identically along this a-segment")]
    DegenerateSegment,

    #[error("configuration is not balanced: {0}")]
    NotBalanced(String),

    #[error("inertia axis carries no body displacement")]
    DegenerateAxis,

    #[error("total angular momentum vanishes")]
    ZeroMomentum,

    #[error("matrix is not antisymmetric (defect {0:e})")]
    NotAntisymmetric(f64),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("integration aborted at t = {t}: {reason}")]
    IntegrationAbort { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
