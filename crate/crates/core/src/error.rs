use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, SimError>;

/// Failure modes of the synthesis and verification pipeline.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid transport spec: {0}")]
    Spec(String),

    #[error("invalid control: {0}")]
    Control(String),

    #[error("distortion model misuse: {0}")]
    Model(String),

    #[error("invalid spatial grid: {0}")]
    Grid(String),

    #[error("time {t} outside control domain [0, {limit}]")]
    OutOfDomain { t: f64, limit: f64 },

    #[error("eigenstate order {n} exceeds supported maximum {max}")]
    EigenstateOrder { n: usize, max: usize },

    #[error("state norm {norm} departs from unity beyond tolerance")]
    Unnormalized { norm: f64 },

    #[error("state carries weight {weight:.3e} within the guard margin of the grid edge")]
    BoundaryLeakage { weight: f64 },

    #[error("operands live on different spatial grids")]
    GridMismatch,

    #[error("basis truncation leaves {leakage:.3e} of the state unaccounted for")]
    TruncationLeakage { leakage: f64 },

    #[error("fidelity {value} lies outside [0, 1] beyond the numerical guard band")]
    FidelityRange { value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}
