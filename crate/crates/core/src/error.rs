use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("total dimension {dim} exceeds the ceiling {ceiling}")]
    DimensionCeiling { dim: usize, ceiling: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("squeeze unitary lost unitarity on the lower Fock half (residual {0:.3e})")]
    Truncation(f64),
    #[error("no critical point: Kerr coefficient is zero")]
    NoCriticalPoint,
    #[error("drive {drive:.6e} does not exceed the critical drive {critical:.6e}; no bistable window")]
    NoBistableWindow { drive: f64, critical: f64 },
    #[error("squeezing parameter undefined: (Δm+𝒦)/(Δm−𝒦) = {ratio:.6e}")]
    SqueezingInvalid { ratio: f64 },
    #[error("resonance: {0}")]
    Resonance(String),
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted")]
    StepBudget(usize),
    #[error("positivity violated at t = {t:.6e}: minimum eigenvalue {min_eig:.3e}")]
    Positivity { t: f64, min_eig: f64 },
    #[error("no fidelity peak found: {0}")]
    NoPeak(String),
    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
