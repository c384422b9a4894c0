use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: a precondition or a structural invariant was violated.
    Validation,
    /// A solver, series or iteration failed to converge.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not unimodular (det = {det})")]
    NotUnimodular { det: i64 },
    #[error("matrix is not hyperbolic (trace = {trace})")]
    NotHyperbolic { trace: i64 },
    #[error("negative trace {trace}: only automorphisms with positive eigenvalues are supported")]
    NegativeEigenvalues { trace: i64 },
    #[error("periodic point count {count} exceeds enumeration cap {cap}")]
    EnumerationCapExceeded { count: u128, cap: u64 },
    #[error("integer overflow in {context}")]
    IntegerOverflow { context: &'static str },
    #[error("trigonometric sum has imaginary part {imag:e}")]
    RealityViolation { imag: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("coefficients failed to decay along a frequency orbit within {cap} steps")]
    NoConvergence { cap: usize },
    #[error("zero-frequency obstruction in the cohomological equation")]
    MeanObstruction,
    #[error("only {usable} usable scales for the regularity fit (need 4)")]
    InsufficientScales { usable: usize },
    #[error("Newton inversion of the perturbation failed (residual {residual:e})")]
    InverseNewtonDiverged { residual: f64 },
    #[error("invariant splitting collapsed (angle {angle:e})")]
    SplittingCollapse { angle: f64 },
    #[error("Newton iteration diverged (residual {residual:e})")]
    NewtonDiverged { residual: f64 },
    #[error("eigenvalue modulus {modulus} too close to 1")]
    HyperbolicityLost { modulus: f64 },
    #[error("orthogonal iteration on the cocycle did not converge")]
    EigenNotConverged,
    #[error("orbit matching failed at period {period}")]
    MatchFailed { period: usize },
    #[error("roof function is nonpositive ({value})")]
    NonpositiveRoof { value: f64 },
    #[error("series diverges: mu*lambda = {product} <= 1")]
    DivergentSeries { product: f64 },
    #[error("gluing is not transverse (condition number {condition:e})")]
    TransversalityFailure { condition: f64 },
    #[error("second shadowing solution found at distance {distance:e}")]
    UniquenessSuspect { distance: f64 },
    #[error("chart change is not adapted: {condition}")]
    ChartNotAdapted { condition: &'static str },
    #[error("leading coefficient zeta vanished at s = {s} (zeta = {zeta:e})")]
    ZetaVanished { s: f64, zeta: f64 },
    #[error("eigenvalues are resonant ({count} relations)")]
    Resonant { count: usize },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            NoConvergence { .. }
            | IntegerOverflow { .. }
            | InverseNewtonDiverged { .. }
            | SplittingCollapse { .. }
            | NewtonDiverged { .. }
            | HyperbolicityLost { .. }
            | EigenNotConverged
            | MatchFailed { .. }
            | DivergentSeries { .. }
            | UniquenessSuspect { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            NotUnimodular { .. } => "NotUnimodular",
            NotHyperbolic { .. } => "NotHyperbolic",
            NegativeEigenvalues { .. } => "NegativeEigenvalues",
            EnumerationCapExceeded { .. } => "EnumerationCapExceeded",
            IntegerOverflow { .. } => "IntegerOverflow",
            RealityViolation { .. } => "RealityViolation",
            InvalidInput(_) => "InvalidInput",
            NoConvergence { .. } => "NoConvergence",
            MeanObstruction => "MeanObstruction",
            InsufficientScales { .. } => "InsufficientScales",
            InverseNewtonDiverged { .. } => "InverseNewtonDiverged",
            SplittingCollapse { .. } => "SplittingCollapse",
            NewtonDiverged { .. } => "NewtonDiverged",
            HyperbolicityLost { .. } => "HyperbolicityLost",
            EigenNotConverged => "EigenNotConverged",
            MatchFailed { .. } => "MatchFailed",
            NonpositiveRoof { .. } => "NonpositiveRoof",
            DivergentSeries { .. } => "DivergentSeries",
            TransversalityFailure { .. } => "TransversalityFailure",
            UniquenessSuspect { .. } => "UniquenessSuspect",
            ChartNotAdapted { .. } => "ChartNotAdapted",
            ZetaVanished { .. } => "ZetaVanished",
            Resonant { .. } => "Resonant",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
