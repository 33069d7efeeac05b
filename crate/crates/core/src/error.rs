use thiserror::Error;

/// Errors from truncated series arithmetic.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SeriesError {
    #[error("operand has a nonzero constant term")]
    NonzeroConstantTerm,
    #[error("composition requires a power-series outer and an inner with zero constant term")]
    CompositionPrecondition,
    #[error("reversion requires f(0) = 0 and f'(0) != 0")]
    VanishingLinearCoefficient,
    #[error("division by a series with no known nonzero coefficient")]
    DivisionByZero,
    #[error("result has no finite truncation; truncate an operand first")]
    UnboundedResult,
    #[error("operands have no overlapping validity window")]
    EmptyWindow,
}

/// Errors from cap-complex construction and validation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CapError {
    #[error("cap {cap}: univalence witness failed: {detail}")]
    UnivalenceViolation { cap: usize, detail: String },
    #[error("caps {a} and {b}: sampled closures intersect or violate the separation margin (distance {dist:.3e}, required {required:.3e})")]
    OverlapViolation {
        a: usize,
        b: usize,
        dist: f64,
        required: f64,
    },
    #[error("cap {cap}: {detail}")]
    InvalidSpec { cap: usize, detail: String },
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Errors from coefficient-space operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpaceError {
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("insufficient samples: top-quarter Fourier energy {energy:.3e} of total exceeds 1e-8")]
    InsufficientSamples { energy: f64 },
    #[error("curve index {curve} out of range for {caps} caps")]
    CurveOutOfRange { curve: usize, caps: usize },
    #[error("form on cap {form_cap} cannot be restricted to curve {curve}")]
    WrongSide { form_cap: usize, curve: usize },
}

/// Errors from operator assembly and the numerical solvers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum OperatorError {
    #[error(
        "power iteration did not converge within {iterations} iterations (residual {residual:.3e})"
    )]
    PowerIterationDiverged { iterations: usize, residual: f64 },
    #[error("quadrature self-test failed: <e1,e1> = {got:.12} (expected 1 within 1e-10)")]
    QuadratureTooCoarse { got: f64 },
    #[error("Sigma_2 Gram matrix is not positive definite at this truncation")]
    GramNotPositiveDefinite,
    #[error("scattering completion failed: pre-completion orthonormality residual {residual:.3e} exceeds {threshold:.3e}")]
    CompletionFailure { residual: f64, threshold: f64 },
    #[error("collocation system ill-conditioned: condition number {cond:.3e}")]
    IllConditioned { cond: f64 },
    #[error("harmonic measures require at least two caps")]
    NeedTwoCaps,
    #[error("boundary data unsolvable: residual {residual:.3e} above tolerance {tolerance:.3e}")]
    Unsolvable { residual: f64, tolerance: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
}
