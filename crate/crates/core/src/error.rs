use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model/source combination not supported by the exact catalog: {0}")]
    UnsupportedCombination(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("evaluation at a pole (Λ = {0})")]
    PoleEvaluation(Complex64),
    #[error("evaluation at a branch point (Λ = {0})")]
    BranchPointEvaluation(Complex64),
    #[error("model is not polynomial in z")]
    NonPolynomialModel,
    #[error("requested order {0} exceeds the supported maximum")]
    OrderOverflow(usize),
    #[error("invalid ghost-pole index {0}")]
    InvalidPoleIndex(i64),
    #[error("ill-conditioned rational fit (residual {0:e})")]
    IllConditioned(f64),
    #[error("denominator root at the expansion point")]
    DegenerateDenominator,
    #[error("coalesced denominator roots")]
    MultipleRoot,
    #[error("search region contains a pole")]
    RegionContainsPole,
    #[error("non-positive parameters: {0}")]
    NonPositiveParameters(String),
    #[error("zero residue at finite pole {0}")]
    ZeroResidue(Complex64),
    #[error("thimble flow stalled at Λ = {0}")]
    FlowStall(Complex64),
    #[error("pole reached outside its convergent sector at Λ = {0}")]
    WrongSector(Complex64),
    #[error("decomposition coefficients are not integers (residual {0:e})")]
    NonIntegerCoefficients(f64),
    #[error("quadrature accuracy not reached (estimate {0:e})")]
    AccuracyNotReached(f64),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("too close to a caustic (k0·|S''|·L² = {0:e})")]
    TooCloseToCaustic(f64),
    #[error("degenerate cubic term")]
    DegenerateCubic,
    #[error("argument overflows: {0}")]
    Overflow(Complex64),
    #[error("caustic could not be classified")]
    UnclassifiedCaustic,
    #[error("basis not closed under the loop: {0}")]
    BasisNotClosed(String),
    #[error("integer rounding failed (residual {0:e})")]
    IntegerRoundingFailure(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
