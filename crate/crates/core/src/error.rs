use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Dimension zero or mismatched shapes.
    Shape(String),
    /// A matrix that must be symmetric positive definite is not.
    NotPositiveDefinite(&'static str),
    /// `w2` and `t12` do not commute; the defect is `‖W₂T₁₂ − T₁₂W₂‖_F`.
    NotCommuting { defect: f64 },
    /// A norm descriptor with an exponent below one or a non-positive weight.
    InvalidNorm(String),
    /// The special duality map is undefined at the origin.
    ZeroVector,
    /// Unknown space tag or Hilbert-space index.
    UnknownSpace(String),
    /// `W^{1/2} M W^{-1/2}` is not symmetric (or has negative spectrum).
    NotPsdLike { defect: f64 },
    /// `λI − M` is singular to working precision.
    Singular { lambda: f64 },
    /// Resolvent parameter at or below the spectral abscissa.
    BelowAbscissa { lambda: f64, abscissa: f64 },
    /// A non-positive resolvent parameter where `λ > 0` is required.
    NonPositiveLambda(f64),
    /// `exp(tM)` left the representable range.
    Overflow,
    /// An operator is not symmetric in the `H₂` inner product.
    NotH2Symmetric { defect: f64 },
    /// Operators attached to different riggings.
    RiggingMismatch,
    /// An eigen or singular value iteration did not converge.
    NoConvergence(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::NotPositiveDefinite(what) => write!(f, "{what} is not symmetric positive definite"),
            Error::NotCommuting { defect } => {
                write!(f, "w2 and t12 do not commute (defect {defect:e})")
            }
            Error::InvalidNorm(msg) => write!(f, "invalid norm: {msg}"),
            Error::ZeroVector => write!(f, "the special duality map is undefined at x = 0"),
            Error::UnknownSpace(tag) => write!(f, "unknown space tag `{tag}`"),
            Error::NotPsdLike { defect } => {
                write!(f, "matrix is not similar to a symmetric PSD matrix (defect {defect:e})")
            }
            Error::Singular { lambda } => write!(f, "λI − M is singular at λ = {lambda}"),
            Error::BelowAbscissa { lambda, abscissa } => {
                write!(f, "λ = {lambda} does not exceed the spectral abscissa {abscissa}")
            }
            Error::NonPositiveLambda(l) => write!(f, "λ must be positive, got {l}"),
            Error::Overflow => write!(f, "matrix exponential overflowed"),
            Error::NotH2Symmetric { defect } => {
                write!(f, "operator is not H₂-symmetric (defect {defect:e})")
            }
            Error::RiggingMismatch => write!(f, "operators live on different riggings"),
            Error::NoConvergence(what) => write!(f, "{what} did not converge"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
