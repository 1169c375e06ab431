use std::fmt;

/// Errors raised by quasi-Toeplitz arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum QtError {
    /// The `neg` and `pos` coefficient lists disagree on the constant term.
    ConstantTermMismatch {
        neg: f64,
        pos: f64,
    },
    /// A power series with vanishing constant term cannot be inverted.
    NonInvertibleSeries,
    /// An iteration did not reach its tolerance.
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
    /// The symbol has (numerically) a zero on the unit circle.
    SymbolVanishesOnCircle {
        min_modulus: f64,
    },
    /// Reblocking size is smaller than the symbol bandwidth.
    BlockTooSmall {
        block: usize,
        required: usize,
    },
    /// A matrix pivot or inverse is numerically singular.
    Breakdown {
        what: &'static str,
    },
    /// Wiener-Hopf factorization could not be computed.
    FactorizationFailed(String),
    /// The Sherman-Morrison core `I + V^T T(a)^{-1} U` is singular.
    SingularSchurComplement {
        condition: f64,
    },
    /// A finite matrix could not be inverted.
    SingularMatrix(String),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// A Denman-Beavers iterate could not be inverted.
    SingularIterate(Box<QtError>),
    NegativeCoefficient {
        index: i64,
        value: f64,
    },
    Unsupported(String),
    InvalidArgument(String),
    Parse {
        line: usize,
        message: String,
    },
}

impl fmt::Display for QtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QtError::ConstantTermMismatch { neg, pos } => {
                write!(f, "constant terms differ: neg[0] = {neg}, pos[0] = {pos}")
            }
            QtError::NonInvertibleSeries => write!(f, "power series has zero constant term"),
            QtError::NoConvergence { what, iterations } => {
                write!(f, "{what} did not converge after {iterations} iterations")
            }
            QtError::SymbolVanishesOnCircle { min_modulus } => write!(
                f,
                "symbol vanishes on the unit circle (min modulus {min_modulus:.3e})"
            ),
            QtError::BlockTooSmall { block, required } => {
                write!(f, "block size {block} smaller than bandwidth {required}")
            }
            QtError::Breakdown { what } => write!(f, "breakdown: {what} is numerically singular"),
            QtError::FactorizationFailed(msg) => {
                write!(f, "could not compute UL factorization: {msg}")
            }
            QtError::SingularSchurComplement { condition } => write!(
                f,
                "Sherman-Morrison core is numerically singular (condition {condition:.3e})"
            ),
            QtError::SingularMatrix(msg) => write!(f, "singular matrix: {msg}"),
            QtError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            QtError::SingularIterate(inner) => write!(f, "singular iterate: {inner}"),
            QtError::NegativeCoefficient { index, value } => {
                write!(f, "coefficient {index} is negative ({value})")
            }
            QtError::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            QtError::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            QtError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
        }
    }
}

impl std::error::Error for QtError {}

pub type Result<T> = std::result::Result<T, QtError>;
