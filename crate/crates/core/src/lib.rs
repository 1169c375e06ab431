//! Arithmetic for quasi-Toeplitz matrices: semi-infinite and finite Toeplitz
//! matrices plus low-rank corner corrections.

pub mod algebra;
pub mod conv;
pub mod correction;
pub mod error;
pub mod fqt;
pub mod hankel;
pub mod matfunc;
pub mod qt;
pub mod symbol;
pub mod textio;
pub mod wiener_hopf;

pub use algebra::Algebra;
pub use correction::Correction;
pub use error::{QtError, Result};
pub use fqt::FiniteQtMatrix;
pub use hankel::{CompressionMethod, HankelProduct};
pub use qt::{invert_toeplitz, InversionReport, QtMatrix};
pub use symbol::LaurentSymbol;
pub use wiener_hopf::{factorize, WienerHopfFactors};
