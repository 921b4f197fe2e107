//! Polynomial differential operators on entire functions: hypercyclicity
//! criteria, lacunary bases, right inverses and constructive synthesis.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod cli;
pub mod criterion;
pub mod error;
pub mod inverse;
pub mod lacunary;
pub mod logmag;
pub mod scalar;
pub mod sequences;
pub mod series;
pub mod synthesis;

use num_complex::Complex;
use num_rational::BigRational;

pub use error::{Error, Result};
pub use logmag::LogMagnitude;
pub use scalar::Real;
pub use series::{ExponentialCombo, PolynomialOperator, TaylorPolynomial};

/// Exact complex rational scalar.
pub type ExactScalar = Complex<BigRational>;
/// Double precision complex scalar.
pub type FloatScalar = Complex<f64>;

pub type ExactPoly = TaylorPolynomial<BigRational>;
pub type FloatPoly = TaylorPolynomial<f64>;
pub type ExactOperator = PolynomialOperator<BigRational>;
pub type FloatOperator = PolynomialOperator<f64>;
