//! Exact real arithmetic: rationals, quadratic surds, and sums of square roots.
//!
//! [`ExactReal`] holds rotation numbers and other single-surd inputs and has a
//! fast integer path for `floor(k * x)`. [`RadicalSum`] is the closure of those
//! values under field operations and carries mean indices and resonance sums.

mod arith;
mod radical;
mod real;

pub use arith::{is_square_free, square_free_split};
pub use radical::RadicalSum;
pub use real::ExactReal;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by zero")]
    DivisionByZero,
    #[error("radicand {0} is not positive")]
    NonPositiveRoot(i128),
    #[error("radicand {0} is not square-free (or is below 2)")]
    NotSquareFree(i128),
    #[error("result is not a rational or single quadratic surd")]
    NotQuadratic,
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("iterate {k} is degenerate: k times the value is an integer")]
    DegenerateIterate { k: i128 },
    #[error("cannot parse exact number from {0:?}")]
    Parse(String),
}
