//! Exact rationals, parameter polynomials and rational functions with
//! factored denominators.

pub mod poly;
pub mod ratfun;

use thiserror::Error;

pub use num_rational::BigRational as Rational;
pub use poly::{fmt_rational, Monomial, Polynomial};
pub use ratfun::{ratfun_equal, PolyRegistry, RationalFunction, Sign, SignAssignment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("divisor numerator is not a registered polynomial")]
    UnregisteredDivisor,
    #[error("denominator factor #{0} is zero under the sign assignment")]
    ZeroDenominator(usize),
    #[error("no sign assigned to polynomial #{0}")]
    MissingSign(usize),
}

/// Parses `a`, `-a`, `a/b` or a finite decimal such as `-1.25` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, text),
    };
    let value = if let Some((n, d)) = body.split_once('/') {
        let n: num_bigint::BigInt = n.trim().parse().ok()?;
        let d: num_bigint::BigInt = d.trim().parse().ok()?;
        if d == num_bigint::BigInt::from(0) {
            return None;
        }
        Rational::new(n, d)
    } else if let Some((int, frac)) = body.split_once('.') {
        if frac.is_empty() && int.is_empty() {
            return None;
        }
        let digits = format!("{int}{frac}");
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let n: num_bigint::BigInt = digits.parse().ok()?;
        let d = num_traits::pow(num_bigint::BigInt::from(10), frac.len());
        Rational::new(n, d)
    } else {
        if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        Rational::from_integer(body.parse().ok()?)
    };
    Some(if neg { -value } else { value })
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}
