//! Scalar field abstraction.
//!
//! Every tensor, matrix and parameter set is generic over a [`Scalar`]. Two
//! implementations exist: [`Rational`] (exact, always reduced)
//! and `f64`. Because the mode is a type parameter, a single tensor can never
//! mix exact and floating entries.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use crate::rational::Rational;

/// Default relative tolerance for numeric rank.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Exact,
    Float,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Exact => f.write_str("exact"),
            ScalarMode::Float => f.write_str("float"),
        }
    }
}

impl std::str::FromStr for ScalarMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ScalarMode::Exact),
            "float" => Ok(ScalarMode::Float),
            other => Err(Error::Document(format!("unknown scalar mode `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const MODE: ScalarMode;

    /// `numer / denom`; panics on a zero denominator.
    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_int(value: i64) -> Self {
        Self::from_ratio(value, 1)
    }

    fn abs(&self) -> Self;

    fn to_f64(&self) -> f64;

    /// `self += a * b` without consuming the operands.
    fn add_product(&mut self, a: &Self, b: &Self);

    /// `self *= other` without consuming the operand.
    fn mul_by(&mut self, other: &Self);

    /// Matrix rank in this scalar mode: exact elimination for rationals,
    /// thresholded singular values (at [`DEFAULT_TOL`]) for floats.
    fn matrix_rank(m: &Matrix<Self>) -> Result<usize>;

    /// Rationals serialize as `"p/q"` strings, floats as JSON numbers.
    fn to_json(&self) -> Value;

    fn from_json(value: &Value) -> Result<Self>;
}

impl Scalar for Rational {
    const MODE: ScalarMode = ScalarMode::Exact;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rational::new(numer, denom)
    }

    fn abs(&self) -> Self {
        Rational::abs(self)
    }

    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }

    fn add_product(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self += &(a * b);
    }

    fn mul_by(&mut self, other: &Self) {
        if other.is_one() {
            return;
        }
        if other.is_zero() {
            self.set_zero();
            return;
        }
        *self *= other;
    }

    fn matrix_rank(m: &Matrix<Self>) -> Result<usize> {
        Ok(m.rank_exact())
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(value: &Value) -> Result<Self> {
        match value {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => match n.as_i64() {
                Some(v) => Ok(Rational::from_integer(v)),
                None => Err(Error::Document(format!(
                    "exact mode expects integers or \"p/q\" strings, got {n}"
                ))),
            },
            other => Err(Error::Document(format!("expected a rational, got {other}"))),
        }
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        numer as f64 / denom as f64
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }

    fn mul_by(&mut self, other: &Self) {
        *self *= other;
    }

    fn matrix_rank(m: &Matrix<Self>) -> Result<usize> {
        m.rank_numeric(DEFAULT_TOL)
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(value: &Value) -> Result<Self> {
        match value {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Document(format!("unrepresentable number {n}"))),
            Value::String(s) => parse_rational(s).map(|r| Scalar::to_f64(&r)),
            other => Err(Error::Document(format!("expected a number, got {other}"))),
        }
    }
}

/// Formats as `p/q`, or just `p` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p`, `-p`, or `p/q` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Document(format!("malformed rational `{s}`"));
    let s = s.trim();
    let (numer, denom) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let numer: BigInt = numer.parse().map_err(|_| bad())?;
    let denom: BigInt = denom.parse().map_err(|_| bad())?;
    if denom.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(numer, denom))
}
