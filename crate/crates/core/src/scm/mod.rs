//! Exact discrete structural causal models.
//!
//! Mechanisms are conditional probability tables with exact rational
//! entries. Joint, truncated and interventional distributions are computed
//! by full enumeration, either exactly ([`Rational`]) or in floating point
//! (`f64`) for larger tables.

mod joint;
mod model;
mod model_dsl;
mod random;
mod sample;

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use joint::{Assignment, JointDistribution};
pub use model::{
    compile_mechanism, DiscreteModel, Mechanism, StructuralEquationSpec, StructuralMap, DEFAULT_CELL_BUDGET,
};
pub use model_dsl::{parse_model, to_model_dsl};
pub use random::{random_dag, random_model, RandomModelConfig};
pub use sample::{fit, Dataset};

pub type Rational = BigRational;

/// Number type a distribution is computed in.
pub trait Prob:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    const EXACT: bool;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact types ignore `tol`.
    fn close(&self, other: &Self, tol: f64) -> bool;
}

impl Prob for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl Prob for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn close(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `a/b`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Model(format!("invalid probability literal `{s}`"));
    let r = if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Rational::new(n, d)
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: BigInt = if int.is_empty() { BigInt::zero() } else { int.parse().map_err(|_| bad())? };
        let scale = num::pow(BigInt::from(10), frac.len());
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        Rational::new(int * &scale + frac, scale)
    } else {
        Rational::from_integer(s.parse().map_err(|_| bad())?)
    };
    if r.is_negative() {
        return Err(bad());
    }
    Ok(r)
}

/// Exact rational rendered as `a/b` (or `a` when integral).
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
