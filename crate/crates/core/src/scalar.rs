//! Coefficient types for the polynomial and matrix layer.
//!
//! Everything in [`crate::algebra`] is generic over [`Scalar`]. The synthesis
//! pipeline itself is instantiated with exact big rationals (see the aliases in
//! the crate root); the floating-point impls exist for numeric evaluation and
//! quick experiments, where "zero" means "negligible".

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed, Zero};

pub trait Scalar:
    Num + Clone + Debug + Display + PartialEq + Neg<Output = Self> + Send + Sync + 'static
{
    /// `true` for types where `==` and `is_zero` are exact.
    const EXACT: bool;

    /// Zero test used when deciding whether a coefficient is dropped.
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn from_i64(v: i64) -> Self;

    fn is_negative(&self) -> bool;

    /// Integer power, `exp >= 0`.
    fn pow_u32(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Scalar for Ratio<i64> {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-12
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-6
    }

    fn from_i64(v: i64) -> Self {
        v as f32
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }
}

/// Renders a scalar with an explicit sign split, used by the pretty printers.
pub(crate) fn split_sign<C: Scalar>(c: &C) -> (bool, C) {
    if c.is_negative() {
        (true, -c.clone())
    } else {
        (false, c.clone())
    }
}

/// Parses `a`, `-a`, `a/b` or a decimal literal into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let int_abs = int.trim_start_matches('-');
        let digits = format!("{int_abs}{frac}");
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let num: BigInt = digits.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(num, den);
        return Some(if neg { -r } else { r });
    }
    let v: BigInt = t.parse().ok()?;
    Some(BigRational::from_integer(v))
}
