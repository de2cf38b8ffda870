//! Exact rational scalars for sampler rates and delays.
//!
//! Whether a set of samplers shares a supporting grid is a question of
//! integer divisibility and congruence, so rates and delays are kept exact
//! end to end and only converted to floating point at evaluation time.

use num_integer::Integer;
use num_rational::Ratio;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// A rational scalar in lowest terms with a positive denominator.
///
/// Zero is stored as `0/1`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(Ratio<i64>);

impl Rational {
    /// Builds `numerator/denominator`, reducing to lowest terms.
    ///
    /// Panics if `denominator` is zero.
    pub fn new(numerator: i64, denominator: i64) -> Self {
        assert!(denominator != 0, "rational denominator must be nonzero");
        Rational(Ratio::new(numerator, denominator))
    }

    pub const fn zero() -> Self {
        Rational(Ratio::new_raw(0, 1))
    }

    pub const fn one() -> Self {
        Rational(Ratio::new_raw(1, 1))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn numerator(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denominator(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        *self.0.numer() == 0
    }

    pub fn is_positive(&self) -> bool {
        *self.0.numer() > 0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(Ratio::new(self.0.numer().abs(), *self.0.denom()))
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(&self) -> Self {
        Rational(self.0 - self.0.floor())
    }

    pub fn floor_to_integer(&self) -> i64 {
        self.0.floor().to_integer()
    }

    /// Exact integer value; panics when the denominator is not one.
    pub fn to_integer(&self) -> i64 {
        assert!(self.is_integer(), "rational {self} is not an integer");
        self.0.to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Greatest rational dividing both arguments into integers.
    pub fn gcd(a: Rational, b: Rational) -> Rational {
        if a.is_zero() {
            return b.abs();
        }
        if b.is_zero() {
            return a.abs();
        }
        let num = a.numerator().abs().gcd(&b.numerator().abs());
        let den = (a.denominator() / a.denominator().gcd(&b.denominator())) * b.denominator();
        Rational::new(num, den)
    }

    /// Least positive rational that both arguments divide into integers.
    pub fn lcm(a: Rational, b: Rational) -> Rational {
        assert!(!a.is_zero() && !b.is_zero(), "lcm of zero rational");
        let an = a.numerator().abs();
        let bn = b.numerator().abs();
        let num = an / an.gcd(&bn) * bn;
        let den = a.denominator().gcd(&b.denominator());
        Rational::new(num, den)
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational(self.0 + rhs.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        Rational(self.0 - rhs.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        Rational(self.0 * rhs.0)
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(self.0 / rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Mul<i64> for Rational {
    type Output = Rational;
    fn mul(self, rhs: i64) -> Rational {
        Rational(self.0 * Ratio::from_integer(rhs))
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator(), self.denominator())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Error produced when parsing a `"p/q"` string fails.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {literal:?}: {reason}")]
pub struct ParseRationalError {
    pub literal: String,
    pub reason: String,
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `"p/q"` or a bare integer `"p"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| ParseRationalError {
            literal: s.to_string(),
            reason: reason.to_string(),
        };
        let t = s.trim();
        let (num_str, den_str) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let num: i64 = num_str.parse().map_err(|_| fail("bad numerator"))?;
        let den: i64 = den_str.parse().map_err(|_| fail("bad denominator"))?;
        if den == 0 {
            return Err(fail("zero denominator"));
        }
        Ok(Rational::new(num, den))
    }
}
