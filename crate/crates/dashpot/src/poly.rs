//! Univariate polynomials with exact big-rational coefficients.
//!
//! Coefficients are stored by ascending power of `z` with trailing zeros
//! trimmed, so the zero polynomial is the empty coefficient list. All
//! arithmetic is exact; the GCD normalizes to monic at every Euclidean
//! step to keep coefficient growth under control.

use crate::rational::format_rational;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Errors from polynomial operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    /// `gcd(0, 0)` is undefined.
    #[error("gcd of two zero polynomials is undefined")]
    BothZero,
}

/// A univariate polynomial over the rationals, indexed by power of `z`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// The constant polynomial 1.
    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    /// A constant polynomial.
    pub fn constant(value: BigRational) -> Self {
        Self::from_coeffs(vec![value])
    }

    /// `value * z^power`.
    pub fn monomial(value: BigRational, power: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); power + 1];
        coeffs[power] = value;
        Self::from_coeffs(coeffs)
    }

    /// Builds a polynomial from ascending-power coefficients, trimming
    /// trailing zeros.
    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Ascending-power coefficients without trailing zeros.
    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// The coefficient of `z^power` (zero beyond the degree).
    pub fn coeff(&self, power: usize) -> BigRational {
        self.coeffs.get(power).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Leading coefficient, or `None` for the zero polynomial.
    pub fn leading_coeff(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    /// Exact Horner evaluation.
    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc * x + c;
        }
        acc
    }

    /// Scales every coefficient by `factor`.
    pub fn scaled(&self, factor: &BigRational) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Self::from_coeffs(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Multiplies by `z^power`.
    pub fn shifted(&self, power: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![BigRational::zero(); power];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    /// The monic normalization (zero stays zero).
    pub fn monic(&self) -> Self {
        match self.leading_coeff() {
            None => Self::zero(),
            Some(lead) => self.scaled(&lead.recip()),
        }
    }

    /// Euclidean division: `self = q * divisor + r` with
    /// `deg r < deg divisor`. `None` when the divisor is zero.
    pub fn div_rem(&self, divisor: &Self) -> Option<(Self, Self)> {
        let dlead = divisor.leading_coeff()?.clone();
        let ddeg = divisor.degree()?;
        let mut rem = self.coeffs.clone();
        if rem.len() < divisor.coeffs.len() {
            return Some((Self::zero(), self.clone()));
        }
        let qlen = rem.len() - ddeg;
        let mut quot = vec![BigRational::zero(); qlen];
        for k in (0..qlen).rev() {
            let factor = &rem[k + ddeg] / &dlead;
            if !factor.is_zero() {
                for (j, d) in divisor.coeffs.iter().enumerate() {
                    let prod = &factor * d;
                    rem[k + j] = &rem[k + j] - &prod;
                }
            }
            quot[k] = factor;
        }
        rem.truncate(ddeg);
        Some((Self::from_coeffs(quot), Self::from_coeffs(rem)))
    }

    /// Exact quotient, or `None` when the division leaves a remainder
    /// (or the divisor is zero).
    pub fn div_exact(&self, divisor: &Self) -> Option<Self> {
        let (q, r) = self.div_rem(divisor)?;
        r.is_zero().then_some(q)
    }

    /// Monic greatest common divisor by the Euclidean algorithm,
    /// normalizing to monic after every remainder step.
    pub fn gcd(a: &Self, b: &Self) -> Result<Self, PolyError> {
        if a.is_zero() && b.is_zero() {
            return Err(PolyError::BothZero);
        }
        let mut p = a.monic();
        let mut q = b.monic();
        while !q.is_zero() {
            let (_, r) = p.div_rem(&q).expect("divisor is nonzero");
            p = q;
            q = r.monic();
        }
        Ok(p)
    }
}

impl Add for &RationalPoly {
    type Output = RationalPoly;
    fn add(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect();
        RationalPoly::from_coeffs(coeffs)
    }
}

impl Sub for &RationalPoly {
    type Output = RationalPoly;
    fn sub(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect();
        RationalPoly::from_coeffs(coeffs)
    }
}

impl Mul for &RationalPoly {
    type Output = RationalPoly;
    fn mul(self, rhs: &RationalPoly) -> RationalPoly {
        if self.is_zero() || rhs.is_zero() {
            return RationalPoly::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RationalPoly::from_coeffs(coeffs)
    }
}

impl Neg for &RationalPoly {
    type Output = RationalPoly;
    fn neg(self) -> RationalPoly {
        RationalPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

/// Canonical text form: descending powers, rational coefficients as `p/q`,
/// e.g. `z^4 + 2 z^3 + 2 z^2`.
impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for power in (0..self.coeffs.len()).rev() {
            let c = &self.coeffs[power];
            if c.is_zero() {
                continue;
            }
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            let coeff_is_one = mag.is_one();
            match power {
                0 => write!(f, "{}", format_rational(&mag))?,
                _ if coeff_is_one => {}
                _ => write!(f, "{} ", format_rational(&mag))?,
            }
            match power {
                0 => {}
                1 => write!(f, "z")?,
                _ => write!(f, "z^{power}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalPoly({self})")
    }
}
