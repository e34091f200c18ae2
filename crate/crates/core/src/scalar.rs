//! Scalar backends.
//!
//! Everything that evaluates an expression or a differential operator is
//! generic over [`Scalar`]. Three families implement it:
//!
//! * [`Complex64`] for plain floating-point evaluation,
//! * [`ExactComplex`], Gaussian rationals with no rounding,
//! * [`Jet2<T>`], second-order truncated Taylor series over any other scalar.
//!
//! Nesting jets (`Jet2<Jet2<Complex64>>`) gives mixed derivatives along two
//! independent curve parameters, which is how iterated operators are
//! evaluated without building symbolic derivatives on the group.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arithmetic contract shared by every evaluation backend.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;

    /// Lifts a complex double. Exact backends convert the binary value exactly.
    fn from_complex(c: Complex64) -> Self;

    /// Field division; fails when the divisor (or its value part) is zero.
    fn try_div(&self, rhs: &Self) -> Result<Self>;

    /// Value part as a complex double, used for guards and reporting.
    fn value(&self) -> Complex64;

    fn scale(&self, c: Complex64) -> Self {
        self.clone() * Self::from_complex(c)
    }

    fn powu(&self, k: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            k >>= 1;
            if k > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn from_complex(c: Complex64) -> Self {
        c
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.re == 0.0 && rhs.im == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }

    fn value(&self) -> Complex64 {
        *self
    }

    fn scale(&self, c: Complex64) -> Self {
        self * c
    }
}

// ---------------------------------------------------------------------------
// Jets
// ---------------------------------------------------------------------------

/// Truncated Taylor series `a0 + a1·s + a2·s²`.
///
/// For a curve `s ↦ γ(s)` through `γ(0)`, evaluating `f` on the jet of `γ`
/// yields `f(γ(0))`, the first derivative `a1` and half the second
/// derivative `a2`.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet2<T = Complex64> {
    pub a0: T,
    pub a1: T,
    pub a2: T,
}

impl<T: Scalar> Jet2<T> {
    pub fn new(a0: T, a1: T, a2: T) -> Self {
        Jet2 { a0, a1, a2 }
    }

    /// `c ↦ (c, 0, 0)`.
    pub fn constant(c: T) -> Self {
        Jet2 {
            a0: c,
            a1: T::zero(),
            a2: T::zero(),
        }
    }

    /// The curve parameter itself, `(0, 1, 0)`.
    pub fn parameter() -> Self {
        Jet2 {
            a0: T::zero(),
            a1: T::one(),
            a2: T::zero(),
        }
    }

    /// First derivative at `s = 0`.
    pub fn first(&self) -> T {
        self.a1.clone()
    }

    /// Second derivative at `s = 0`, i.e. `2·a2`.
    pub fn second(&self) -> T {
        self.a2.clone() + self.a2.clone()
    }
}

impl<T: fmt::Debug> fmt::Debug for Jet2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet2({:?}, {:?}, {:?})", self.a0, self.a1, self.a2)
    }
}

impl<T: Scalar> Add for Jet2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Jet2 {
            a0: self.a0 + rhs.a0,
            a1: self.a1 + rhs.a1,
            a2: self.a2 + rhs.a2,
        }
    }
}

impl<T: Scalar> Sub for Jet2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Jet2 {
            a0: self.a0 - rhs.a0,
            a1: self.a1 - rhs.a1,
            a2: self.a2 - rhs.a2,
        }
    }
}

impl<T: Scalar> Neg for Jet2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet2 {
            a0: -self.a0,
            a1: -self.a1,
            a2: -self.a2,
        }
    }
}

impl<T: Scalar> Mul for Jet2<T> {
    type Output = Self;
    fn mul(self, v: Self) -> Self {
        let u = self;
        Jet2 {
            a0: u.a0.clone() * v.a0.clone(),
            a1: u.a0.clone() * v.a1.clone() + u.a1.clone() * v.a0.clone(),
            a2: u.a0 * v.a2 + u.a1 * v.a1 + u.a2 * v.a0,
        }
    }
}

impl<T: Scalar> Scalar for Jet2<T> {
    fn zero() -> Self {
        Jet2::constant(T::zero())
    }

    fn one() -> Self {
        Jet2::constant(T::one())
    }

    fn from_complex(c: Complex64) -> Self {
        Jet2::constant(T::from_complex(c))
    }

    fn try_div(&self, v: &Self) -> Result<Self> {
        // w·v = u, solved order by order.
        let w0 = self.a0.try_div(&v.a0).map_err(|e| match e {
            Error::DivisionByZero => Error::DivisionBySingularJet { denominator: None },
            other => other,
        })?;
        let w1 = (self.a1.clone() - w0.clone() * v.a1.clone()).try_div(&v.a0)?;
        let w2 = (self.a2.clone() - w0.clone() * v.a2.clone() - w1.clone() * v.a1.clone())
            .try_div(&v.a0)?;
        Ok(Jet2::new(w0, w1, w2))
    }

    fn value(&self) -> Complex64 {
        self.a0.value()
    }

    fn scale(&self, c: Complex64) -> Self {
        Jet2 {
            a0: self.a0.scale(c),
            a1: self.a1.scale(c),
            a2: self.a2.scale(c),
        }
    }
}

// ---------------------------------------------------------------------------
// Gaussian rationals
// ---------------------------------------------------------------------------

/// Complex number with arbitrary-precision rational parts.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        ExactComplex { re, im }
    }

    /// `(re_num/re_den) + i·(im_num/im_den)`.
    pub fn from_ratios(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> Self {
        ExactComplex {
            re: BigRational::new(BigInt::from(re_num), BigInt::from(re_den)),
            im: BigRational::new(BigInt::from(im_num), BigInt::from(im_den)),
        }
    }

    pub fn from_integers(re: i64, im: i64) -> Self {
        Self::from_ratios(re, 1, im, 1)
    }

    pub fn i() -> Self {
        Self::from_integers(0, 1)
    }

    pub fn conj(&self) -> Self {
        ExactComplex {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// `|z|²`, exact.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// Nearest complex double.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }

    /// Bit size of the largest numerator or denominator, a cheap height measure.
    pub fn height_bits(&self) -> u64 {
        [self.re.numer(), self.re.denom(), self.im.numer(), self.im.denom()]
            .iter()
            .map(|b| b.bits())
            .max()
            .unwrap_or(0)
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerator and denominator: shift both into range first.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| panic!("non-finite constant {x} cannot be made exact"))
}

impl fmt::Debug for ExactComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExactComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{} - {}i", self.re, -self.im.clone())
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

impl Add for ExactComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ExactComplex {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for ExactComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ExactComplex {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for ExactComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ExactComplex {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Neg for ExactComplex {
    type Output = Self;
    fn neg(self) -> Self {
        ExactComplex {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Scalar for ExactComplex {
    fn zero() -> Self {
        ExactComplex {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    fn one() -> Self {
        ExactComplex {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    fn from_complex(c: Complex64) -> Self {
        ExactComplex {
            re: rational_from_f64(c.re),
            im: rational_from_f64(c.im),
        }
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        let d = rhs.norm_sqr();
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // a/b = a·conj(b)/|b|²
        let num = self.clone() * rhs.conj();
        Ok(ExactComplex {
            re: num.re / &d,
            im: num.im / d,
        })
    }

    fn value(&self) -> Complex64 {
        self.to_complex()
    }

    fn scale(&self, c: Complex64) -> Self {
        if c.im == 0.0 && c.re == 1.0 {
            return self.clone();
        }
        self.clone() * Self::from_complex(c)
    }
}

/// Applies one of the four field operations. Division by zero is an error.
pub fn exact_arith(a: &ExactComplex, b: &ExactComplex, op: ArithOp) -> Result<ExactComplex> {
    Ok(match op {
        ArithOp::Add => a.clone() + b.clone(),
        ArithOp::Sub => a.clone() - b.clone(),
        ArithOp::Mul => a.clone() * b.clone(),
        ArithOp::Div => a.try_div(b)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Product of two jets truncated at order two.
pub fn jet_mul<T: Scalar>(u: &Jet2<T>, v: &Jet2<T>) -> Jet2<T> {
    u.clone() * v.clone()
}

/// Quotient of two jets; rejects a divisor with zero value part.
pub fn jet_div<T: Scalar>(u: &Jet2<T>, v: &Jet2<T>) -> Result<Jet2<T>> {
    u.try_div(v)
}
