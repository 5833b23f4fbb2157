//! Verified enclosures over closed rational boxes.
//!
//! Every endpoint is an exact [`BigRational`]. Polynomial operations are
//! carried out exactly; transcendental nodes round outward to a dyadic grid
//! whose spacing is governed by a [`Precision`].

mod eval;
mod transcendental;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use eval::{eval_term, eval_vector, excludes_zero, ineq_band, IneqBand, Program};
pub use transcendental::{cos_interval, exp_interval, pi_enclosure, sin_interval, sqrt_interval};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain violation in {op}: argument {arg}")]
    Domain { op: &'static str, arg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("box has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("empty interval: lower bound {lo} exceeds upper bound {hi}")]
    Inverted { lo: String, hi: String },
    #[error("precision must be at least 1 bit")]
    ZeroPrecision,
}

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatInterval {
    lo: Rational,
    hi: Rational,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, IntervalError> {
        if lo > hi {
            return Err(IntervalError::Inverted {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        Ok(Self { lo, hi })
    }

    /// Caller guarantees `lo <= hi`.
    pub(crate) fn new_unchecked(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Self {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn from_ints(lo: i64, hi: i64) -> Result<Self, IntervalError> {
        Self::new(rat(lo), rat(hi))
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / rat(2)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_subset_of(&self, other: &RatInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(&self, other: &RatInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &RatInterval) -> RatInterval {
        Self {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    /// Lower bound of `|x|` over the interval (zero when the interval straddles 0).
    pub fn mag_lower(&self) -> Rational {
        if self.lo.is_positive() {
            self.lo.clone()
        } else if self.hi.is_negative() {
            -self.hi.clone()
        } else {
            Rational::zero()
        }
    }

    /// Upper bound of `|x|` over the interval.
    pub fn mag_upper(&self) -> Rational {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn abs(&self) -> RatInterval {
        Self::new_unchecked(self.mag_lower(), self.mag_upper())
    }

    pub fn bisect(&self) -> (RatInterval, RatInterval) {
        let m = self.mid();
        (
            Self::new_unchecked(self.lo.clone(), m.clone()),
            Self::new_unchecked(m, self.hi.clone()),
        )
    }

    pub fn powi(&self, n: u32) -> RatInterval {
        if n == 0 {
            return Self::point(Rational::one());
        }
        let lo_n = pow_rat(&self.lo, n);
        let hi_n = pow_rat(&self.hi, n);
        if n % 2 == 1 || !self.lo.is_negative() {
            Self::new_unchecked(lo_n, hi_n)
        } else if !self.hi.is_positive() {
            Self::new_unchecked(hi_n, lo_n)
        } else {
            Self::new_unchecked(Rational::zero(), lo_n.max(hi_n))
        }
    }

    pub fn checked_div(&self, rhs: &RatInterval) -> Result<RatInterval, EvalError> {
        if rhs.contains_zero() {
            return Err(EvalError::Domain {
                op: "division",
                arg: rhs.to_string(),
            });
        }
        let inv = Self::new_unchecked(rhs.hi.recip(), rhs.lo.recip());
        Ok(self * &inv)
    }

    /// Outward rounding of both endpoints to multiples of `2^-bits`.
    pub fn snap_outward(&self, bits: u32) -> RatInterval {
        Self::new_unchecked(floor_dyadic(&self.lo, bits), ceil_dyadic(&self.hi, bits))
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Add for &RatInterval {
    type Output = RatInterval;
    fn add(self, rhs: &RatInterval) -> RatInterval {
        RatInterval::new_unchecked(&self.lo + &rhs.lo, &self.hi + &rhs.hi)
    }
}

impl Sub for &RatInterval {
    type Output = RatInterval;
    fn sub(self, rhs: &RatInterval) -> RatInterval {
        RatInterval::new_unchecked(&self.lo - &rhs.hi, &self.hi - &rhs.lo)
    }
}

impl Neg for &RatInterval {
    type Output = RatInterval;
    fn neg(self) -> RatInterval {
        RatInterval::new_unchecked(-self.hi.clone(), -self.lo.clone())
    }
}

impl Mul for &RatInterval {
    type Output = RatInterval;
    fn mul(self, rhs: &RatInterval) -> RatInterval {
        if self.is_point() && rhs.is_point() {
            return RatInterval::point(&self.lo * &rhs.lo);
        }
        if !self.lo.is_negative() && !rhs.lo.is_negative() {
            return RatInterval::new_unchecked(&self.lo * &rhs.lo, &self.hi * &rhs.hi);
        }
        let products = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let mut lo = products[0].clone();
        let mut hi = products[0].clone();
        for p in &products[1..] {
            if *p < lo {
                lo = p.clone();
            }
            if *p > hi {
                hi = p.clone();
            }
        }
        RatInterval::new_unchecked(lo, hi)
    }
}

/// Ordered product of closed intervals. The 0-dimensional box is the
/// singleton `{()}`; its width is zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RatBox(Vec<RatInterval>);

impl RatBox {
    pub fn new(components: Vec<RatInterval>) -> Self {
        Self(components)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn point(coords: &[Rational]) -> Self {
        Self(coords.iter().cloned().map(RatInterval::point).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[RatInterval] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> &RatInterval {
        &self.0[axis]
    }

    pub fn set(&mut self, axis: usize, iv: RatInterval) {
        self.0[axis] = iv;
    }

    pub fn width(&self) -> Rational {
        self.0
            .iter()
            .map(RatInterval::width)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn center(&self) -> Vec<Rational> {
        self.0.iter().map(RatInterval::mid).collect()
    }

    pub fn contains_point(&self, x: &[Rational]) -> bool {
        x.len() == self.dim() && self.0.iter().zip(x).all(|(iv, v)| iv.contains(v))
    }

    pub fn is_subset_of(&self, other: &RatBox) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset_of(b))
    }

    pub fn contains_origin(&self) -> bool {
        self.0.iter().all(RatInterval::contains_zero)
    }

    /// Concatenating product `self × other`.
    pub fn product(&self, other: &RatBox) -> RatBox {
        let mut v = Vec::with_capacity(self.dim() + other.dim());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        RatBox(v)
    }

    pub fn push(&mut self, iv: RatInterval) {
        self.0.push(iv);
    }

    pub fn project(&self, axes: &[usize]) -> RatBox {
        RatBox(axes.iter().map(|&a| self.0[a].clone()).collect())
    }

    pub fn widest_axis(&self) -> Option<usize> {
        (0..self.dim()).max_by(|&a, &b| {
            self.0[a]
                .width()
                .cmp(&self.0[b].width())
                .then_with(|| b.cmp(&a))
        })
    }

    pub fn bisect(&self, axis: usize) -> (RatBox, RatBox) {
        let (l, r) = self.0[axis].bisect();
        let mut a = self.clone();
        let mut b = self.clone();
        a.0[axis] = l;
        b.0[axis] = r;
        (a, b)
    }
}

impl fmt::Display for RatBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "{{()}}");
        }
        for (i, iv) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

impl FromIterator<RatInterval> for RatBox {
    fn from_iter<I: IntoIterator<Item = RatInterval>>(iter: I) -> Self {
        RatBox(iter.into_iter().collect())
    }
}

/// Working precision `p`: each transcendental node contributes at most
/// `2^-p` of slack beyond the true range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Precision(u32);

impl Precision {
    pub fn new(bits: u32) -> Result<Self, IntervalError> {
        if bits == 0 {
            return Err(IntervalError::ZeroPrecision);
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Smallest precision whose slack is at most `r / 8`.
    pub fn for_refinement(r: &Rational) -> Self {
        assert!(r.is_positive(), "refinement width must be positive");
        let target = r / rat(8);
        let mut p = 1u32;
        while slack_of(p) > target {
            p += 1;
        }
        Self(p)
    }

    pub fn slack(self) -> Rational {
        slack_of(self.0)
    }

    pub fn raised(self, extra: u32) -> Self {
        Self(self.0 + extra)
    }
}

fn slack_of(p: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << p as usize)
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn pow_rat(x: &Rational, n: u32) -> Rational {
    num_traits::pow(x.clone(), n as usize)
}

pub(crate) fn floor_dyadic(x: &Rational, bits: u32) -> Rational {
    let scaled = (x.numer() << bits as usize).div_floor_ext(x.denom());
    Rational::new(scaled, BigInt::one() << bits as usize)
}

pub(crate) fn ceil_dyadic(x: &Rational, bits: u32) -> Rational {
    let scaled = (x.numer() << bits as usize).div_ceil_ext(x.denom());
    Rational::new(scaled, BigInt::one() << bits as usize)
}

pub(crate) trait DivRound {
    fn div_floor_ext(&self, d: &BigInt) -> BigInt;
    fn div_ceil_ext(&self, d: &BigInt) -> BigInt;
}

impl DivRound for BigInt {
    fn div_floor_ext(&self, d: &BigInt) -> BigInt {
        num_integer::Integer::div_floor(self, d)
    }
    fn div_ceil_ext(&self, d: &BigInt) -> BigInt {
        -num_integer::Integer::div_floor(&-self, d)
    }
}
