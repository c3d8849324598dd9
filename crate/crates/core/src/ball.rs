//! Outward-rounded interval arithmetic on MPFR floats.
//!
//! [`Interval`] is a closed real interval `[lo, hi]` whose endpoints are
//! rounded outward on every operation, so the true value of any expression
//! evaluated on enclosures stays enclosed. [`CBall`] is a rectangular complex
//! enclosure built from two intervals. Reports convert both to the
//! midpoint/radius form.

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Round, Special};
use rug::ops::NegAssign;
use rug::{Float, Integer, Rational};

macro_rules! down {
    ($p:expr, $e:expr) => {
        Float::with_val_round($p, $e, Round::Down).0
    };
}

macro_rules! up {
    ($p:expr, $e:expr) => {
        Float::with_val_round($p, $e, Round::Up).0
    };
}

fn min_f(a: Float, b: Float) -> Float {
    if a <= b {
        a
    } else {
        b
    }
}

fn max_f(a: Float, b: Float) -> Float {
    if a >= b {
        a
    } else {
        b
    }
}

#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

impl Interval {
    /// Builds `[lo, hi]`; panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(x: Float) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn zero(prec: u32) -> Self {
        Self::point(Float::with_val(prec, Special::Zero))
    }

    pub fn one(prec: u32) -> Self {
        Self::point(Float::with_val(prec, 1))
    }

    pub fn from_int(n: i64, prec: u32) -> Self {
        Interval {
            lo: down!(prec, n),
            hi: up!(prec, n),
        }
    }

    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        Interval {
            lo: down!(prec, n),
            hi: up!(prec, n),
        }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        Interval {
            lo: down!(prec, q),
            hi: up!(prec, q),
        }
    }

    /// Encloses an `f64` exactly (every finite double is representable at 53+ bits).
    pub fn from_f64(x: f64, prec: u32) -> Self {
        Self::point(Float::with_val(prec.max(53), x))
    }

    pub fn from_mid_rad(mid: &Float, rad: &Float, prec: u32) -> Self {
        Interval {
            lo: down!(prec, mid - rad),
            hi: up!(prec, mid + rad),
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    fn p2(&self, other: &Interval) -> u32 {
        self.prec().max(other.prec())
    }

    /// Midpoint (rounded to nearest at the interval's precision plus a guard word).
    pub fn mid(&self) -> Float {
        let p = self.prec() + 64;
        let mut m = Float::with_val(p, &self.lo + &self.hi);
        m /= 2;
        m
    }

    /// Radius such that `[mid - rad, mid + rad]` contains the interval.
    pub fn rad(&self) -> Float {
        let p = self.prec();
        let m = self.mid();
        let a = up!(p, &m - &self.lo);
        let b = up!(p, &self.hi - &m);
        max_f(a, b)
    }

    pub fn width(&self) -> Float {
        up!(self.prec(), &self.hi - &self.lo)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && self.hi >= x
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lo <= *q && self.hi >= *q
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && self.hi >= other.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// The unique integer in the interval, if there is exactly one.
    pub fn unique_integer(&self) -> Option<Integer> {
        let lo = self.lo.to_integer_round(Round::Up)?.0;
        let hi = self.hi.to_integer_round(Round::Down)?.0;
        (lo == hi).then_some(lo)
    }

    /// True when the interval contains no integer at all.
    pub fn excludes_integers(&self) -> bool {
        match (
            self.lo.to_integer_round(Round::Up),
            self.hi.to_integer_round(Round::Down),
        ) {
            (Some((lo, _)), Some((hi, _))) => lo > hi,
            _ => false,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    /// Outward `f64` bounds.
    pub fn to_f64_bounds(&self) -> (f64, f64) {
        (
            self.lo.to_f64_round(Round::Down),
            self.hi.to_f64_round(Round::Up),
        )
    }

    /// Rounds outward to a new precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        Interval {
            lo: down!(prec, &self.lo),
            hi: up!(prec, &self.hi),
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        let p = self.p2(o);
        Interval {
            lo: down!(p, &self.lo + &o.lo),
            hi: up!(p, &self.hi + &o.hi),
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        let p = self.p2(o);
        Interval {
            lo: down!(p, &self.lo - &o.hi),
            hi: up!(p, &self.hi - &o.lo),
        }
    }

    pub fn neg(&self) -> Interval {
        let mut lo = self.hi.clone();
        let mut hi = self.lo.clone();
        lo.neg_assign();
        hi.neg_assign();
        Interval { lo, hi }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let p = self.p2(o);
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let l = down!(p, a * b);
            let h = up!(p, a * b);
            lo = Some(match lo {
                None => l,
                Some(x) => min_f(x, l),
            });
            hi = Some(match hi {
                None => h,
                Some(x) => max_f(x, h),
            });
        }
        Interval {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
        }
    }

    pub fn mul_int(&self, k: i64) -> Interval {
        self.mul(&Interval::from_int(k, self.prec()))
    }

    pub fn sqr(&self) -> Interval {
        let p = self.prec();
        if self.lo >= 0 {
            Interval {
                lo: down!(p, self.lo.square_ref()),
                hi: up!(p, self.hi.square_ref()),
            }
        } else if self.hi <= 0 {
            Interval {
                lo: down!(p, self.hi.square_ref()),
                hi: up!(p, self.lo.square_ref()),
            }
        } else {
            let a = up!(p, self.lo.square_ref());
            let b = up!(p, self.hi.square_ref());
            Interval {
                lo: Float::with_val(p, Special::Zero),
                hi: max_f(a, b),
            }
        }
    }

    pub fn recip(&self) -> Option<Interval> {
        if self.contains_zero() {
            return None;
        }
        let p = self.prec();
        Some(Interval {
            lo: down!(p, 1 / &self.hi),
            hi: up!(p, 1 / &self.lo),
        })
    }

    pub fn div(&self, o: &Interval) -> Option<Interval> {
        if o.contains_zero() {
            return None;
        }
        let p = self.p2(o);
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let l = down!(p, a / b);
            let h = up!(p, a / b);
            lo = Some(match lo {
                None => l,
                Some(x) => min_f(x, l),
            });
            hi = Some(match hi {
                None => h,
                Some(x) => max_f(x, h),
            });
        }
        Some(Interval {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
        })
    }

    pub fn div_int(&self, k: i64) -> Interval {
        self.div(&Interval::from_int(k, self.prec()))
            .expect("division by nonzero integer")
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            let p = self.prec();
            let a = Float::with_val(p, -&self.lo);
            Interval {
                lo: Float::with_val(p, Special::Zero),
                hi: max_f(a, self.hi.clone()),
            }
        }
    }

    /// Square root; negative parts of the interval are clamped to zero.
    pub fn sqrt(&self) -> Interval {
        let p = self.prec();
        let zero = Float::with_val(p, Special::Zero);
        let lo = if self.lo <= 0 {
            zero.clone()
        } else {
            down!(p, self.lo.sqrt_ref())
        };
        let hi = if self.hi <= 0 {
            zero
        } else {
            up!(p, self.hi.sqrt_ref())
        };
        Interval { lo, hi }
    }

    /// Natural logarithm; `None` unless the interval is strictly positive.
    pub fn ln(&self) -> Option<Interval> {
        if self.lo <= 0 {
            return None;
        }
        let p = self.prec();
        Some(Interval {
            lo: down!(p, self.lo.ln_ref()),
            hi: up!(p, self.hi.ln_ref()),
        })
    }

    pub fn exp(&self) -> Interval {
        let p = self.prec();
        Interval {
            lo: down!(p, self.lo.exp_ref()),
            hi: up!(p, self.hi.exp_ref()),
        }
    }

    /// `self^e` for a strictly positive base.
    pub fn pow(&self, e: &Interval) -> Option<Interval> {
        Some(self.ln()?.mul(e).exp())
    }

    pub fn max(&self, o: &Interval) -> Interval {
        Interval {
            lo: max_f(self.lo.clone(), o.lo.clone()),
            hi: max_f(self.hi.clone(), o.hi.clone()),
        }
    }

    pub fn min(&self, o: &Interval) -> Interval {
        Interval {
            lo: min_f(self.lo.clone(), o.lo.clone()),
            hi: min_f(self.hi.clone(), o.hi.clone()),
        }
    }

    pub fn hull(&self, o: &Interval) -> Interval {
        Interval {
            lo: min_f(self.lo.clone(), o.lo.clone()),
            hi: max_f(self.hi.clone(), o.hi.clone()),
        }
    }

    /// `Some(true)` if every point is `<=` every point of `o`, `Some(false)`
    /// if every point is `>`, `None` when the intervals overlap.
    pub fn le(&self, o: &Interval) -> Option<bool> {
        if self.hi <= o.lo {
            Some(true)
        } else if self.lo > o.hi {
            Some(false)
        } else {
            None
        }
    }

    pub fn lt(&self, o: &Interval) -> Option<bool> {
        if self.hi < o.lo {
            Some(true)
        } else if self.lo >= o.hi {
            Some(false)
        } else {
            None
        }
    }

    pub fn ge(&self, o: &Interval) -> Option<bool> {
        o.le(self)
    }

    pub fn gt(&self, o: &Interval) -> Option<bool> {
        o.lt(self)
    }

    /// Order of two intervals when they are disjoint (or identical points).
    pub fn cmp_certain(&self, o: &Interval) -> Option<Ordering> {
        if self.is_point() && o.is_point() && self.lo == o.lo {
            Some(Ordering::Equal)
        } else if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else {
            None
        }
    }

    /// Decimal midpoint with `digits` significant digits.
    pub fn mid_string(&self, digits: usize) -> String {
        format_float(&self.mid(), digits)
    }

    pub fn rad_string(&self) -> String {
        format_float(&self.rad(), 3)
    }
}

pub fn format_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let s = x.to_string_radix(10, Some(digits));
    // MPFR writes exponents as `e` with an explicit sign only when negative.
    s
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", self.mid_string(20), self.rad_string())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", self.mid_string(17), self.rad_string())
    }
}

/// Rectangular complex enclosure `re + i·im`.
#[derive(Clone, PartialEq)]
pub struct CBall {
    pub re: Interval,
    pub im: Interval,
}

impl CBall {
    pub fn new(re: Interval, im: Interval) -> Self {
        CBall { re, im }
    }

    pub fn real(re: Interval) -> Self {
        let p = re.prec();
        CBall {
            re,
            im: Interval::zero(p),
        }
    }

    pub fn zero(prec: u32) -> Self {
        CBall::real(Interval::zero(prec))
    }

    pub fn one(prec: u32) -> Self {
        CBall::real(Interval::one(prec))
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        CBall::real(Interval::from_rational(q, prec))
    }

    /// Disk-containing box around a center with the given radius.
    pub fn from_center_rad(re: &Float, im: &Float, rad: &Float, prec: u32) -> Self {
        let imi = if im.is_zero() {
            Interval::zero(prec)
        } else {
            Interval::from_mid_rad(im, rad, prec)
        };
        CBall {
            re: Interval::from_mid_rad(re, rad, prec),
            im: imi,
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn is_real(&self) -> bool {
        self.im.is_point() && self.im.lo().is_zero()
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        CBall {
            re: self.re.with_prec(prec),
            im: self.im.with_prec(prec),
        }
    }

    pub fn add(&self, o: &CBall) -> CBall {
        CBall {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    pub fn sub(&self, o: &CBall) -> CBall {
        CBall {
            re: self.re.sub(&o.re),
            im: self.im.sub(&o.im),
        }
    }

    pub fn neg(&self) -> CBall {
        CBall {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }

    pub fn conj(&self) -> CBall {
        CBall {
            re: self.re.clone(),
            im: self.im.neg(),
        }
    }

    pub fn mul(&self, o: &CBall) -> CBall {
        if self.is_real() && o.is_real() {
            return CBall::real(self.re.mul(&o.re));
        }
        let re = self.re.mul(&o.re).sub(&self.im.mul(&o.im));
        let im = self.re.mul(&o.im).add(&self.im.mul(&o.re));
        CBall { re, im }
    }

    pub fn mul_real(&self, k: &Interval) -> CBall {
        if self.is_real() {
            return CBall::real(self.re.mul(k));
        }
        CBall {
            re: self.re.mul(k),
            im: self.im.mul(k),
        }
    }

    pub fn sqr(&self) -> CBall {
        if self.is_real() {
            return CBall::real(self.re.sqr());
        }
        let re = self.re.sqr().sub(&self.im.sqr());
        let im = self.re.mul(&self.im).mul_int(2);
        CBall { re, im }
    }

    pub fn abs_sqr(&self) -> Interval {
        self.re.sqr().add(&self.im.sqr())
    }

    pub fn abs(&self) -> Interval {
        if self.is_real() {
            return self.re.abs();
        }
        self.abs_sqr().sqrt()
    }

    pub fn contains_zero(&self) -> bool {
        self.re.contains_zero() && self.im.contains_zero()
    }

    pub fn recip(&self) -> Option<CBall> {
        if self.is_real() {
            return Some(CBall::real(self.re.recip()?));
        }
        let n = self.abs_sqr();
        if n.contains_zero() {
            return None;
        }
        Some(CBall {
            re: self.re.div(&n)?,
            im: self.im.neg().div(&n)?,
        })
    }

    pub fn div(&self, o: &CBall) -> Option<CBall> {
        if o.is_real() {
            let r = o.re.recip()?;
            return Some(self.mul_real(&r));
        }
        Some(self.mul(&o.recip()?))
    }

    /// Integer power by repeated squaring; negative exponents invert first.
    pub fn powi(&self, e: i64) -> Option<CBall> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = CBall::one(self.prec());
        let mut sq = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&sq);
            }
            n >>= 1;
            if n > 0 {
                sq = sq.sqr();
            }
        }
        Some(acc)
    }

    pub fn overlaps(&self, o: &CBall) -> bool {
        self.re.overlaps(&o.re) && self.im.overlaps(&o.im)
    }

    /// Midpoint of the real and imaginary parts plus a common radius
    /// (the larger of the two component radii).
    pub fn mid_rad(&self) -> (Float, Float, Float) {
        let rr = self.re.rad();
        let ri = self.im.rad();
        (self.re.mid(), self.im.mid(), max_f(rr, ri))
    }

    /// The unique Gaussian-integer-free test: real integer in the real part
    /// and zero inside the imaginary part.
    pub fn unique_real_integer(&self) -> Option<Integer> {
        if !self.im.contains_zero() {
            return None;
        }
        self.re.unique_integer()
    }
}

impl fmt::Debug for CBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_real() {
            write!(f, "{:?}", self.re)
        } else {
            write!(f, "({:?}) + i({:?})", self.re, self.im)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outward_rounding_encloses_one_third() {
        let third = Interval::from_rational(&Rational::from((1, 3)), 64);
        assert!(third.lo() < third.hi());
        let back = third.mul_int(3);
        assert!(back.contains_f64(1.0));
    }

    #[test]
    fn ln_exp_roundtrip_contains_value() {
        let two = Interval::from_int(2, 128);
        let l = two.ln().unwrap();
        assert!(l.contains_f64(std::f64::consts::LN_2) || l.width() < 1e-30);
        assert!(l.exp().contains(&Interval::from_int(2, 128)) || l.exp().overlaps(&two));
        assert!(l.exp().contains_f64(2.0));
    }

    #[test]
    fn ln_of_nonpositive_is_none() {
        assert!(Interval::zero(64).ln().is_none());
        assert!(Interval::from_int(-1, 64).ln().is_none());
    }

    #[test]
    fn division_by_zero_ball_is_none() {
        let a = Interval::from_int(1, 64);
        let z = Interval::new(Float::with_val(64, -1), Float::with_val(64, 1));
        assert!(a.div(&z).is_none());
    }

    #[test]
    fn complex_mul_and_abs() {
        let i = CBall::new(Interval::zero(64), Interval::one(64));
        let m = i.mul(&i);
        assert!(m.re.contains_f64(-1.0) && m.im.contains_f64(0.0));
        let z = CBall::new(Interval::from_int(3, 64), Interval::from_int(4, 64));
        assert!(z.abs().contains_f64(5.0));
        let w = z.powi(-2).unwrap().mul(&z.sqr());
        assert!(w.re.contains_f64(1.0) && w.im.contains_f64(0.0));
    }

    #[test]
    fn unique_integer_detection() {
        let a = Interval::from_mid_rad(&Float::with_val(64, 2.9), &Float::with_val(64, 0.2), 64);
        assert_eq!(a.unique_integer(), Some(Integer::from(3)));
        let b = Interval::from_mid_rad(&Float::with_val(64, 2.5), &Float::with_val(64, 0.6), 64);
        assert_eq!(b.unique_integer(), None);
        let c = Interval::from_mid_rad(&Float::with_val(64, 2.5), &Float::with_val(64, 0.1), 64);
        assert!(c.excludes_integers());
    }
}
