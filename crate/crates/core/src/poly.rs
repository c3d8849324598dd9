//! Dense univariate polynomials over Q.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::ops::Pow;
use rug::{Integer, Rational};

/// Polynomial with rational coefficients, stored lowest degree first and
/// trimmed so the last coefficient is nonzero.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct QPoly {
    c: Vec<Rational>,
}

impl QPoly {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(|x| *x == 0) {
            c.pop();
        }
        QPoly { c }
    }

    pub fn zero() -> Self {
        QPoly { c: vec![] }
    }

    pub fn one() -> Self {
        QPoly::constant(Rational::from(1))
    }

    pub fn x() -> Self {
        QPoly::new(vec![Rational::new(), Rational::from(1)])
    }

    pub fn constant(q: Rational) -> Self {
        QPoly::new(vec![q])
    }

    /// From integer coefficients listed highest degree first.
    pub fn from_desc_integers(a: &[Integer]) -> Self {
        QPoly::new(a.iter().rev().map(|x| Rational::from(x.clone())).collect())
    }

    pub fn from_desc_i64(a: &[i64]) -> Self {
        QPoly::new(a.iter().rev().map(|&x| Rational::from(x)).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.c.get(i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn deg(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn lead(&self) -> Rational {
        self.c.last().cloned().unwrap_or_default()
    }

    pub fn scale(&self, q: &Rational) -> QPoly {
        QPoly::new(self.c.iter().map(|x| Rational::from(x * q)).collect())
    }

    pub fn monic(&self) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead().recip();
        self.scale(&l)
    }

    pub fn shift(&self, k: usize) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = vec![Rational::new(); k];
        c.extend(self.c.iter().cloned());
        QPoly { c }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for a in self.c.iter().rev() {
            acc *= x;
            acc += a;
        }
        acc
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, a)| Rational::from(a * i as u32))
                .collect(),
        )
    }

    pub fn pow(&self, mut e: u32) -> QPoly {
        let mut acc = QPoly::one();
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            e >>= 1;
            if e > 0 {
                b = &b * &b;
            }
        }
        acc
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.deg();
        let mut r = self.c.clone();
        if r.len() <= dd {
            return (QPoly::zero(), self.clone());
        }
        let inv = d.lead().recip();
        let mut q = vec![Rational::new(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let t = Rational::from(&r[k + dd] * &inv);
            if t != 0 {
                for (j, dj) in d.c.iter().enumerate() {
                    r[k + j] -= Rational::from(&t * dj);
                }
            }
            q[k] = t;
        }
        r.truncate(dd);
        (QPoly::new(q), QPoly::new(r))
    }

    pub fn rem(&self, d: &QPoly) -> QPoly {
        self.divrem(d).1
    }

    /// Monic gcd (zero when both inputs are zero).
    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `(g, s, t)` with `s·self + t·o = g`, `g` the monic gcd.
    pub fn xgcd(&self, o: &QPoly) -> (QPoly, QPoly, QPoly) {
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (QPoly::one(), QPoly::zero());
        let (mut t0, mut t1) = (QPoly::zero(), QPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            let s = &s0 - &(&q * &s1);
            let t = &t0 - &(&q * &t1);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
            t0 = std::mem::replace(&mut t1, t);
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let l = r0.lead().recip();
        (r0.scale(&l), s0.scale(&l), t0.scale(&l))
    }

    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.derivative()).deg() == 0
    }

    /// Product of the distinct monic irreducible factors.
    pub fn squarefree_part(&self) -> QPoly {
        let g = self.gcd(&self.derivative());
        self.divrem(&g).0.monic()
    }

    /// Integer multiple with content 1 and positive leading coefficient,
    /// highest degree first.
    pub fn primitive_integer_desc(&self) -> Vec<Integer> {
        if self.is_zero() {
            return vec![];
        }
        let mut den = Integer::from(1);
        for a in &self.c {
            den.lcm_mut(a.denom());
        }
        let mut v: Vec<Integer> = self
            .c
            .iter()
            .rev()
            .map(|a| a.numer() * Integer::from(&den / a.denom()))
            .collect();
        let mut g = Integer::new();
        for a in &v {
            g.gcd_mut(a);
        }
        if v[0] < 0 {
            g = -g;
        }
        for a in &mut v {
            *a /= &g;
        }
        v
    }

    /// Resultant by the Euclidean recurrence over Q.
    pub fn resultant(&self, o: &QPoly) -> Rational {
        if self.is_zero() || o.is_zero() {
            return Rational::new();
        }
        let (m, n) = (self.deg(), o.deg());
        if n == 0 {
            return o.lead().pow(m as i32);
        }
        if m == 0 {
            return self.lead().pow(n as i32);
        }
        let r = self.rem(o);
        if r.is_zero() {
            return Rational::new();
        }
        let k = r.deg();
        let mut res = o.lead().pow((m - k) as i32) * o.resultant(&r);
        if (m * n) % 2 == 1 {
            res = -res;
        }
        res
    }

    pub fn discriminant(&self) -> Rational {
        let n = self.deg();
        let mut d = self.resultant(&self.derivative()) / self.lead();
        if (n * (n.saturating_sub(1)) / 2) % 2 == 1 {
            d = -d;
        }
        d
    }

    /// `self(g(X)) mod m`, by Horner with reduction at each step.
    pub fn compose_mod(&self, g: &QPoly, m: &QPoly) -> QPoly {
        let mut acc = QPoly::zero();
        for a in self.c.iter().rev() {
            acc = (&(&acc * g) + &QPoly::constant(a.clone())).rem(m);
        }
        acc
    }
}

impl Add for &QPoly {
    type Output = QPoly;
    fn add(self, o: &QPoly) -> QPoly {
        let n = self.c.len().max(o.c.len());
        QPoly::new(
            (0..n)
                .map(|i| self.coeff(i) + o.coeff(i))
                .collect(),
        )
    }
}

impl Sub for &QPoly {
    type Output = QPoly;
    fn sub(self, o: &QPoly) -> QPoly {
        let n = self.c.len().max(o.c.len());
        QPoly::new(
            (0..n)
                .map(|i| self.coeff(i) - o.coeff(i))
                .collect(),
        )
    }
}

impl Neg for &QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly::new(self.c.iter().map(|x| Rational::from(-x)).collect())
    }
}

impl Mul for &QPoly {
    type Output = QPoly;
    fn mul(self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut c = vec![Rational::new(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += Rational::from(a * b);
            }
        }
        QPoly::new(c)
    }
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<(usize, Rational)> = self
            .c
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, a)| **a != 0)
            .map(|(i, a)| (i, a.clone()))
            .collect();
        write_terms(f, &terms, |i| monomial("X", i))
    }
}

fn monomial(v: &str, i: usize) -> String {
    match i {
        0 => String::new(),
        1 => v.to_string(),
        _ => format!("{v}^{i}"),
    }
}

fn write_terms(
    f: &mut impl fmt::Write,
    terms: &[(usize, Rational)],
    mono: impl Fn(usize) -> String,
) -> fmt::Result {
    for (k, (i, a)) in terms.iter().enumerate() {
        let neg = *a < 0;
        let abs = Rational::from(a.abs_ref());
        if k == 0 {
            if neg {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {} ", if neg { '-' } else { '+' })?;
        }
        let m = mono(*i);
        if m.is_empty() {
            write!(f, "{abs}")?;
        } else if abs == 1 {
            write!(f, "{m}")?;
        } else {
            write!(f, "{abs}*{m}")?;
        }
    }
    Ok(())
}

/// Renders `b_0 X^δ + b_1 X^{δ-1} Y + …` from coefficients listed highest
/// degree in X first.
pub fn format_binary_form(b: &[Integer]) -> String {
    let n = b.len().saturating_sub(1);
    let terms: Vec<(usize, Rational)> = b
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0)
        .map(|(k, a)| (k, Rational::from(a.clone())))
        .collect();
    if terms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    write_terms(&mut s, &terms, |k| {
        let xs = monomial("X", n - k);
        let ys = monomial("Y", k);
        match (xs.is_empty(), ys.is_empty()) {
            (true, _) => ys,
            (_, true) => xs,
            _ => format!("{xs}*{ys}"),
        }
    })
    .expect("writing to a String");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: &[i64]) -> QPoly {
        QPoly::from_desc_i64(a)
    }

    #[test]
    fn divrem_reconstructs() {
        let a = p(&[3, 0, -2, 5, 1]);
        let b = p(&[2, 1, -1]);
        let (q, r) = a.divrem(&b);
        assert_eq!(&(&q * &b) + &r, a);
        assert!(r.deg() < b.deg());
    }

    #[test]
    fn gcd_and_squarefree_part() {
        // (X-1)^2 (X+2)
        let f = &p(&[1, -1]).pow(2) * &p(&[1, 2]);
        assert_eq!(f.gcd(&f.derivative()), p(&[1, -1]));
        assert_eq!(f.squarefree_part(), &p(&[1, -1]) * &p(&[1, 2]));
        assert!(!f.is_squarefree());
    }

    #[test]
    fn xgcd_bezout() {
        let a = p(&[1, 0, 0, -2]);
        let b = p(&[1, -1, 3]);
        let (g, s, t) = a.xgcd(&b);
        assert_eq!(g, QPoly::one());
        assert_eq!(&(&s * &a) + &(&t * &b), g);
    }

    #[test]
    fn discriminants() {
        assert_eq!(p(&[1, 0, 0, -2]).discriminant(), -108);
        assert_eq!(p(&[1, 0, -1, -1]).discriminant(), -23);
        assert_eq!(p(&[1, 1, 1, 1, 1]).discriminant(), 125);
    }

    #[test]
    fn primitive_normalization() {
        let f = QPoly::new(vec![
            Rational::from((-1, 3)),
            Rational::from(0),
            Rational::from((-2, 3)),
        ]);
        assert_eq!(
            f.primitive_integer_desc(),
            vec![Integer::from(2), Integer::from(0), Integer::from(1)]
        );
    }

    #[test]
    fn formatting() {
        assert_eq!(p(&[1, 0, 6, -2]).to_string(), "X^3 + 6*X - 2");
        let b: Vec<Integer> = [1, 0, 6, -2].iter().map(|&x| Integer::from(x)).collect();
        assert_eq!(format_binary_form(&b), "X^3 + 6*X*Y^2 - 2*Y^3");
    }
}
