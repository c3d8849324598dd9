//! The number field K = Q(α) with exact power-basis arithmetic and certified
//! complex embeddings.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use itertools::Itertools;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::ball::{CBall, Interval};
use crate::error::{Error, Result};
use crate::poly::QPoly;
use crate::roots::{self, RootSet};

pub const DEFAULT_PRECISION: u32 = 128;
pub const DEFAULT_MAX_PRECISION: u32 = 4096;

/// `c_0 + c_1 α + … + c_{d−1} α^{d−1}` with exact rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FieldElement {
    coords: Vec<Rational>,
}

impl FieldElement {
    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == 0)
    }

    /// The rational value when the element lies in Q.
    pub fn as_rational(&self) -> Option<Rational> {
        self.coords[1..]
            .iter()
            .all(|c| *c == 0)
            .then(|| self.coords[0].clone())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.to_string()).collect()
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = QPoly::new(self.coords.clone()).to_string();
        write!(f, "{}", s.replace('X', "a"))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_strings().join(", "))
    }
}

/// Images of one element under every embedding, in embedding order.
#[derive(Clone, Debug)]
pub struct EmbeddingValues {
    pub values: Vec<CBall>,
    pub precision: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub r1: usize,
    pub r2: usize,
}

/// Characteristic and minimal polynomial data of an element.
#[derive(Clone, Debug)]
pub struct MinPoly {
    /// Monic characteristic polynomial of multiplication by the element.
    pub char_poly: QPoly,
    /// Primitive integer minimal polynomial, highest degree first, positive lead.
    pub min: Vec<Integer>,
    pub delta: usize,
}

impl MinPoly {
    pub fn lead(&self) -> &Integer {
        &self.min[0]
    }
}

#[derive(Clone)]
pub struct NumberField {
    coeffs: Vec<Integer>,
    f: QPoly,
    d: usize,
    roots: RootSet,
    max_prec: u32,
    cache: Arc<Mutex<BTreeMap<u32, Arc<Vec<CBall>>>>>,
}

impl fmt::Debug for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumberField")
            .field("poly", &self.f)
            .field("r1", &self.roots.r1)
            .field("r2", &self.roots.r2)
            .finish()
    }
}

fn positive_divisors(n: &Integer) -> Vec<Integer> {
    let n = Integer::from(n.abs_ref());
    let mut out = vec![];
    let mut k = Integer::from(1);
    while Integer::from(&k * &k) <= n {
        if n.is_divisible(&k) {
            out.push(k.clone());
            let q = Integer::from(&n / &k);
            if q != k {
                out.push(q);
            }
        }
        k += 1;
    }
    out.sort();
    out
}

impl NumberField {
    /// Validates `a_0 X^d + … + a_d` (highest degree first) and isolates its
    /// roots. The polynomial is normalized to content 1 and `a_0 > 0`.
    pub fn new(coeffs: &[Integer]) -> Result<Self> {
        Self::with_max_precision(coeffs, DEFAULT_MAX_PRECISION)
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        let c: Vec<Integer> = coeffs.iter().map(|&x| Integer::from(x)).collect();
        Self::new(&c)
    }

    pub fn with_max_precision(coeffs: &[Integer], max_prec: u32) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("empty coefficient list".into()));
        }
        if coeffs[0] == 0 {
            return Err(Error::InvalidInput("leading coefficient a_0 is zero".into()));
        }
        let d = coeffs.len() - 1;
        if d < 3 {
            return Err(Error::DegreeTooSmall(d));
        }
        let f = QPoly::from_desc_integers(coeffs);
        let norm = f.primitive_integer_desc();
        let f = QPoly::from_desc_integers(&norm);
        let g = f.gcd(&f.derivative());
        if g.deg() > 0 {
            return Err(Error::Reducible(g.to_string()));
        }
        let (rs, _) = roots::isolate(&norm, max_prec)
            .ok_or_else(|| Error::undecided("root isolation of the defining polynomial", max_prec))?;
        let k = NumberField {
            coeffs: norm,
            f,
            d,
            roots: rs,
            max_prec,
            cache: Arc::new(Mutex::new(BTreeMap::new())),
        };
        if let Some(factor) = k.find_factor()? {
            return Err(Error::Reducible(factor.to_string()));
        }
        Ok(k)
    }

    /// Searches for a rational factor of degree at most d/2 by forming
    /// `c·∏(X − z_i)` over conjugation-closed root subsets.
    fn find_factor(&self) -> Result<Option<QPoly>> {
        let (r1, r2) = (self.roots.r1, self.roots.r2);
        let leads = positive_divisors(&self.coeffs[0]);
        let mut subsets: Vec<Vec<usize>> = vec![];
        for k in 1..=self.d / 2 {
            for np in 0..=(k / 2).min(r2) {
                let nr = k - 2 * np;
                if nr > r1 {
                    continue;
                }
                for rs in (0..r1).combinations(nr) {
                    for ps in (0..r2).combinations(np) {
                        let mut s = rs.clone();
                        for &j in &ps {
                            s.push(r1 + j);
                            s.push(r1 + r2 + j);
                        }
                        subsets.push(s);
                    }
                }
            }
        }
        let mut pending: Vec<(usize, usize)> = (0..subsets.len())
            .flat_map(|s| (0..leads.len()).map(move |c| (s, c)))
            .collect();
        let mut p = DEFAULT_PRECISION;
        while !pending.is_empty() {
            if p > self.max_prec {
                return Err(Error::undecided("irreducibility test", self.max_prec));
            }
            let balls = self.root_balls(p)?;
            let mut still = vec![];
            for (s, c) in pending {
                let mut poly = vec![CBall::real(Interval::from_integer(&leads[c], p))];
                for &i in &subsets[s] {
                    let mut next = vec![CBall::zero(p); poly.len() + 1];
                    for (k, a) in poly.iter().enumerate() {
                        next[k + 1] = next[k + 1].add(a);
                        next[k] = next[k].sub(&a.mul(&balls[i]));
                    }
                    poly = next;
                }
                let mut ints = vec![];
                let mut excluded = false;
                let mut undecided = false;
                for a in &poly {
                    if !a.im.contains_zero() || a.re.excludes_integers() {
                        excluded = true;
                        break;
                    }
                    match a.re.unique_integer() {
                        Some(n) if a.im.unique_integer() == Some(Integer::new()) => ints.push(n),
                        _ => undecided = true,
                    }
                }
                if excluded {
                    continue;
                }
                if undecided {
                    still.push((s, c));
                    continue;
                }
                let cand = QPoly::new(ints.into_iter().map(Rational::from).collect());
                if self.f.rem(&cand).is_zero() {
                    return Ok(Some(cand));
                }
            }
            pending = still;
            p *= 2;
        }
        Ok(None)
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn signature(&self) -> Signature {
        Signature {
            r1: self.roots.r1,
            r2: self.roots.r2,
        }
    }

    pub fn r1(&self) -> usize {
        self.roots.r1
    }

    pub fn r2(&self) -> usize {
        self.roots.r2
    }

    /// Unit rank `r1 + r2 − 1`.
    pub fn rank(&self) -> usize {
        self.roots.r1 + self.roots.r2 - 1
    }

    /// Weight of embedding `i`: 1 for real, 2 for complex.
    pub fn delta_weight(&self, i: usize) -> u32 {
        if i < self.roots.r1 {
            1
        } else {
            2
        }
    }

    /// Index of the complex conjugate of embedding `i`.
    pub fn conjugate_index(&self, i: usize) -> usize {
        let (r1, r2) = (self.roots.r1, self.roots.r2);
        if i < r1 {
            i
        } else if i < r1 + r2 {
            i + r2
        } else {
            i - r2
        }
    }

    pub fn is_real_embedding(&self, i: usize) -> bool {
        i < self.roots.r1
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn poly(&self) -> &QPoly {
        &self.f
    }

    pub fn max_precision(&self) -> u32 {
        self.max_prec
    }

    pub fn set_max_precision(&mut self, p: u32) {
        self.max_prec = p.max(DEFAULT_PRECISION);
    }

    /// Runs `f` at doubling precisions starting from `start` until it
    /// returns a decision.
    pub fn escalate<T>(
        &self,
        start: u32,
        what: &str,
        mut f: impl FnMut(u32) -> Result<Option<T>>,
    ) -> Result<T> {
        let mut p = start.max(32);
        loop {
            if let Some(t) = f(p)? {
                return Ok(t);
            }
            if p >= self.max_prec {
                return Err(Error::undecided(what, self.max_prec));
            }
            p = (p * 2).min(self.max_prec);
        }
    }

    /// Certified balls around the roots of f in embedding order.
    pub fn root_balls(&self, prec: u32) -> Result<Arc<Vec<CBall>>> {
        let prec = prec.max(32);
        if let Some(b) = self.cache.lock().expect("root cache").get(&prec) {
            return Ok(b.clone());
        }
        let b = Arc::new(
            self.roots
                .balls(&self.coeffs, prec)
                .ok_or_else(|| Error::Inconsistency(format!("root refinement failed at {prec} bits")))?,
        );
        self.cache.lock().expect("root cache").insert(prec, b.clone());
        Ok(b)
    }

    // ---- elements ----

    pub fn element(&self, coords: Vec<Rational>) -> Result<FieldElement> {
        if coords.len() != self.d {
            return Err(Error::InvalidInput(format!(
                "element has {} coordinates, field degree is {}",
                coords.len(),
                self.d
            )));
        }
        Ok(FieldElement { coords })
    }

    pub fn element_i64(&self, coords: &[i64]) -> FieldElement {
        let mut c: Vec<Rational> = coords.iter().map(|&x| Rational::from(x)).collect();
        c.resize(self.d, Rational::new());
        self.from_qpoly(&QPoly::new(c))
    }

    pub fn from_rational(&self, q: Rational) -> FieldElement {
        let mut coords = vec![Rational::new(); self.d];
        coords[0] = q;
        FieldElement { coords }
    }

    pub fn from_int(&self, n: i64) -> FieldElement {
        self.from_rational(Rational::from(n))
    }

    pub fn zero(&self) -> FieldElement {
        self.from_int(0)
    }

    pub fn one(&self) -> FieldElement {
        self.from_int(1)
    }

    pub fn alpha(&self) -> FieldElement {
        self.from_qpoly(&QPoly::x())
    }

    pub fn from_qpoly(&self, p: &QPoly) -> FieldElement {
        let r = p.rem(&self.f);
        let mut coords = r.coeffs().to_vec();
        coords.resize(self.d, Rational::new());
        FieldElement { coords }
    }

    pub fn to_qpoly(&self, g: &FieldElement) -> QPoly {
        QPoly::new(g.coords.clone())
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            coords: a
                .coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| Rational::from(x + y))
                .collect(),
        }
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            coords: a
                .coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| Rational::from(x - y))
                .collect(),
        }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        FieldElement {
            coords: a.coords.iter().map(|x| Rational::from(-x)).collect(),
        }
    }

    pub fn scale(&self, a: &FieldElement, q: &Rational) -> FieldElement {
        FieldElement {
            coords: a.coords.iter().map(|x| Rational::from(x * q)).collect(),
        }
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.from_qpoly(&(&self.to_qpoly(a) * &self.to_qpoly(b)))
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::ZeroElement("inverse"));
        }
        let (g, s, _) = self.to_qpoly(a).xgcd(&self.f);
        if g.deg() != 0 {
            return Err(Error::Inconsistency("defining polynomial shares a factor with an element".into()));
        }
        Ok(self.from_qpoly(&s))
    }

    pub fn div(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn pow(&self, a: &FieldElement, e: i64) -> Result<FieldElement> {
        let base = if e < 0 { self.inv(a)? } else { a.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = self.one();
        let mut sq = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &sq);
            }
            n >>= 1;
            if n > 0 {
                sq = self.mul(&sq, &sq);
            }
        }
        Ok(acc)
    }

    /// Matrix of multiplication by `g` on the power basis; column `j` holds
    /// the coordinates of `g·α^j`.
    pub fn mult_matrix(&self, g: &FieldElement) -> Vec<Vec<Rational>> {
        let mut cols = Vec::with_capacity(self.d);
        let mut cur = g.clone();
        let a = self.alpha();
        for _ in 0..self.d {
            cols.push(cur.coords.clone());
            cur = self.mul(&cur, &a);
        }
        (0..self.d)
            .map(|i| (0..self.d).map(|j| cols[j][i].clone()).collect())
            .collect()
    }

    /// Characteristic polynomial by the Faddeev–LeVerrier recurrence.
    pub fn char_poly(&self, g: &FieldElement) -> QPoly {
        let n = self.d;
        let a = self.mult_matrix(g);
        let matmul = |x: &Vec<Vec<Rational>>, y: &Vec<Vec<Rational>>| -> Vec<Vec<Rational>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let mut s = Rational::new();
                            for k in 0..n {
                                if x[i][k] != 0 && y[k][j] != 0 {
                                    s += Rational::from(&x[i][k] * &y[k][j]);
                                }
                            }
                            s
                        })
                        .collect()
                })
                .collect()
        };
        let mut c = vec![Rational::new(); n + 1];
        c[n] = Rational::from(1);
        let mut m: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..n).map(|j| Rational::from((i == j) as i32)).collect())
            .collect();
        for k in 1..=n {
            let am = matmul(&a, &m);
            let mut tr = Rational::new();
            for (i, row) in am.iter().enumerate() {
                tr += &row[i];
            }
            let ck = -tr / k as u32;
            c[n - k] = ck.clone();
            m = am;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += &ck;
            }
        }
        QPoly::new(c)
    }

    pub fn char_min_poly(&self, g: &FieldElement) -> MinPoly {
        let ch = self.char_poly(g);
        let sf = ch.squarefree_part();
        let delta = sf.deg();
        MinPoly {
            char_poly: ch,
            min: sf.primitive_integer_desc(),
            delta,
        }
    }

    pub fn norm(&self, g: &FieldElement) -> Rational {
        let c0 = self.char_poly(g).coeff(0);
        if self.d % 2 == 1 {
            -c0
        } else {
            c0
        }
    }

    pub fn trace(&self, g: &FieldElement) -> Rational {
        -self.char_poly(g).coeff(self.d - 1)
    }

    /// True iff the minimal polynomial is monic over Z with constant ±1.
    pub fn is_unit(&self, g: &FieldElement) -> bool {
        if g.is_zero() {
            return false;
        }
        let mp = self.char_min_poly(g);
        mp.min[0] == 1 && mp.min.last().is_some_and(|c| *c == 1 || *c == -1)
    }

    // ---- embeddings ----

    pub fn embeddings(&self, g: &FieldElement, prec: u32) -> Result<EmbeddingValues> {
        let balls = self.root_balls(prec)?;
        let (r1, r2) = (self.roots.r1, self.roots.r2);
        let p = prec.max(32);
        let coeffs: Vec<Interval> = g.coords.iter().map(|c| Interval::from_rational(c, p)).collect();
        let mut values: Vec<CBall> = (0..r1 + r2)
            .map(|i| {
                let z = &balls[i];
                let mut v = CBall::zero(p);
                for c in coeffs.iter().rev() {
                    v = v.mul(z).add(&CBall::real(c.clone()));
                }
                v
            })
            .collect();
        for i in 0..r2 {
            let c = values[r1 + i].conj();
            values.push(c);
        }
        Ok(EmbeddingValues { values, precision: p })
    }

    pub fn embedding_moduli(&self, g: &FieldElement, prec: u32) -> Result<Vec<Interval>> {
        Ok(self.embeddings(g, prec)?.values.iter().map(|z| z.abs()).collect())
    }

    /// Enclosure of `max_i |σ_i(g)|` at the given precision.
    pub fn house_at(&self, g: &FieldElement, prec: u32) -> Result<Interval> {
        if g.is_zero() {
            return Err(Error::ZeroElement("house"));
        }
        let m = self.embedding_moduli(g, prec)?;
        Ok(m.iter().skip(1).fold(m[0].clone(), |a, b| a.max(b)))
    }

    pub fn house(&self, g: &FieldElement) -> Result<Interval> {
        self.house_at(g, DEFAULT_PRECISION)
    }

    /// Absolute logarithmic height
    /// `(1/δ)·log(lead) + (1/d)·Σ_i log max(1, |σ_i g|)`.
    pub fn abs_log_height_at(&self, g: &FieldElement, prec: u32) -> Result<Interval> {
        if g.is_zero() {
            return Err(Error::ZeroElement("height"));
        }
        let mp = self.char_min_poly(g);
        let p = prec.max(32);
        let one = Interval::one(p);
        let mut s = Interval::zero(p);
        for m in self.embedding_moduli(g, p)? {
            s = s.add(&m.max(&one).ln().expect("argument at least 1"));
        }
        let lead = Interval::from_integer(mp.lead(), p).ln().expect("positive lead");
        Ok(lead
            .div_int(mp.delta as i64)
            .add(&s.div_int(self.d as i64)))
    }

    pub fn abs_log_height(&self, g: &FieldElement) -> Result<Interval> {
        self.abs_log_height_at(g, DEFAULT_PRECISION)
    }

    /// `log M(g) = δ·h(g)`.
    pub fn log_mahler_measure_at(&self, g: &FieldElement, prec: u32) -> Result<Interval> {
        let delta = self.char_min_poly(g).delta as i64;
        Ok(self.abs_log_height_at(g, prec)?.mul_int(delta))
    }

    pub fn parse_element(&self, coords: &[String]) -> Result<FieldElement> {
        let c = coords
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        self.element(c)
    }
}

/// Parses `p/q`, an integer, or a decimal with optional exponent
/// (`-2.5`, `1e3`, `3.25E-2`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidInput(format!("bad rational {s:?}"));
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: Integer = n.trim().parse().map_err(|_| bad())?;
        let d: Integer = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::from((n, d)));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: Integer = format!("{ip}{fp}0").parse().map_err(|_| bad())?;
    let scale = exp - fp.len() as i32 - 1;
    let ten = Rational::from(10);
    let mut r = Rational::from(digits);
    if scale >= 0 {
        r *= ten.pow(scale);
    } else {
        r /= ten.pow(-scale);
    }
    Ok(if neg { -r } else { r })
}
