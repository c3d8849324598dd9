//! The unit lattice: δ-weighted logarithmic embedding, regulator, unit
//! enumeration under a house bound, and rounding modulo the lattice.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::ball::{CBall, Interval};
use crate::error::{Error, Result};
use crate::field::{parse_rational, FieldElement, NumberField, DEFAULT_PRECISION};

/// `ζ^{torsion_power} · ε_1^{a_1} ⋯ ε_r^{a_r}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct UnitExponent {
    pub torsion_power: u64,
    pub exponents: Vec<i64>,
}

impl UnitExponent {
    pub fn new(torsion_power: u64, exponents: Vec<i64>) -> Self {
        UnitExponent {
            torsion_power,
            exponents,
        }
    }

    pub fn identity(r: usize) -> Self {
        UnitExponent::new(0, vec![0; r])
    }

    /// `A = max{1, |a_1|, …, |a_r|}`.
    pub fn height(&self) -> u64 {
        self.exponents
            .iter()
            .map(|a| a.unsigned_abs())
            .max()
            .unwrap_or(0)
            .max(1)
    }

    pub fn negate(&self, w: u64) -> Self {
        UnitExponent::new(
            (w - self.torsion_power % w) % w,
            self.exponents.iter().map(|a| -a).collect(),
        )
    }
}

impl Ord for UnitExponent {
    fn cmp(&self, o: &Self) -> Ordering {
        self.exponents
            .cmp(&o.exponents)
            .then(self.torsion_power.cmp(&o.torsion_power))
    }
}

impl PartialOrd for UnitExponent {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// `t_i = δ_i·log|σ_i(g)|` over the real embeddings and one embedding per
/// conjugate pair.
#[derive(Clone, Debug)]
pub struct LogVector {
    pub t: Vec<Interval>,
    pub delta: Vec<u32>,
}

impl LogVector {
    pub fn sum(&self) -> Interval {
        let p = self.t[0].prec();
        self.t.iter().fold(Interval::zero(p), |a, b| a.add(b))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.t.iter().map(|x| x.to_f64()).collect()
    }
}

/// Upper bound N on house(αε), either given directly or as `e^x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HouseBound {
    Value(Rational),
    Exp(Rational),
}

impl HouseBound {
    /// Accepts `2.5`, `7/3`, `1e3`, or `e^10`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let hb = if let Some(x) = t.strip_prefix("e^").or_else(|| t.strip_prefix("exp:")) {
            HouseBound::Exp(parse_rational(x)?)
        } else {
            HouseBound::Value(parse_rational(t)?)
        };
        if let HouseBound::Value(v) = &hb {
            if *v <= 0 {
                return Err(Error::InvalidInput("house bound must be positive".into()));
            }
        }
        Ok(hb)
    }

    pub fn ln_at(&self, p: u32) -> Interval {
        match self {
            HouseBound::Value(v) => Interval::from_rational(v, p).ln().expect("positive bound"),
            HouseBound::Exp(x) => Interval::from_rational(x, p),
        }
    }

    pub fn value_at(&self, p: u32) -> Interval {
        match self {
            HouseBound::Value(v) => Interval::from_rational(v, p),
            HouseBound::Exp(x) => Interval::from_rational(x, p).exp(),
        }
    }

    pub fn log_f64(&self) -> f64 {
        self.ln_at(64).to_f64()
    }
}

impl std::fmt::Display for HouseBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HouseBound::Value(v) => write!(f, "{v}"),
            HouseBound::Exp(x) => write!(f, "e^{x}"),
        }
    }
}

struct LogData {
    /// `ℓ_ij = λ(ε_j)_i`, `(r+1) × r`.
    matrix: Vec<Vec<Interval>>,
    /// Inverse of the top `r × r` block.
    top_inv: Vec<Vec<Interval>>,
    regulator: Interval,
}

#[derive(Clone)]
pub struct UnitGroupBasis {
    field: NumberField,
    fund_units: Vec<FieldElement>,
    torsion_order: u64,
    torsion_gen: FieldElement,
    reference_regulator: Option<Rational>,
    log_cache: Arc<Mutex<BTreeMap<u32, Arc<LogData>>>>,
    emb_cache: Arc<Mutex<BTreeMap<u32, Arc<Vec<Vec<CBall>>>>>>,
}

impl std::fmt::Debug for UnitGroupBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitGroupBasis")
            .field("fund_units", &self.fund_units)
            .field("torsion_order", &self.torsion_order)
            .field("torsion_gen", &self.torsion_gen)
            .finish()
    }
}

fn det(m: &[Vec<Interval>], p: u32) -> Interval {
    let n = m.len();
    match n {
        0 => Interval::one(p),
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        _ => {
            let mut acc = Interval::zero(p);
            for j in 0..n {
                let minor = minor(m, 0, j);
                let term = m[0][j].mul(&det(&minor, p));
                acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

fn minor(m: &[Vec<Interval>], row: usize, col: usize) -> Vec<Vec<Interval>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

fn inverse(m: &[Vec<Interval>], p: u32) -> Option<Vec<Vec<Interval>>> {
    let n = m.len();
    let dt = det(m, p);
    if dt.contains_zero() {
        return None;
    }
    let mut inv = vec![vec![Interval::zero(p); n]; n];
    for i in 0..n {
        for j in 0..n {
            let c = det(&minor(m, j, i), p);
            let c = if (i + j) % 2 == 0 { c } else { c.neg() };
            inv[i][j] = c.div(&dt)?;
        }
    }
    Some(inv)
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = vec![];
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            out.push(q);
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rounds to the nearest integer; exact halves go toward zero.
pub fn round_half_toward_zero(x: &Rational) -> Integer {
    let fl = x.clone().floor().numer().clone();
    let frac = Rational::from(x - &fl);
    let half = Rational::from((1, 2));
    match frac.cmp(&half) {
        Ordering::Less => fl,
        Ordering::Greater => fl + 1,
        Ordering::Equal => {
            if *x > 0 {
                fl
            } else {
                fl + 1
            }
        }
    }
}

/// Result of [`UnitGroupBasis::enumerate_units`].
#[derive(Clone, Debug)]
pub struct UnitEnumeration {
    /// Units with house(αε) ≤ N, ascending.
    pub units: Vec<UnitExponent>,
    /// Candidates whose membership stayed undecided at maximum precision.
    pub borderline: Vec<UnitExponent>,
    /// Exponent box scanned, per coordinate.
    pub exponent_box: Vec<(i64, i64)>,
    pub m_plus: Interval,
    pub m_minus: Interval,
}

/// `(e, g_reduced)` with `g_reduced = unit(e)·g`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub exponent: UnitExponent,
    pub reduced: FieldElement,
    /// Fund-unit coordinates of the norm-free part of λ(g) before rounding.
    pub coordinates: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub struct BetaDecomposition {
    pub rho: FieldElement,
    pub b: UnitExponent,
    pub big_b: u64,
    pub rho_height: Interval,
}

impl UnitGroupBasis {
    /// Validates fundamental units and torsion data against the field.
    pub fn new(
        field: &NumberField,
        fund_units: Vec<FieldElement>,
        torsion_order: u64,
        torsion_gen: FieldElement,
        reference_regulator: Option<Rational>,
    ) -> Result<Self> {
        let r = field.rank();
        if fund_units.len() != r {
            return Err(Error::WrongUnitCount {
                expected: r,
                got: fund_units.len(),
            });
        }
        for (j, u) in fund_units.iter().enumerate() {
            if u.coords().len() != field.degree() {
                return Err(Error::InvalidInput(format!("unit {} has wrong length", j + 1)));
            }
            if !field.is_unit(u) {
                return Err(Error::NotAUnit(format!("fundamental unit {} = {u}", j + 1)));
            }
        }
        if torsion_order < 2 {
            return Err(Error::Torsion("torsion order must be at least 2".into()));
        }
        if field.r1() > 0 && torsion_order != 2 {
            return Err(Error::Torsion(format!(
                "a field with a real embedding has torsion order 2, got {torsion_order}"
            )));
        }
        if torsion_gen.coords().len() != field.degree() {
            return Err(Error::Torsion("generator has wrong length".into()));
        }
        let one = field.one();
        if field.pow(&torsion_gen, torsion_order as i64)? != one {
            return Err(Error::Torsion(format!("generator^{torsion_order} ≠ 1")));
        }
        for q in prime_factors(torsion_order) {
            if field.pow(&torsion_gen, (torsion_order / q) as i64)? == one {
                return Err(Error::Torsion(format!(
                    "generator has order dividing {}",
                    torsion_order / q
                )));
            }
        }
        let b = UnitGroupBasis {
            field: field.clone(),
            fund_units,
            torsion_order,
            torsion_gen,
            reference_regulator,
            log_cache: Arc::new(Mutex::new(BTreeMap::new())),
            emb_cache: Arc::new(Mutex::new(BTreeMap::new())),
        };
        field.escalate(DEFAULT_PRECISION, "regulator", |p| match b.log_data(p) {
            Ok(_) => Ok(Some(())),
            Err(Error::DependentUnits) => Ok(None),
            Err(e) => Err(e),
        })
        .map_err(|e| if e.is_undecided() { Error::DependentUnits } else { e })?;
        Ok(b)
    }

    pub fn field(&self) -> &NumberField {
        &self.field
    }

    pub fn rank(&self) -> usize {
        self.fund_units.len()
    }

    pub fn fund_units(&self) -> &[FieldElement] {
        &self.fund_units
    }

    pub fn torsion_order(&self) -> u64 {
        self.torsion_order
    }

    pub fn torsion_gen(&self) -> &FieldElement {
        &self.torsion_gen
    }

    pub fn reference_regulator(&self) -> Option<&Rational> {
        self.reference_regulator.as_ref()
    }

    pub fn delta(&self) -> Vec<u32> {
        (0..=self.rank()).map(|i| self.field.delta_weight(i)).collect()
    }

    fn log_data(&self, p: u32) -> Result<Arc<LogData>> {
        if let Some(d) = self.log_cache.lock().expect("log cache").get(&p) {
            return Ok(d.clone());
        }
        let r = self.rank();
        let mut cols = Vec::with_capacity(r);
        for u in &self.fund_units {
            let lv = self.try_log_embedding(u, p)?.ok_or(Error::DependentUnits)?;
            cols.push(lv.t);
        }
        let matrix: Vec<Vec<Interval>> = (0..=r)
            .map(|i| (0..r).map(|j| cols[j][i].clone()).collect())
            .collect();
        let top: Vec<Vec<Interval>> = matrix[..r].to_vec();
        let regulator = det(&top, p).abs();
        let top_inv = inverse(&top, p).ok_or(Error::DependentUnits)?;
        let d = Arc::new(LogData {
            matrix,
            top_inv,
            regulator,
        });
        self.log_cache.lock().expect("log cache").insert(p, d.clone());
        Ok(d)
    }

    fn log_data_escalated(&self, p: u32) -> Result<Arc<LogData>> {
        self.field.escalate(p, "log matrix", |q| match self.log_data(q) {
            Ok(d) => Ok(Some(d)),
            Err(Error::DependentUnits) => Ok(None),
            Err(e) => Err(e),
        })
    }

    /// `(r+1) × r` matrix with column j equal to λ(ε_j).
    pub fn log_matrix(&self, p: u32) -> Result<Vec<Vec<Interval>>> {
        Ok(self.log_data_escalated(p)?.matrix.clone())
    }

    pub fn log_top_inverse(&self, p: u32) -> Result<Vec<Vec<Interval>>> {
        Ok(self.log_data_escalated(p)?.top_inv.clone())
    }

    pub fn regulator_at(&self, p: u32) -> Result<Interval> {
        Ok(self.log_data_escalated(p)?.regulator.clone())
    }

    pub fn regulator(&self) -> Result<Interval> {
        self.regulator_at(DEFAULT_PRECISION)
    }

    /// `R / R_ref` when a reference regulator was supplied. A value that is
    /// clearly above 1 means the units generate a proper sublattice.
    pub fn regulator_index(&self) -> Result<Option<Interval>> {
        let Some(rr) = &self.reference_regulator else {
            return Ok(None);
        };
        let p = DEFAULT_PRECISION;
        let r = self.regulator_at(p)?;
        Ok(r.div(&Interval::from_rational(rr, p)))
    }

    /// True when a reference regulator shows the units are not fundamental.
    pub fn is_non_fundamental(&self) -> Result<Option<bool>> {
        Ok(self.regulator_index()?.map(|ix| {
            let lim = Interval::from_rational(&Rational::from((3, 2)), ix.prec());
            ix.gt(&lim) == Some(true)
        }))
    }

    fn try_log_embedding(&self, g: &FieldElement, p: u32) -> Result<Option<LogVector>> {
        let k = &self.field;
        let moduli = k.embedding_moduli(g, p)?;
        let delta = self.delta();
        let mut t = Vec::with_capacity(delta.len());
        for (i, &di) in delta.iter().enumerate() {
            match moduli[i].ln() {
                Some(l) => t.push(l.mul_int(di as i64)),
                None => return Ok(None),
            }
        }
        Ok(Some(LogVector { t, delta }))
    }

    /// λ(g), escalating precision until every modulus is bounded away from 0.
    pub fn log_embedding(&self, g: &FieldElement, p: u32) -> Result<LogVector> {
        if g.is_zero() {
            return Err(Error::ZeroElement("logarithmic embedding"));
        }
        self.field
            .escalate(p, "logarithmic embedding", |q| self.try_log_embedding(g, q))
    }

    /// λ of a unit from its exponent vector, via the log matrix.
    pub fn log_of_exponent(&self, e: &UnitExponent, p: u32) -> Result<LogVector> {
        let m = self.log_matrix(p)?;
        let q = m[0][0].prec();
        let t = m
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&e.exponents)
                    .fold(Interval::zero(q), |acc, (l, &a)| acc.add(&l.mul_int(a)))
            })
            .collect();
        Ok(LogVector {
            t,
            delta: self.delta(),
        })
    }

    pub fn unit_from_exponent(&self, e: &UnitExponent) -> Result<FieldElement> {
        let k = &self.field;
        let mut acc = k.pow(&self.torsion_gen, (e.torsion_power % self.torsion_order) as i64)?;
        for (u, &a) in self.fund_units.iter().zip(&e.exponents) {
            if a != 0 {
                acc = k.mul(&acc, &k.pow(u, a)?);
            }
        }
        Ok(acc)
    }

    /// Embeddings of ζ and the fundamental units: row 0 is ζ, row j is ε_j.
    pub fn generator_embeddings(&self, p: u32) -> Result<Arc<Vec<Vec<CBall>>>> {
        if let Some(e) = self.emb_cache.lock().expect("embedding cache").get(&p) {
            return Ok(e.clone());
        }
        let mut rows = vec![self.field.embeddings(&self.torsion_gen, p)?.values];
        for u in &self.fund_units {
            rows.push(self.field.embeddings(u, p)?.values);
        }
        let rows = Arc::new(rows);
        self.emb_cache
            .lock()
            .expect("embedding cache")
            .insert(p, rows.clone());
        Ok(rows)
    }

    /// Embeddings of `base · unit(e)` computed multiplicatively.
    pub fn twisted_embeddings(
        &self,
        base: &FieldElement,
        e: &UnitExponent,
        p: u32,
    ) -> Result<Vec<CBall>> {
        let gens = self.generator_embeddings(p)?;
        let b = self.field.embeddings(base, p)?.values;
        let (r1, r2) = (self.field.r1(), self.field.r2());
        let mut out: Vec<CBall> = Vec::with_capacity(b.len());
        for i in 0..(r1 + r2) {
            let mut v = b[i].clone();
            if !e.torsion_power.is_multiple_of(self.torsion_order) {
                let z = gens[0][i]
                    .powi((e.torsion_power % self.torsion_order) as i64)
                    .expect("torsion is nonzero");
                v = v.mul(&z);
            }
            for (j, &a) in e.exponents.iter().enumerate() {
                if a != 0 {
                    let z = gens[j + 1][i]
                        .powi(a)
                        .ok_or_else(|| Error::DivisionByZeroBall("unit embedding".into()))?;
                    v = v.mul(&z);
                }
            }
            out.push(v);
        }
        for i in 0..r2 {
            let c = out[r1 + i].conj();
            out.push(c);
        }
        Ok(out)
    }

    /// `max_i |λ(ε_j)_i / δ_i|` for each j.
    fn column_sup(&self, p: u32) -> Result<Vec<Interval>> {
        let m = self.log_matrix(p)?;
        let delta = self.delta();
        let r = self.rank();
        Ok((0..r)
            .map(|j| {
                let mut best = m[0][j].abs().div_int(delta[0] as i64);
                for (i, row) in m.iter().enumerate().skip(1) {
                    best = best.max(&row[j].abs().div_int(delta[i] as i64));
                }
                best
            })
            .collect())
    }

    /// `κ_3 = Σ_j max_i |λ(ε_j)_i / δ_i|`; every conjugate of
    /// `ε_1^{c_1}⋯ε_r^{c_r}` has `|log|φ(γ)|| ≤ κ_3·max|c_j|`.
    pub fn kappa3(&self, p: u32) -> Result<Interval> {
        let cs = self.column_sup(p)?;
        let q = cs[0].prec();
        Ok(cs.iter().fold(Interval::zero(q), |a, b| a.add(b)))
    }

    /// Rounding witness `μ = κ_3 / 2` of [`Self::lattice_reduce`].
    pub fn mu(&self, p: u32) -> Result<Interval> {
        Ok(self.kappa3(p)?.div_int(2))
    }

    /// `c = 1 / (2r·‖L_top^{-1}‖_∞)`: for C = max|c_j| ≥ 1 some conjugate of
    /// `ε_1^{c_1}⋯ε_r^{c_r}` has modulus ≥ e^{cC} and another ≤ e^{−cC}.
    pub fn lemma4_constant(&self, p: u32) -> Result<Interval> {
        let inv = self.log_top_inverse(p)?;
        let q = inv[0][0].prec();
        let mut norm = Interval::zero(q);
        for row in &inv {
            let s = row.iter().fold(Interval::zero(q), |a, b| a.add(&b.abs()));
            norm = norm.max(&s);
        }
        let den = norm.mul_int(2 * self.rank() as i64);
        den.recip()
            .ok_or_else(|| Error::DivisionByZeroBall("unit-size constant".into()))
    }

    /// Exponent box containing every lattice point of H(m).
    pub fn exponent_bounds(&self, m: &Interval, p: u32) -> Result<Vec<(i64, i64)>> {
        let inv = self.log_top_inverse(p)?;
        let delta = self.delta();
        let r = self.rank();
        let d = self.field.degree() as i64;
        let mut lo = vec![f64::INFINITY; r];
        let mut hi = vec![f64::NEG_INFINITY; r];
        for k in 0..=r {
            let v: Vec<Interval> = (0..r)
                .map(|i| {
                    if i == k {
                        m.mul_int(-(d - delta[k] as i64))
                    } else {
                        m.mul_int(delta[i] as i64)
                    }
                })
                .collect();
            for j in 0..r {
                let q = m.prec();
                let x = (0..r).fold(Interval::zero(q), |acc, i| acc.add(&inv[j][i].mul(&v[i])));
                let (a, b) = x.to_f64_bounds();
                lo[j] = lo[j].min(a);
                hi[j] = hi[j].max(b);
            }
        }
        if lo.iter().chain(&hi).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("enumeration box is unbounded".into()));
        }
        Ok(lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (a.floor() as i64 - 1, b.ceil() as i64 + 1))
            .collect())
    }

    /// `M_+ = log N + log house(α^{-1})` and `M_− = log N − log house(α)`.
    pub fn m_bounds(&self, alpha: &FieldElement, n: &HouseBound, p: u32) -> Result<(Interval, Interval)> {
        let k = &self.field;
        let ln = n.ln_at(p);
        let ha = k.house_at(alpha, p)?.ln().ok_or_else(|| Error::undecided("log house(α)", p))?;
        let hinv = k
            .house_at(&k.inv(alpha)?, p)?
            .ln()
            .ok_or_else(|| Error::undecided("log house(1/α)", p))?;
        Ok((ln.add(&hinv), ln.sub(&ha)))
    }

    /// log|σ_i(α·unit(a))| for each distinguished embedding.
    fn log_moduli(&self, alpha_logs: &[Interval], a: &[i64], p: u32) -> Result<Vec<Interval>> {
        let m = self.log_matrix(p)?;
        let delta = self.delta();
        Ok(alpha_logs
            .iter()
            .enumerate()
            .map(|(i, la)| {
                let s = m[i]
                    .iter()
                    .zip(a)
                    .fold(la.clone(), |acc, (l, &x)| acc.add(&l.mul_int(x).div_int(delta[i] as i64)));
                s
            })
            .collect())
    }

    fn alpha_logs(&self, alpha: &FieldElement, p: u32) -> Result<Option<Vec<Interval>>> {
        let m = self.field.embedding_moduli(alpha, p)?;
        Ok((0..=self.rank()).map(|i| m[i].ln()).collect())
    }

    /// Decides house(α·unit(a)) ≤ N. `None` if undecided at max precision.
    pub fn house_le(&self, alpha: &FieldElement, a: &[i64], n: &HouseBound, p: u32) -> Result<Option<bool>> {
        let mut q = p;
        loop {
            if let Some(al) = self.alpha_logs(alpha, q)? {
                let ln = n.ln_at(q);
                let lm = self.log_moduli(&al, a, q)?;
                let mut all = true;
                let mut any_out = false;
                for x in &lm {
                    match x.le(&ln) {
                        Some(true) => {}
                        Some(false) => any_out = true,
                        None => all = false,
                    }
                }
                if any_out {
                    return Ok(Some(false));
                }
                if all {
                    return Ok(Some(true));
                }
            }
            if q >= self.field.max_precision() {
                return Ok(None);
            }
            q = (q * 2).min(self.field.max_precision());
        }
    }

    /// All units ε (with torsion) such that house(αε) ≤ N, found by scanning
    /// the lattice points of H(M_+) and filtering rigorously.
    pub fn enumerate_units(&self, alpha: &FieldElement, n: &HouseBound, p: u32) -> Result<UnitEnumeration> {
        if alpha.is_zero() {
            return Err(Error::ZeroElement("enumeration base"));
        }
        let (m_plus, m_minus) = self.m_bounds(alpha, n, p)?;
        if m_plus.hi() < &0 {
            return Ok(UnitEnumeration {
                units: vec![],
                borderline: vec![],
                exponent_box: vec![(0, -1); self.rank()],
                m_plus,
                m_minus,
            });
        }
        let bx = self.exponent_bounds(&m_plus.max(&Interval::zero(p)), p)?;
        let cands = exponent_box_points(&bx);
        let verdicts: Vec<Result<Option<bool>>> = cands
            .par_iter()
            .map(|a| self.house_le(alpha, a, n, p))
            .collect();
        let mut units = vec![];
        let mut borderline = vec![];
        for (a, v) in cands.into_iter().zip(verdicts) {
            let target = match v? {
                Some(true) => &mut units,
                Some(false) => continue,
                None => &mut borderline,
            };
            for t in 0..self.torsion_order {
                target.push(UnitExponent::new(t, a.clone()));
            }
        }
        Ok(UnitEnumeration {
            units,
            borderline,
            exponent_box: bx,
            m_plus,
            m_minus,
        })
    }

    /// Rounds the norm-free part of λ(g) to the unit lattice.
    pub fn lattice_reduce(&self, g: &FieldElement, p: u32) -> Result<Reduction> {
        if g.is_zero() {
            return Err(Error::ZeroElement("lattice reduction"));
        }
        let k = &self.field;
        let r = self.rank();
        let lv = self.log_embedding(g, p)?;
        let q = lv.t[0].prec();
        let nrm = Rational::from(k.norm(g).abs_ref());
        let lnn = Interval::from_rational(&nrm, q)
            .ln()
            .ok_or_else(|| Error::Inconsistency("nonzero element with zero norm".into()))?
            .div_int(k.degree() as i64);
        let u: Vec<Interval> = (0..r)
            .map(|i| lv.t[i].sub(&lnn.mul_int(lv.delta[i] as i64)))
            .collect();
        let inv = self.log_top_inverse(q)?;
        let coordinates: Vec<Rational> = (0..r)
            .map(|j| {
                let f = (0..r).fold(Interval::zero(q), |acc, i| acc.add(&inv[j][i].mul(&u[i])));
                f.mid().to_rational().expect("finite coordinate")
            })
            .collect();
        let e: Vec<i64> = coordinates
            .iter()
            .map(|f| {
                let n = round_half_toward_zero(f);
                -n.to_i64().expect("exponent fits in i64")
            })
            .collect();
        let exponent = UnitExponent::new(0, e);
        let reduced = k.mul(&self.unit_from_exponent(&exponent)?, g);
        Ok(Reduction {
            exponent,
            reduced,
            coordinates,
        })
    }

    /// `β = ρ·η` with `η = ε_1^{b_1}⋯ε_r^{b_r}`; torsion stays in ρ.
    pub fn decompose_beta(&self, beta: &FieldElement, p: u32) -> Result<BetaDecomposition> {
        let red = self.lattice_reduce(beta, p)?;
        let b = UnitExponent::new(0, red.exponent.exponents.iter().map(|x| -x).collect());
        let big_b = b.height();
        let rho_height = self.field.abs_log_height_at(&red.reduced, p)?;
        Ok(BetaDecomposition {
            rho: red.reduced,
            b,
            big_b,
            rho_height,
        })
    }
}

/// All integer points of a box, in lexicographic order.
pub fn exponent_box_points(bx: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for &(lo, hi) in bx {
        let mut next = Vec::with_capacity(out.len() * (hi - lo + 1).max(0) as usize);
        for v in &out {
            for a in lo..=hi {
                let mut w = v.clone();
                w.push(a);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis32() -> UnitGroupBasis {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        let e = k.element_i64(&[-1, 1]);
        UnitGroupBasis::new(&k, vec![e], 2, k.from_int(-1), None).unwrap()
    }

    #[test]
    fn regulator_of_cube_root_two() {
        let b = basis32();
        let r = b.regulator().unwrap();
        assert!((r.to_f64() - 1.347374).abs() < 1e-4);
        let lv = b.log_embedding(&b.field().element_i64(&[-1, 1]), 128).unwrap();
        assert!((lv.t[0].to_f64() + 1.347374).abs() < 1e-4);
        assert!(lv.sum().contains_f64(0.0));
    }

    #[test]
    fn rejects_bad_bases() {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        assert!(matches!(
            UnitGroupBasis::new(&k, vec![k.alpha()], 2, k.from_int(-1), None),
            Err(Error::NotAUnit(_))
        ));
        assert!(matches!(
            UnitGroupBasis::new(&k, vec![], 2, k.from_int(-1), None),
            Err(Error::WrongUnitCount { .. })
        ));
        assert!(matches!(
            UnitGroupBasis::new(&k, vec![k.element_i64(&[-1, 1])], 2, k.from_int(1), None),
            Err(Error::Torsion(_))
        ));
    }

    #[test]
    fn squared_unit_is_flagged_against_reference() {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        let e = k.element_i64(&[-1, 1]);
        let e2 = k.mul(&e, &e);
        let rref = parse_rational("1.347374").unwrap();
        let b = UnitGroupBasis::new(&k, vec![e2], 2, k.from_int(-1), Some(rref)).unwrap();
        assert!((b.regulator().unwrap().to_f64() - 2.694747).abs() < 1e-4);
        assert_eq!(b.is_non_fundamental().unwrap(), Some(true));
    }

    #[test]
    fn unit_from_exponent_cube() {
        let b = basis32();
        let k = b.field();
        assert_eq!(
            b.unit_from_exponent(&UnitExponent::new(0, vec![3])).unwrap(),
            k.element_i64(&[1, 3, -3])
        );
        assert_eq!(b.unit_from_exponent(&UnitExponent::new(1, vec![0])).unwrap(), k.from_int(-1));
    }

    #[test]
    fn enumeration_examples() {
        let b = basis32();
        let a = b.field().alpha();
        let en = b.enumerate_units(&a, &HouseBound::parse("2.5").unwrap(), 128).unwrap();
        assert!(en.units.contains(&UnitExponent::new(0, vec![1])));
        let en = b.enumerate_units(&a, &HouseBound::parse("1.3").unwrap(), 128).unwrap();
        assert!(en.units.contains(&UnitExponent::new(0, vec![0])));
        assert!(!en.units.contains(&UnitExponent::new(0, vec![1])));
        let en = b.enumerate_units(&a, &HouseBound::parse("1.2").unwrap(), 128).unwrap();
        assert!(en.units.is_empty());
    }

    #[test]
    fn reduce_and_decompose() {
        let b = basis32();
        let k = b.field();
        let e = k.element_i64(&[-1, 1]);
        let g = k.mul(&k.element_i64(&[1, 1]), &k.pow(&e, -6).unwrap());
        let red = b.lattice_reduce(&g, 128).unwrap();
        assert!((red.exponent.exponents[0] - 6).abs() <= 1);
        let d = b.decompose_beta(&k.element_i64(&[1, 3, -3]), 128).unwrap();
        assert_eq!(d.rho, k.one());
        assert_eq!(d.b.exponents, vec![3]);
        assert_eq!(d.big_b, 3);
        let d = b.decompose_beta(&k.alpha(), 128).unwrap();
        assert_eq!(d.rho, k.alpha());
        assert_eq!(d.big_b, 1);
        let d = b.decompose_beta(&k.element_i64(&[1, -1]), 128).unwrap();
        assert_eq!(d.rho, k.from_int(-1));
        assert_eq!(d.b.exponents, vec![1]);
    }

    #[test]
    fn rounding_ties() {
        assert_eq!(round_half_toward_zero(&Rational::from((1, 2))), 0);
        assert_eq!(round_half_toward_zero(&Rational::from((-1, 2))), 0);
        assert_eq!(round_half_toward_zero(&Rational::from((3, 2))), 1);
        assert_eq!(round_half_toward_zero(&Rational::from((-5, 2))), -2);
        assert_eq!(round_half_toward_zero(&Rational::from((7, 5))), 1);
    }
}
