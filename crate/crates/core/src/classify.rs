//! Membership in E, E_ν, Ẽ_ν and the privileged embeddings σ_a, σ_b, τ_a, τ_b.

use rayon::prelude::*;
use rug::Rational;
use serde::Serialize;

use crate::ball::{CBall, Interval};
use crate::error::{Error, Result};
use crate::field::{FieldElement, NumberField};
use crate::units::{HouseBound, UnitExponent, UnitGroupBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SetFilter {
    E,
    ENu,
    TildeENu,
}

impl SetFilter {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "E" => Ok(SetFilter::E),
            "Enu" => Ok(SetFilter::ENu),
            "tildeEnu" => Ok(SetFilter::TildeENu),
            _ => Err(Error::InvalidInput(format!("unknown set {s:?} (expected E, Enu, tildeEnu)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SetFilter::E => "E",
            SetFilter::ENu => "Enu",
            SetFilter::TildeENu => "tildeEnu",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassificationRecord {
    pub eps: UnitExponent,
    pub in_e: bool,
    pub in_e_nu: bool,
    pub in_tilde_e_nu: bool,
    pub nu: Rational,
    pub house_alpha_eps: Interval,
    /// `(φ_1, φ_2)` certifying E_ν membership.
    pub witnesses: Option<(usize, usize)>,
    /// Same for 1/(αε), certifying Ẽ_ν membership.
    pub tilde_witnesses: Option<(usize, usize)>,
    /// house(αε) ≤ 1: excluded from the ν-tests.
    pub house_le_one: bool,
    /// Undecided tests at maximum precision.
    pub borderline: Vec<String>,
}

impl ClassificationRecord {
    pub fn in_set(&self, s: SetFilter) -> bool {
        match s {
            SetFilter::E => self.in_e,
            SetFilter::ENu => self.in_e_nu,
            SetFilter::TildeENu => self.in_tilde_e_nu,
        }
    }

    pub fn is_borderline(&self) -> bool {
        !self.borderline.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NuOutcome {
    Member(usize, usize),
    NotMember,
    HouseAtMostOne,
    Undecided,
}

/// `base^ν` for `base > 0`.
pub fn pow_nu(base: &Interval, nu: &Rational) -> Option<Interval> {
    base.pow(&Interval::from_rational(nu, base.prec()))
}

/// Indices whose interval may equal the maximum.
fn max_candidates(m: &[Interval]) -> Vec<usize> {
    let maxlo = m.iter().skip(1).fold(m[0].lo().clone(), |a, x| {
        if x.lo() > &a {
            x.lo().clone()
        } else {
            a
        }
    });
    (0..m.len()).filter(|&i| m[i].hi() >= &maxlo).collect()
}

fn min_candidates(m: &[Interval]) -> Vec<usize> {
    let minhi = m.iter().skip(1).fold(m[0].hi().clone(), |a, x| {
        if x.hi() < &a {
            x.hi().clone()
        } else {
            a
        }
    });
    (0..m.len()).filter(|&i| m[i].lo() <= &minhi).collect()
}

fn max_of(m: &[Interval]) -> Interval {
    m.iter().skip(1).fold(m[0].clone(), |a, b| a.max(b))
}

fn min_of(m: &[Interval]) -> Interval {
    m.iter().skip(1).fold(m[0].clone(), |a, b| a.min(b))
}

/// A candidate set is resolved when its members are provably equal.
fn resolved(c: &[usize], field: &NumberField, exact_tie: bool) -> bool {
    match c.len() {
        0 => false,
        1 => true,
        2 => exact_tie || field.conjugate_index(c[0]) == c[1],
        _ => exact_tie,
    }
}

/// Tests "some φ_1 attains the maximum and another φ_2 has modulus at least
/// max^ν" on a list of moduli. For max > 1 this holds iff at least two
/// moduli reach max^ν, so exact ties at the maximum need not be broken.
pub fn nu_test(field: &NumberField, m: &[Interval], nu: &Rational) -> NuOutcome {
    let p = m[0].prec();
    let one = Interval::one(p);
    let h = max_of(m);
    match h.le(&one) {
        Some(true) => return NuOutcome::HouseAtMostOne,
        None => return NuOutcome::Undecided,
        Some(false) => {}
    }
    let Some(thr) = pow_nu(&h, nu) else {
        return NuOutcome::Undecided;
    };
    let mut sure = vec![];
    let mut undecided = false;
    for (j, mj) in m.iter().enumerate() {
        match mj.ge(&thr) {
            Some(true) => sure.push(j),
            Some(false) => {}
            None => undecided = true,
        }
    }
    if sure.len() < 2 {
        return if undecided {
            NuOutcome::Undecided
        } else {
            NuOutcome::NotMember
        };
    }
    let c = max_candidates(m);
    let phi1 = if resolved(&c, field, false) { c[0] } else { c.iter().copied().find(|i| sure.contains(i)).unwrap_or(sure[0]) };
    let phi2 = sure.iter().copied().find(|&j| j != phi1).expect("two indices reach the threshold");
    NuOutcome::Member(phi1, phi2)
}

/// Q(αε) = K: pairwise disjoint conjugates, or else an exact squarefree test.
pub fn in_e(basis: &UnitGroupBasis, alpha: &FieldElement, e: &UnitExponent, p: u32) -> Result<bool> {
    let emb = basis.twisted_embeddings(alpha, e, p)?;
    if pairwise_disjoint(&emb) {
        return Ok(true);
    }
    let k = basis.field();
    let ae = k.mul(alpha, &basis.unit_from_exponent(e)?);
    Ok(k.char_poly(&ae).is_squarefree())
}

fn pairwise_disjoint(v: &[CBall]) -> bool {
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            if v[i].overlaps(&v[j]) {
                return false;
            }
        }
    }
    true
}

fn moduli(basis: &UnitGroupBasis, alpha: &FieldElement, e: &UnitExponent, p: u32) -> Result<Vec<Interval>> {
    Ok(basis
        .twisted_embeddings(alpha, e, p)?
        .iter()
        .map(|z| z.abs())
        .collect())
}

pub fn classify_unit(
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    e: &UnitExponent,
    nu: &Rational,
    p: u32,
) -> Result<ClassificationRecord> {
    if *nu <= 0 || *nu >= 1 {
        return Err(Error::InvalidInput("ν must lie in (0, 1)".into()));
    }
    let k = basis.field();
    let in_e = in_e(basis, alpha, e, p)?;
    let maxp = k.max_precision();
    let mut q = p;
    let (direct, inverse, house) = loop {
        let m = moduli(basis, alpha, e, q)?;
        let house = max_of(&m);
        let direct = nu_test(k, &m, nu);
        let inverse = if matches!(direct, NuOutcome::Member(..)) {
            match m.iter().map(|x| x.recip()).collect::<Option<Vec<_>>>() {
                Some(inv) => nu_test(k, &inv, nu),
                None => NuOutcome::Undecided,
            }
        } else {
            NuOutcome::NotMember
        };
        let done = direct != NuOutcome::Undecided && inverse != NuOutcome::Undecided;
        if done || q >= maxp {
            break (direct, inverse, house);
        }
        q = (q * 2).min(maxp);
    };
    let mut borderline = vec![];
    if direct == NuOutcome::Undecided {
        borderline.push(format!("E_nu test undecided at {maxp} bits"));
    }
    if inverse == NuOutcome::Undecided {
        borderline.push(format!("inverse E_nu test undecided at {maxp} bits"));
    }
    let witnesses = match direct {
        NuOutcome::Member(a, b) if in_e => Some((a, b)),
        _ => None,
    };
    let tilde_witnesses = match inverse {
        NuOutcome::Member(a, b) if witnesses.is_some() => Some((a, b)),
        _ => None,
    };
    Ok(ClassificationRecord {
        eps: e.clone(),
        in_e,
        in_e_nu: witnesses.is_some(),
        in_tilde_e_nu: tilde_witnesses.is_some(),
        nu: nu.clone(),
        house_alpha_eps: house,
        witnesses,
        tilde_witnesses,
        house_le_one: direct == NuOutcome::HouseAtMostOne,
        borderline,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FamilyCounts {
    pub units: usize,
    pub e: usize,
    pub e_nu: usize,
    pub tilde_e_nu: usize,
    pub borderline: usize,
}

#[derive(Clone, Debug)]
pub struct FamilyClassification {
    pub records: Vec<ClassificationRecord>,
    pub counts: FamilyCounts,
    /// Units whose house predicate was undecided during enumeration.
    pub enumeration_borderline: Vec<UnitExponent>,
    pub m_plus: Interval,
    pub m_minus: Interval,
}

pub fn classify_family(
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    n: &HouseBound,
    nu: &Rational,
    p: u32,
) -> Result<FamilyClassification> {
    let en = basis.enumerate_units(alpha, n, p)?;
    let records: Vec<ClassificationRecord> = en
        .units
        .par_iter()
        .map(|e| classify_unit(basis, alpha, e, nu, p))
        .collect::<Result<_>>()?;
    let mut counts = FamilyCounts {
        units: records.len(),
        borderline: en.borderline.len(),
        ..Default::default()
    };
    for r in &records {
        counts.e += r.in_e as usize;
        counts.e_nu += r.in_e_nu as usize;
        counts.tilde_e_nu += r.in_tilde_e_nu as usize;
        counts.borderline += r.is_borderline() as usize;
    }
    Ok(FamilyClassification {
        records,
        counts,
        enumeration_borderline: en.borderline,
        m_plus: en.m_plus,
        m_minus: en.m_minus,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PrivilegedEmbeddings {
    pub sigma_a: usize,
    pub sigma_b: usize,
    pub tau_a: usize,
    pub tau_b: usize,
    pub sigma_a_set: Vec<usize>,
    pub sigma_b_set: Vec<usize>,
    pub t_a_set: Vec<usize>,
    pub t_b_set: Vec<usize>,
    pub tau_a_ne_sigma_a: bool,
    pub tau_b_ne_sigma_b: bool,
    pub precision: u32,
}

fn threshold_set(
    m: &[Interval],
    thr: &Interval,
    upper: bool,
) -> Option<Vec<usize>> {
    let mut out = vec![];
    for (i, x) in m.iter().enumerate() {
        let v = if upper { x.ge(thr) } else { x.le(thr) };
        match v {
            Some(true) => out.push(i),
            Some(false) => {}
            None => return None,
        }
    }
    Some(out)
}

fn try_privileged(
    field: &NumberField,
    ae: &FieldElement,
    beta: &FieldElement,
    nu: &Rational,
    p: u32,
) -> Result<Option<PrivilegedEmbeddings>> {
    let ma = field.embedding_moduli(ae, p)?;
    let mb = field.embedding_moduli(beta, p)?;
    let ra = ae.as_rational().is_some();
    let rb = beta.as_rational().is_some();
    let (ca, ta, cb, tb) = (
        max_candidates(&ma),
        min_candidates(&ma),
        max_candidates(&mb),
        min_candidates(&mb),
    );
    if !(resolved(&ca, field, ra) && resolved(&ta, field, ra) && resolved(&cb, field, rb) && resolved(&tb, field, rb)) {
        return Ok(None);
    }
    let (sa, sb, ta, tb) = (ca[0], cb[0], ta[0], tb[0]);
    let thr = |x: &Interval| pow_nu(x, nu);
    let (Some(h_a), Some(h_b), Some(l_a), Some(l_b)) = (
        thr(&max_of(&ma)),
        thr(&max_of(&mb)),
        thr(&min_of(&ma)),
        thr(&min_of(&mb)),
    ) else {
        return Ok(None);
    };
    let sets = (
        threshold_set(&ma, &h_a, true),
        threshold_set(&mb, &h_b, true),
        threshold_set(&ma, &l_a, false),
        threshold_set(&mb, &l_b, false),
    );
    let (Some(sigma_a_set), Some(sigma_b_set), Some(t_a_set), Some(t_b_set)) = sets else {
        return Ok(None);
    };
    Ok(Some(PrivilegedEmbeddings {
        sigma_a: sa,
        sigma_b: sb,
        tau_a: ta,
        tau_b: tb,
        sigma_a_set,
        sigma_b_set,
        t_a_set,
        t_b_set,
        tau_a_ne_sigma_a: ta != sa,
        tau_b_ne_sigma_b: tb != sb,
        precision: p,
    }))
}

/// Arg-max/arg-min embeddings of |φ(αε)| and |φ(β)| (lowest index on ties)
/// and the four ν-threshold sets.
pub fn privileged(
    field: &NumberField,
    alpha_eps: &FieldElement,
    beta: &FieldElement,
    nu: &Rational,
    p: u32,
) -> Result<PrivilegedEmbeddings> {
    if alpha_eps.is_zero() || beta.is_zero() {
        return Err(Error::ZeroElement("privileged embeddings"));
    }
    field.escalate(p, "privileged embeddings", |q| {
        try_privileged(field, alpha_eps, beta, nu, q)
    })
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
    fn classification_example() {
        let b = basis32();
        let a = b.field().alpha();
        let half = Rational::from((1, 2));
        let r = classify_unit(&b, &a, &UnitExponent::new(0, vec![1]), &half, 128).unwrap();
        assert!(r.in_e && r.in_e_nu && !r.in_tilde_e_nu);
        assert!(r.borderline.is_empty());
        let (w1, w2) = r.witnesses.unwrap();
        assert_eq!(b.field().conjugate_index(w1), w2);
        let r = classify_unit(&b, &a, &UnitExponent::new(0, vec![0]), &half, 128).unwrap();
        assert!(r.in_e);
    }

    #[test]
    fn non_primitive_quartic_unit_not_in_e() {
        // α = √2 / (1 + 2^{1/4}) generates K, while α·(1 + 2^{1/4}) = √2 does not.
        let k = NumberField::from_i64(&[1, 0, 0, 0, -2]).unwrap();
        let u1 = k.element_i64(&[1, 1]);
        let u2 = k.element_i64(&[1, 0, 1]);
        let b = UnitGroupBasis::new(&k, vec![u1.clone(), u2], 2, k.from_int(-1), None).unwrap();
        let alpha = k.div(&k.element_i64(&[0, 0, 1]), &u1).unwrap();
        assert!(!in_e(&b, &alpha, &UnitExponent::new(0, vec![1, 0]), 128).unwrap());
        assert!(in_e(&b, &alpha, &UnitExponent::new(0, vec![0, 0]), 128).unwrap());
    }

    #[test]
    fn privileged_on_traced_solution() {
        let b = basis32();
        let k = b.field();
        let ae = k.element_i64(&[0, -1, 1]);
        let beta = k.element_i64(&[1, 3, -3]);
        let pe = privileged(k, &ae, &beta, &Rational::from((1, 2)), 128).unwrap();
        assert_eq!(pe.tau_b, 0);
        assert_eq!(pe.tau_a, 0);
        assert!(pe.sigma_a >= 1 && pe.sigma_b >= 1);
        let pe = privileged(k, &ae, &k.one(), &Rational::from((1, 2)), 128).unwrap();
        assert_eq!((pe.sigma_b, pe.tau_b), (0, 0));
        assert_eq!(pe.sigma_b_set, vec![0, 1, 2]);
        assert_eq!(pe.t_b_set, vec![0, 1, 2]);
    }
}
