//! Exhaustive solution of |F(x, y)| ≤ m over coordinate boxes and unit
//! families, plus the elimination identities between embeddings.

use std::cmp::Ordering;

use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::ball::{CBall, Interval};
use crate::classify::{classify_family, FamilyClassification, SetFilter};
use crate::error::{Error, Result};
use crate::field::{FieldElement, NumberField, DEFAULT_MAX_PRECISION};
use crate::forms::{twisted_form, BinaryForm};
use crate::roots;
use crate::units::{HouseBound, UnitExponent, UnitGroupBasis};

/// One pair with `0 < |x|, |y| ≤ X` and `|F(x, y)| ≤ m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FormSolution {
    pub x: i64,
    pub y: i64,
    pub value: Integer,
}

fn solution_order(a: (i64, i64), b: (i64, i64)) -> Ordering {
    (a.1.unsigned_abs(), a.0.unsigned_abs(), a.1, a.0).cmp(&(b.1.unsigned_abs(), b.0.unsigned_abs(), b.1, b.0))
}

/// Naive double loop; used when F(X, 1) has repeated roots.
fn scan_box(form: &BinaryForm, m: &Integer, xb: i64) -> Vec<FormSolution> {
    let mut out = vec![];
    for y in (-xb..=xb).filter(|&y| y != 0) {
        for x in (-xb..=xb).filter(|&x| x != 0) {
            let v = form.evaluate_i64(x, y);
            if Integer::from(v.abs_ref()) <= *m {
                out.push(FormSolution { x, y, value: v });
            }
        }
    }
    out
}

/// All `(x, y)` with `0 < |x|, |y| ≤ box` and `|F(x, y)| ≤ m`, sorted by
/// `(|y|, |x|, y, x)`.
///
/// For fixed y, `|F(x, y)| ≤ m` forces `|x − θ_i y| ≤ (m/b_0)^{1/δ}` for some
/// root θ_i of F(X, 1), hence `|x − Re(θ_i) y| ≤ (m/b_0)^{1/δ}`; only those
/// windows are evaluated.
pub fn solve_box(form: &BinaryForm, m: &Integer, xbound: u64) -> Result<Vec<FormSolution>> {
    if *m < 0 {
        return Err(Error::InvalidInput("m must be nonnegative".into()));
    }
    let xb = i64::try_from(xbound).map_err(|_| Error::InvalidInput("box too large".into()))?;
    let isolated = if form.is_squarefree() {
        roots::isolate(form.coeffs(), DEFAULT_MAX_PRECISION)
    } else {
        None
    };
    let Some((_, thetas)) = isolated else {
        let mut out = scan_box(form, m, xb);
        out.sort_by(|a, b| solution_order((a.x, a.y), (b.x, b.y)));
        return Ok(out);
    };
    let p = thetas[0].prec();
    let delta = form.degree() as i64;
    let radius = if *m == 0 {
        Interval::zero(p)
    } else {
        Interval::from_integer(m, p)
            .div(&Interval::from_integer(form.lead(), p))
            .and_then(|q| q.ln())
            .map(|l| l.div_int(delta).exp())
            .ok_or_else(|| Error::Inconsistency("window radius".into()))?
    };
    let re: Vec<Interval> = thetas.iter().map(|t| t.re.clone()).collect();
    let ys: Vec<i64> = (-xb..=xb).filter(|&y| y != 0).collect();
    let mut out: Vec<FormSolution> = ys
        .par_iter()
        .flat_map_iter(|&y| {
            let yi = Interval::from_int(y, p);
            let mut windows: Vec<(i64, i64)> = re
                .iter()
                .map(|r| {
                    let c = r.mul(&yi);
                    let lo = c.sub(&radius).lo().to_f64_round(rug::float::Round::Down).floor();
                    let hi = c.add(&radius).hi().to_f64_round(rug::float::Round::Up).ceil();
                    (lo.max(-(xb as f64)) as i64, hi.min(xb as f64) as i64)
                })
                .filter(|(a, b)| a <= b)
                .collect();
            windows.sort();
            let mut merged: Vec<(i64, i64)> = vec![];
            for (a, b) in windows {
                match merged.last_mut() {
                    Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
                    _ => merged.push((a, b)),
                }
            }
            let mut sols = vec![];
            for (a, b) in merged {
                for x in a..=b {
                    if x == 0 {
                        continue;
                    }
                    let v = form.evaluate_i64(x, y);
                    if Integer::from(v.abs_ref()) <= *m {
                        sols.push(FormSolution { x, y, value: v });
                    }
                }
            }
            sols
        })
        .collect();
    out.sort_by(|a, b| solution_order((a.x, a.y), (b.x, b.y)));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionRecord {
    pub x: i64,
    pub y: i64,
    pub e: UnitExponent,
    pub value: Integer,
    pub m: Integer,
    /// Found through the reciprocal form, i.e. in the `|y| ≤ |x|` branch.
    pub swapped: bool,
}

#[derive(Clone, Debug)]
pub struct FamilyRun {
    pub records: Vec<SolutionRecord>,
    pub classification: FamilyClassification,
    /// Units in the chosen set that were solved.
    pub solved_units: Vec<UnitExponent>,
    /// Units whose classification was undecided and which were skipped.
    pub skipped_borderline: Vec<UnitExponent>,
}

#[allow(clippy::too_many_arguments)]
pub fn solve_family(
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    nu: &Rational,
    m: &Integer,
    n: &HouseBound,
    xbound: u64,
    filter: SetFilter,
    p: u32,
) -> Result<FamilyRun> {
    let k = basis.field();
    let cls = classify_family(basis, alpha, n, nu, p)?;
    let alpha_inv = k.inv(alpha)?;
    let mut records = vec![];
    let mut solved_units = vec![];
    let mut skipped = vec![];
    for rec in &cls.records {
        if rec.is_borderline() {
            skipped.push(rec.eps.clone());
            continue;
        }
        if !rec.in_set(filter) {
            continue;
        }
        solved_units.push(rec.eps.clone());
        let eps = basis.unit_from_exponent(&rec.eps)?;
        let (form, _) = twisted_form(k, alpha, &eps)?;
        for s in solve_box(&form, m, xbound)? {
            if s.x.unsigned_abs() <= s.y.unsigned_abs() {
                records.push(SolutionRecord {
                    x: s.x,
                    y: s.y,
                    e: rec.eps.clone(),
                    value: s.value,
                    m: m.clone(),
                    swapped: false,
                });
            }
        }
        let (rform, _) = twisted_form(k, &alpha_inv, &k.inv(&eps)?)?;
        for s in solve_box(&rform, m, xbound)? {
            if s.x.unsigned_abs() < s.y.unsigned_abs() {
                let (x, y) = (s.y, s.x);
                records.push(SolutionRecord {
                    x,
                    y,
                    e: rec.eps.clone(),
                    value: form.evaluate_i64(x, y),
                    m: m.clone(),
                    swapped: true,
                });
            }
        }
    }
    records.sort_by(|a, b| {
        a.e.cmp(&b.e)
            .then(solution_order((a.x, a.y), (b.x, b.y)))
            .then(a.swapped.cmp(&b.swapped))
    });
    Ok(FamilyRun {
        records,
        classification: cls,
        solved_units,
        skipped_borderline: skipped,
    })
}

/// Recovers `(x, y)` from `β = x − αε·y` at two embeddings:
/// `y = (φ_1(β) − φ_2(β)) / (φ_2(αε) − φ_1(αε))`,
/// `x = (φ_2(αε)φ_1(β) − φ_1(αε)φ_2(β)) / (φ_2(αε) − φ_1(αε))`.
pub fn recover_xy(
    field: &NumberField,
    alpha_eps: &FieldElement,
    beta: &FieldElement,
    phi1: usize,
    phi2: usize,
    p: u32,
) -> Result<(CBall, CBall)> {
    if phi1 == phi2 {
        return Err(Error::InvalidInput("recover_xy needs two distinct embeddings".into()));
    }
    let u = field.embeddings(alpha_eps, p)?.values;
    let v = field.embeddings(beta, p)?.values;
    let den = u[phi2].sub(&u[phi1]);
    if den.contains_zero() {
        return Err(Error::DivisionByZeroBall(format!(
            "φ_{}(αε) − φ_{}(αε)",
            phi2 + 1,
            phi1 + 1
        )));
    }
    let y = v[phi1].sub(&v[phi2]).div(&den);
    let x = u[phi2].mul(&v[phi1]).sub(&u[phi1].mul(&v[phi2])).div(&den);
    match (x, y) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(Error::DivisionByZeroBall("elimination denominator".into())),
    }
}

/// `u_1v_2 − u_1v_3 + u_2v_3 − u_2v_1 + u_3v_1 − u_3v_2`.
pub fn six_term_residual(u: &[CBall; 3], v: &[CBall; 3]) -> CBall {
    u[0].mul(&v[1])
        .sub(&u[0].mul(&v[2]))
        .add(&u[1].mul(&v[2]))
        .sub(&u[1].mul(&v[0]))
        .add(&u[2].mul(&v[0]))
        .sub(&u[2].mul(&v[1]))
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalEntry {
    pub x: i64,
    pub y: i64,
    pub e: UnitExponent,
    #[serde(skip)]
    pub height: Interval,
    #[serde(skip)]
    pub ratio: Interval,
}

#[derive(Clone, Debug)]
pub struct EmpiricalReport {
    /// `max log max{|x|, |y|, e^{h(αε)}} / log m`; absent for no solutions.
    pub kappa_emp: Option<Interval>,
    pub entries: Vec<EmpiricalEntry>,
}

pub fn empirical_exponent(
    solutions: &[SolutionRecord],
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    m: &Integer,
    p: u32,
) -> Result<EmpiricalReport> {
    if *m < 2 {
        return Err(Error::InvalidInput("empirical exponent needs m ≥ 2".into()));
    }
    let k = basis.field();
    let logm = Interval::from_integer(m, p).ln().expect("m ≥ 2");
    let mut entries = vec![];
    let mut kappa: Option<Interval> = None;
    for s in solutions {
        let ae = k.mul(alpha, &basis.unit_from_exponent(&s.e)?);
        let h = k.abs_log_height_at(&ae, p)?;
        let lx = Interval::from_int(s.x.abs().max(1), p).ln().expect("positive");
        let ly = Interval::from_int(s.y.abs().max(1), p).ln().expect("positive");
        let top = lx.max(&ly).max(&h);
        let ratio = top.div(&logm).expect("log m > 0");
        kappa = Some(match kappa {
            None => ratio.clone(),
            Some(c) => c.max(&ratio),
        });
        entries.push(EmpiricalEntry {
            x: s.x,
            y: s.y,
            e: s.e.clone(),
            height: h,
            ratio,
        });
    }
    Ok(EmpiricalReport {
        kappa_emp: kappa,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_examples() {
        let f = BinaryForm::from_i64(&[1, 0, 6, -2]).unwrap();
        let s = solve_box(&f, &Integer::from(2), 1000).unwrap();
        assert!(s.iter().any(|t| (t.x, t.y) == (1, 3) && t.value == 1));
        let g = BinaryForm::from_i64(&[1, 0, 0, -2]).unwrap();
        let s = solve_box(&g, &Integer::from(1), 1000).unwrap();
        assert!(s.iter().any(|t| (t.x, t.y) == (1, 1) && t.value == -1));
        assert!(solve_box(&g, &Integer::new(), 100).unwrap().is_empty());
    }

    #[test]
    fn repeated_root_form_falls_back_to_scan() {
        let f = BinaryForm::from_i64(&[1, -2, 1]).unwrap();
        let s = solve_box(&f, &Integer::new(), 3).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|t| t.x == t.y));
    }

    #[test]
    fn family_contains_known_solution() {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        let b = UnitGroupBasis::new(&k, vec![k.element_i64(&[-1, 1])], 2, k.from_int(-1), None).unwrap();
        let run = solve_family(
            &b,
            &k.alpha(),
            &Rational::from((1, 2)),
            &Integer::from(2),
            &HouseBound::parse("100").unwrap(),
            1000,
            SetFilter::ENu,
            128,
        )
        .unwrap();
        assert!(run
            .records
            .iter()
            .any(|r| (r.x, r.y) == (1, 3) && r.e == UnitExponent::new(0, vec![1]) && !r.swapped));
        for r in &run.records {
            assert!(Integer::from(r.value.abs_ref()) <= 2);
            if !r.swapped {
                assert!(r.x.abs() <= r.y.abs());
            }
        }
        let run = solve_family(
            &b,
            &k.alpha(),
            &Rational::from((1, 2)),
            &Integer::from(2),
            &HouseBound::parse("100").unwrap(),
            50,
            SetFilter::TildeENu,
            128,
        )
        .unwrap();
        assert!(!run.solved_units.contains(&UnitExponent::new(0, vec![1])));
    }

    #[test]
    fn elimination_and_six_terms() {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        let ae = k.element_i64(&[0, -1, 1]);
        let beta = k.element_i64(&[1, 3, -3]);
        let (x, y) = recover_xy(&k, &ae, &beta, 0, 1, 128).unwrap();
        assert_eq!(x.unique_real_integer(), Some(Integer::from(1)));
        assert_eq!(y.unique_real_integer(), Some(Integer::from(3)));
        let u = k.embeddings(&ae, 128).unwrap().values;
        let v = k.embeddings(&beta, 128).unwrap().values;
        let r = six_term_residual(&[u[0].clone(), u[1].clone(), u[2].clone()], &[v[0].clone(), v[1].clone(), v[2].clone()]);
        assert!(r.contains_zero());
        assert!(r.re.width() < 1e-12 && r.im.width() < 1e-12);
        let same = six_term_residual(&[u[0].clone(), u[1].clone(), u[2].clone()], &[u[0].clone(), u[1].clone(), u[2].clone()]);
        assert!(same.contains_zero());
    }
}
