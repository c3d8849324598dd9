//! Per-solution diagnostics: every quantity the elimination argument
//! manipulates, each inequality reported as a numeric margin.

use rug::{Integer, Rational};
use serde::Serialize;

use crate::ball::{CBall, Interval};
use crate::classify::{privileged, PrivilegedEmbeddings};
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::forms::{norm_side, twisted_form};
use crate::solver::{recover_xy, six_term_residual, SolutionRecord};
use crate::units::{UnitExponent, UnitGroupBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Borderline,
    NotApplicable,
    Reported,
}

impl Verdict {
    fn from_cmp(c: Option<bool>) -> Self {
        match c {
            Some(true) => Verdict::Holds,
            Some(false) => Verdict::Fails,
            None => Verdict::Borderline,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Margin {
    pub id: String,
    pub statement: String,
    pub lhs: Option<Interval>,
    pub rhs: Option<Interval>,
    pub verdict: Verdict,
    pub note: String,
}

impl Margin {
    fn cmp(id: impl Into<String>, statement: impl Into<String>, lhs: Interval, rhs: Interval) -> Self {
        let verdict = Verdict::from_cmp(lhs.le(&rhs));
        Margin {
            id: id.into(),
            statement: statement.into(),
            lhs: Some(lhs),
            rhs: Some(rhs),
            verdict,
            note: String::new(),
        }
    }

    fn flag(id: impl Into<String>, statement: impl Into<String>, verdict: Verdict, note: impl Into<String>) -> Self {
        Margin {
            id: id.into(),
            statement: statement.into(),
            lhs: None,
            rhs: None,
            verdict,
            note: note.into(),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// `lhs / rhs` when both are present and rhs excludes zero.
    pub fn ratio(&self) -> Option<Interval> {
        match (&self.lhs, &self.rhs) {
            (Some(a), Some(b)) => a.div(b),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinearFormValue {
    pub id: String,
    /// Embedding indices involved, in the order of the displayed formula.
    pub indices: Vec<usize>,
    pub value: Option<Interval>,
    /// Upper-bound witnesses evaluated alongside, labeled.
    pub witnesses: Vec<(String, Interval)>,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct Consistency {
    pub id: String,
    pub ok: bool,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct SolutionTrace {
    pub solution: SolutionRecord,
    /// True when the trace was run on `(y, x)` with `(α^{-1}, ε^{-1})` so
    /// that `|x| ≤ |y|` holds.
    pub reciprocal: bool,
    pub x: i64,
    pub y: i64,
    pub e: UnitExponent,
    pub alpha_eps: FieldElement,
    pub beta: FieldElement,
    pub rho: Option<FieldElement>,
    pub b: Option<UnitExponent>,
    pub a_tilde: Interval,
    pub a: u64,
    pub b_tilde: Interval,
    pub big_b: Option<u64>,
    pub rho_height: Option<Interval>,
    pub privileged: Option<PrivilegedEmbeddings>,
    /// Unit-size constant c and the threshold `log m / c` for the small regime.
    pub c: Interval,
    pub regime_threshold: Option<Interval>,
    pub small_regime: bool,
    pub regime_reasons: Vec<String>,
    pub margins: Vec<Margin>,
    pub linear_forms: Vec<LinearFormValue>,
    pub consistency: Vec<Consistency>,
    pub precision: u32,
}

impl SolutionTrace {
    pub fn inconsistencies(&self) -> Vec<&Consistency> {
        self.consistency.iter().filter(|c| !c.ok).collect()
    }

    pub fn margin(&self, id: &str) -> Option<&Margin> {
        self.margins.iter().find(|m| m.id == id)
    }

    pub fn has_borderline(&self) -> bool {
        self.margins.iter().any(|m| m.verdict == Verdict::Borderline)
    }
}

#[derive(Clone, Debug)]
pub struct TraceOptions {
    pub lambda: Rational,
    pub mu: Rational,
    /// Extra `(φ_1, φ_2, φ_3, φ_4)` tuples for the four-embedding linear form.
    pub tuples: Vec<[usize; 4]>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            lambda: Rational::from((1, 2)),
            mu: Rational::from((3, 2)),
            tuples: vec![],
        }
    }
}

/// Traces one solution; escalates precision while any margin is borderline.
pub fn trace(
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    solution: &SolutionRecord,
    nu: &Rational,
    m: &Integer,
    p: u32,
) -> Result<SolutionTrace> {
    trace_with(basis, alpha, solution, nu, m, &TraceOptions::default(), p)
}

pub fn trace_with(
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    solution: &SolutionRecord,
    nu: &Rational,
    m: &Integer,
    opts: &TraceOptions,
    p: u32,
) -> Result<SolutionTrace> {
    if solution.x == 0 || solution.y == 0 {
        return Err(Error::InvalidInput("trace needs xy ≠ 0".into()));
    }
    let max = basis.field().max_precision().max(p);
    let mut q = p;
    loop {
        let t = trace_at(basis, alpha, solution, nu, m, opts, q)?;
        if !t.has_borderline() || q >= max {
            return Ok(t);
        }
        q = (2 * q).min(max);
    }
}

fn log_m(m: &Integer, p: u32) -> Option<Interval> {
    if *m >= 2 {
        Interval::from_integer(m, p).ln()
    } else {
        None
    }
}

#[allow(clippy::too_many_arguments)]
fn trace_at(
    basis: &UnitGroupBasis,
    alpha0: &FieldElement,
    sol: &SolutionRecord,
    nu: &Rational,
    m: &Integer,
    opts: &TraceOptions,
    p: u32,
) -> Result<SolutionTrace> {
    let k = basis.field();
    let d = k.degree();
    let reciprocal = sol.x.unsigned_abs() > sol.y.unsigned_abs();
    let (alpha, e, x, y) = if reciprocal {
        (k.inv(alpha0)?, sol.e.negate(basis.torsion_order()), sol.y, sol.x)
    } else {
        (alpha0.clone(), sol.e.clone(), sol.x, sol.y)
    };
    let eps = basis.unit_from_exponent(&e)?;
    let ae = k.mul(&alpha, &eps);
    let xq = Rational::from(x);
    let yq = Rational::from(y);
    let beta = k.sub(&k.from_rational(xq.clone()), &k.scale(&ae, &yq));
    if beta.is_zero() {
        return Err(Error::Inconsistency("β = x − αεy vanishes".into()));
    }

    let one = Interval::one(p);
    let h_ae = k.abs_log_height_at(&ae, p)?;
    let a_tilde = h_ae.max(&one);
    let a = e.height();
    let h_beta = k.abs_log_height_at(&beta, p)?;
    let b_tilde = h_beta.max(&one);
    let c = basis.lemma4_constant(p)?;
    let kappa3 = basis.kappa3(p)?;

    let mut margins = vec![];
    let mut linear_forms = vec![];
    let mut consistency = vec![];

    // β = ρ·η.
    let dec = basis.decompose_beta(&beta, p);
    let (rho, b, big_b, rho_height) = match &dec {
        Ok(db) => {
            let eta = basis.unit_from_exponent(&db.b)?;
            let ok = k.mul(&db.rho, &eta) == beta;
            consistency.push(Consistency {
                id: "beta_reconstruction".into(),
                ok,
                note: "ρ·ε_1^{b_1}⋯ε_r^{b_r} = x − αεy".into(),
            });
            (Some(db.rho.clone()), Some(db.b.clone()), Some(db.big_b), Some(db.rho_height.clone()))
        }
        Err(err) => {
            consistency.push(Consistency {
                id: "beta_reconstruction".into(),
                ok: false,
                note: err.to_string(),
            });
            (None, None, None, None)
        }
    };

    // F_ε(x, y) = a_0'·N(β).
    let (form, delta) = twisted_form(k, &alpha, &eps)?;
    let (xi, yi) = (Integer::from(x), Integer::from(y));
    let value = form.evaluate(&xi, &yi);
    if delta == d {
        let ok = value.clone() == norm_side(k, &ae, form.lead(), &xi, &yi);
        consistency.push(Consistency {
            id: "norm_bridge".into(),
            ok,
            note: "F_ε(x, y) = a_0'·N(x − αεy)".into(),
        });
    }
    consistency.push(Consistency {
        id: "value".into(),
        ok: Integer::from(value.abs_ref()) == Integer::from(sol.value.abs_ref()),
        note: "|F_ε(x, y)| matches the recorded value".into(),
    });

    // Sandwiches with computed witnesses.
    let h_alpha = k.abs_log_height_at(&alpha, p)?;
    let ai = Interval::from_int(a as i64, p);
    let lower = c
        .div_int(d as i64)
        .div(&one.add(&h_alpha))
        .expect("1 + h(α) > 0")
        .mul(&ai);
    let upper = h_alpha.max(&one).add(&kappa3).mul(&ai);
    margins.push(Margin::cmp("a_tilde_lower", "(c/d)/(1 + h(α))·A ≤ Ã", lower, a_tilde.clone()));
    margins.push(Margin::cmp("a_tilde_upper", "Ã ≤ (max{1, h(α)} + κ_3)·A", a_tilde.clone(), upper));
    if let (Some(bb), Some(rh)) = (big_b, &rho_height) {
        let bi = Interval::from_int(bb as i64, p);
        let up = one.max(&rh.add(&kappa3.mul(&bi)));
        margins.push(Margin::cmp("b_tilde_upper", "B̃ ≤ max{1, h(ρ) + κ_3·B}", b_tilde.clone(), up));
        let lo = c.div_int(d as i64).mul(&bi).sub(rh);
        margins.push(Margin::cmp("b_tilde_lower", "(c/d)·B − h(ρ) ≤ B̃", lo, b_tilde.clone()));
    }

    // Small regime.
    let lm = log_m(m, p);
    let threshold = lm.as_ref().and_then(|l| l.div(&c));
    let mut regime_reasons = vec![];
    match &threshold {
        Some(t) => {
            if Interval::from_int(a as i64, p).lt(t) != Some(false) {
                regime_reasons.push("A < log m / c".to_string());
            }
            match big_b {
                Some(bb) if Interval::from_int(bb as i64, p).lt(t) == Some(false) => {}
                _ => regime_reasons.push("B < log m / c".to_string()),
            }
        }
        None => regime_reasons.push("m < 2".to_string()),
    }

    let u = k.embeddings(&ae, p)?.values;
    let v = k.embeddings(&beta, p)?.values;
    let ma: Vec<Interval> = u.iter().map(CBall::abs).collect();
    let mb: Vec<Interval> = v.iter().map(CBall::abs).collect();

    // Elimination identities.
    for tri in embedding_triples(d) {
        let r = six_term_residual(&[u[tri[0]].clone(), u[tri[1]].clone(), u[tri[2]].clone()], &[
            v[tri[0]].clone(),
            v[tri[1]].clone(),
            v[tri[2]].clone(),
        ]);
        consistency.push(Consistency {
            id: format!("six_term_{}_{}_{}", tri[0], tri[1], tri[2]),
            ok: r.contains_zero(),
            note: "u_1v_2 − u_1v_3 + u_2v_3 − u_2v_1 + u_3v_1 − u_3v_2 = 0".into(),
        });
    }

    let pe = privileged(k, &ae, &beta, nu, p).ok();
    let yabs = Interval::from_int(y.abs(), p);
    let xabs = Interval::from_int(x.abs(), p);
    let xball = CBall::real(Interval::from_int(x, p));
    let yball = CBall::real(Interval::from_int(y, p));

    if let Some(pe) = &pe {
        let (sa, sb, ta, tb) = (pe.sigma_a, pe.sigma_b, pe.tau_a, pe.tau_b);
        let pair = if ta != sa { (ta, sa) } else { (0, 1) };
        match recover_xy(k, &ae, &beta, pair.0, pair.1, p) {
            Ok((rx, ry)) => consistency.push(Consistency {
                id: "recover_xy".into(),
                ok: rx.unique_real_integer() == Some(xi.clone()) && ry.unique_real_integer() == Some(yi.clone()),
                note: format!("(φ_1, φ_2) = ({}, {})", pair.0, pair.1),
            }),
            Err(err) => consistency.push(Consistency {
                id: "recover_xy".into(),
                ok: false,
                note: err.to_string(),
            }),
        }

        let two = Interval::from_int(2, p);
        let half = one.div_int(2);
        let sizes = [
            ma[sa].gt(&two),
            mb[sb].gt(&two),
            ma[ta].lt(&half),
            mb[tb].lt(&half),
        ];
        let size_ok = sizes.iter().all(|s| *s == Some(true));
        if !size_ok {
            regime_reasons.push("size conditions |σ_a(αε)|, |σ_b(β)| > 2, |τ_a(αε)|, |τ_b(β)| < 1/2 fail".into());
        }

        // (i)
        margins.push(Margin::cmp(
            "lemma8_majysigmaa",
            "|y·σ_a(αε)| ≤ 4|σ_b(β)|",
            yabs.mul(&ma[sa]),
            mb[sb].mul_int(4),
        ));
        // (ii)
        margins.push(Margin::cmp("lemma11_taub", "|τ_b(αε)| ≤ 2", ma[tb].clone(), two.clone()));
        // (iii)
        margins.push(Margin::flag(
            "tb_singleton",
            "T_b(ν) = {τ_b}",
            if pe.t_b_set == vec![tb] { Verdict::Holds } else { Verdict::Fails },
            format!("T_b(ν) = {:?}", pe.t_b_set),
        ));
        margins.push(Margin::flag(
            "sigma_a_singleton",
            "Σ_a(ν) = {σ_a}",
            if pe.sigma_a_set == vec![sa] { Verdict::Holds } else { Verdict::Fails },
            format!("Σ_a(ν) = {:?}", pe.sigma_a_set),
        ));
        // (iv)
        let lam = Interval::from_rational(&opts.lambda, p);
        let mu = Interval::from_rational(&opts.mu, p);
        let tbb = mb[tb].clone();
        for phi in 0..d {
            let hyp_a = ma[phi].le(&lam.mul(&ma[tb]));
            let m_a = Margin::cmp(
                format!("lemma12a_{phi}"),
                "|φ(β) − x| ≤ λ|x| + λ|τ_b(β)|",
                v[phi].sub(&xball).abs(),
                lam.mul(&xabs).add(&lam.mul(&tbb)),
            );
            margins.push(match hyp_a {
                Some(true) => m_a,
                Some(false) => Margin { verdict: Verdict::NotApplicable, ..m_a }.with_note("|φ(αε)| > λ|τ_b(αε)|"),
                None => Margin { verdict: Verdict::Borderline, ..m_a }.with_note("hypothesis undecided"),
            });
            let hyp_b = ma[phi].ge(&mu.mul(&ma[tb]));
            let fy = u[phi].mul(&yball);
            let m_b = Margin::cmp(
                format!("lemma12b_{phi}"),
                "|φ(β) + φ(αε)y| ≤ |φ(αε)y|/μ + |τ_b(β)|",
                v[phi].add(&fy).abs(),
                fy.abs().div(&mu).expect("μ > 0").add(&tbb),
            );
            margins.push(match hyp_b {
                Some(true) => m_b,
                Some(false) => Margin { verdict: Verdict::NotApplicable, ..m_b }.with_note("|φ(αε)| < μ|τ_b(αε)|"),
                None => Margin { verdict: Verdict::Borderline, ..m_b }.with_note("hypothesis undecided"),
            });
        }
        // Step with μ = 3/2.
        let three_half = Interval::from_rational(&Rational::from((3, 2)), p);
        for phi in (0..d).filter(|&f| f != sa) {
            let lhs = u[phi].mul(&yball).abs();
            let rhs = mb[phi].mul_int(3).add(&tbb.mul_int(3));
            let mg = Margin::cmp(format!("lemma13_{phi}"), "|φ(αε)y| ≤ 3|φ(β)| + 3|τ_b(β)|", lhs, rhs);
            margins.push(match ma[phi].gt(&three_half.mul(&ma[tb])) {
                Some(true) => mg,
                Some(false) => Margin { verdict: Verdict::NotApplicable, ..mg }.with_note("|φ(αε)| ≤ (3/2)|τ_b(αε)|"),
                None => Margin { verdict: Verdict::Borderline, ..mg }.with_note("hypothesis undecided"),
            });
        }
        // (v)
        let disjoint_a = !pe.t_a_set.iter().any(|i| pe.sigma_a_set.contains(i));
        let disjoint_b = !pe.t_b_set.iter().any(|i| pe.sigma_b_set.contains(i));
        let dv = |ok: bool| {
            if !size_ok {
                Verdict::NotApplicable
            } else if ok {
                Verdict::Holds
            } else {
                Verdict::Fails
            }
        };
        margins.push(Margin::flag("disjoint_a", "T_a(ν) ∩ Σ_a(ν) = ∅", dv(disjoint_a), ""));
        margins.push(Margin::flag("disjoint_b", "T_b(ν) ∩ Σ_b(ν) = ∅", dv(disjoint_b), ""));

        // Four-embedding forms: the default choice plus user tuples.
        let cval = lm
            .as_ref()
            .map(|l| Interval::from_int(2, p).add(&Interval::from_int((a + big_b.unwrap_or(1)) as i64, p).div(l).expect("log m > 0")));
        let mut tuples: Vec<[usize; 4]> = (0..d).filter(|&f| f != sa).map(|f| [f, sa, sa, f]).collect();
        tuples.extend(opts.tuples.iter().copied().filter(|t| t.iter().all(|&i| i < d)));
        for t in tuples {
            let mut lf = LinearFormValue {
                id: format!("lemma7_{}_{}_{}_{}", t[0], t[1], t[2], t[3]),
                indices: t.to_vec(),
                value: None,
                witnesses: vec![],
                verdict: Verdict::Reported,
                note: String::new(),
            };
            if t[0] == t[2] && t[1] == t[3] {
                lf.value = Some(Interval::zero(p));
                lf.verdict = Verdict::NotApplicable;
                lf.note = "degenerate: φ_1(αε)φ_2(β) = φ_3(αε)φ_4(β)".into();
            } else {
                match u[t[0]].mul(&v[t[1]]).div(&u[t[2]].mul(&v[t[3]])) {
                    Some(q) => {
                        let val = q.sub(&CBall::one(p)).abs();
                        if val.contains_zero() {
                            lf.verdict = Verdict::Borderline;
                        }
                        lf.value = Some(val);
                    }
                    None => {
                        lf.verdict = Verdict::Borderline;
                        lf.note = "denominator ball contains 0".into();
                    }
                }
                if t[1] == sa && t[2] == sa && t[0] == t[3] {
                    if let Some(w) = xabs.mul_int(2).div(&mb[t[0]]) {
                        lf.witnesses.push(("2|x|/|φ(β)|".into(), w));
                    }
                }
            }
            if let Some(cv) = &cval {
                lf.witnesses.push(("C = 2 + (A + B)/log m".into(), cv.clone()));
            }
            linear_forms.push(lf);
        }

        // The rearranged unit equation for φ ∉ {σ_b, τ_b}.
        for phi in (0..d).filter(|&f| f != sb && f != tb) {
            let mut lf = LinearFormValue {
                id: format!("unit_equation_{phi}"),
                indices: vec![phi, sb, tb],
                value: None,
                witnesses: vec![],
                verdict: Verdict::Reported,
                note: String::new(),
            };
            let den = u[phi].sub(&u[tb]);
            let left = v[phi]
                .div(&v[sb])
                .zip(u[sb].sub(&u[tb]).div(&den))
                .map(|(a1, a2)| a1.mul(&a2).sub(&CBall::one(p)).abs());
            let delta_q = u[phi].sub(&u[sb]).div(&den);
            let right = v[tb].div(&v[sb]).zip(delta_q.clone()).map(|(r1, dq)| r1.abs().mul(&dq.abs()));
            match (left, right) {
                (Some(l), Some(r)) => {
                    lf.verdict = if l.overlaps(&r) { Verdict::Holds } else { Verdict::Fails };
                    lf.note = "left side equals |τ_b(β)/σ_b(β)|·|δ|".into();
                    lf.value = Some(l);
                    lf.witnesses.push(("|τ_b(β)/σ_b(β)|·|δ|".into(), r));
                    if let Some(dq) = delta_q {
                        lf.witnesses.push(("|δ|".into(), dq.abs()));
                    }
                }
                _ => {
                    lf.verdict = Verdict::Borderline;
                    lf.note = "denominator ball contains 0".into();
                }
            }
            linear_forms.push(lf);
        }

        // φ ∈ T_b(ν) other than τ_b.
        let nu_i = Interval::from_rational(nu, p);
        for &phi in pe.t_b_set.iter().filter(|&&f| f != tb) {
            let mut lf = LinearFormValue {
                id: format!("tau_b_unicity_{phi}"),
                indices: vec![phi, tb],
                value: None,
                witnesses: vec![],
                verdict: Verdict::Reported,
                note: String::new(),
            };
            match u[phi].div(&u[tb]) {
                Some(q) => {
                    let val = q.sub(&CBall::one(p)).abs();
                    let w1 = mb[phi].mul_int(4);
                    lf.verdict = Verdict::from_cmp(val.le(&w1));
                    lf.value = Some(val);
                    lf.witnesses.push(("4|φ(β)|".into(), w1));
                    if let Some(bb) = big_b {
                        let w2 = c.mul(&nu_i).mul_int(-(bb as i64)).exp().mul_int(4);
                        lf.witnesses.push(("4e^{−cνB}".into(), w2));
                    }
                }
                None => {
                    lf.verdict = Verdict::Borderline;
                    lf.note = "τ_b(αε) ball contains 0".into();
                }
            }
            linear_forms.push(lf);
        }
    } else {
        let (verdict, note) = if regime_reasons.is_empty() {
            (Verdict::Borderline, "ties among embedding moduli could not be resolved")
        } else {
            (Verdict::NotApplicable, "moduli tie; the solution is already in the small regime")
        };
        margins.push(Margin::flag("privileged", "privileged embeddings determined", verdict, note));
        regime_reasons.push("privileged embeddings undetermined".into());
    }

    Ok(SolutionTrace {
        solution: sol.clone(),
        reciprocal,
        x,
        y,
        e,
        alpha_eps: ae,
        beta,
        rho,
        b,
        a_tilde,
        a,
        b_tilde,
        big_b,
        rho_height,
        privileged: pe,
        c,
        regime_threshold: threshold,
        small_regime: !regime_reasons.is_empty(),
        regime_reasons,
        margins,
        linear_forms,
        consistency,
        precision: p,
    })
}

fn embedding_triples(d: usize) -> Vec<[usize; 3]> {
    let mut out = vec![];
    for i in 0..d {
        for j in i + 1..d {
            for l in j + 1..d {
                out.push([i, j, l]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NumberField;

    fn setup() -> UnitGroupBasis {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        let e = k.element_i64(&[-1, 1]);
        UnitGroupBasis::new(&k, vec![e], 2, k.from_int(-1), None).unwrap()
    }

    fn rec(x: i64, y: i64, e: i64, value: i64, m: i64) -> SolutionRecord {
        SolutionRecord {
            x,
            y,
            e: UnitExponent::new(0, vec![e]),
            value: Integer::from(value),
            m: Integer::from(m),
            swapped: false,
        }
    }

    #[test]
    fn traced_solution() {
        let b = setup();
        let k = b.field();
        let t = trace(&b, &k.alpha(), &rec(1, 3, 1, 1, 2), &Rational::from((1, 2)), &Integer::from(2), 128).unwrap();
        assert_eq!(t.a, 1);
        assert_eq!(t.big_b, Some(3));
        assert_eq!(t.rho, Some(k.one()));
        assert!(t.rho_height.as_ref().unwrap().contains_f64(0.0));
        let pe = t.privileged.as_ref().unwrap();
        assert!(k.is_real_embedding(pe.tau_b));
        assert!(t.inconsistencies().is_empty(), "{:?}", t.inconsistencies());
        let i = t.margin("lemma8_majysigmaa").unwrap();
        assert_eq!(i.verdict, Verdict::Holds);
        assert!((i.lhs.as_ref().unwrap().to_f64() - 7.4139).abs() < 1e-3);
        assert!((i.rhs.as_ref().unwrap().to_f64() - 30.186).abs() < 1e-2);
        let ii = t.margin("lemma11_taub").unwrap();
        assert_eq!(ii.verdict, Verdict::Holds);
        assert!((ii.lhs.as_ref().unwrap().to_f64() - 0.32748).abs() < 1e-4);
        assert!(!t.linear_forms.iter().any(|l| l.id.starts_with("tau_b_unicity")));
        let ue: Vec<_> = t.linear_forms.iter().filter(|l| l.id.starts_with("unit_equation")).collect();
        assert!(!ue.is_empty());
        assert!(ue.iter().all(|l| l.verdict == Verdict::Holds));
        for m in &t.margins {
            if m.id.starts_with("a_tilde") || m.id.starts_with("b_tilde") {
                assert_eq!(m.verdict, Verdict::Holds, "{}", m.id);
            }
        }
    }

    #[test]
    fn torsion_absorbed_into_rho() {
        let b = setup();
        let k = b.field();
        let t = trace(&b, &k.alpha(), &rec(1, 1, 0, -1, 1), &Rational::from((1, 2)), &Integer::from(1), 128).unwrap();
        assert_eq!(t.big_b, Some(1));
        assert_eq!(t.rho, Some(k.from_int(-1)));
        assert!(t.small_regime);
        assert!(t.inconsistencies().is_empty());
    }

    #[test]
    fn non_solution_still_traced() {
        let b = setup();
        let k = b.field();
        let t = trace(&b, &k.alpha(), &rec(5, 7, 2, 0, 2), &Rational::from((1, 2)), &Integer::from(2), 128).unwrap();
        assert!(t.consistency.iter().any(|c| c.id == "value" && !c.ok));
        assert!(t.consistency.iter().filter(|c| c.id.starts_with("six_term")).all(|c| c.ok));
    }

    #[test]
    fn reciprocal_orientation() {
        let b = setup();
        let k = b.field();
        let mut r = rec(3, 1, 1, 0, 2);
        let alpha = k.alpha();
        let eps = b.unit_from_exponent(&r.e).unwrap();
        let (f, _) = twisted_form(k, &alpha, &eps).unwrap();
        r.value = f.evaluate_i64(3, 1);
        r.swapped = true;
        let t = trace(&b, &alpha, &r, &Rational::from((1, 2)), &r.value.clone().abs().max(Integer::from(2)), 128).unwrap();
        assert!(t.reciprocal);
        assert_eq!((t.x, t.y), (1, 3));
        assert!(t.inconsistencies().is_empty(), "{:?}", t.inconsistencies());
    }
}
