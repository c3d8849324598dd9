use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use rug::{Integer, Rational};

use twisted_thue::ball::Interval;
use twisted_thue::classify::{classify_unit, privileged};
use twisted_thue::density::{
    count_lattice_points, paper_box, region_membership, sandwich_counts, Frame, RegionKind, RegionSpec,
};
use twisted_thue::field::FieldElement;
use twisted_thue::forms::{norm_side, twisted_form};
use twisted_thue::io::{load_field, validate_basis, FieldSpecFile};
use twisted_thue::solver::{recover_xy, solve_box, SolutionRecord};
use twisted_thue::trace::{trace, Verdict};
use twisted_thue::units::{HouseBound, UnitExponent, UnitGroupBasis};

const P: u32 = 128;

fn load(name: &str) -> UnitGroupBasis {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    let spec = FieldSpecFile::read(&path).unwrap();
    let k = load_field(&spec, 4096).unwrap();
    validate_basis(&k, &spec).unwrap()
}

fn bases() -> &'static [UnitGroupBasis] {
    static B: OnceLock<Vec<UnitGroupBasis>> = OnceLock::new();
    B.get_or_init(|| ["x3m2.json", "x4m2.json", "x3mxm1.json", "cyclo5.json"].map(load).to_vec())
}

fn elem(b: &UnitGroupBasis, c: &[i64]) -> FieldElement {
    let d = b.field().degree();
    let mut v: Vec<i64> = c.iter().copied().take(d).collect();
    v.resize(d, 0);
    if v.iter().all(|&x| x == 0) {
        v[0] = 1;
    }
    b.field().element_i64(&v)
}

fn exponent(b: &UnitGroupBasis, t: u64, a: &[i64]) -> UnitExponent {
    let mut v: Vec<i64> = a.iter().copied().take(b.rank()).collect();
    v.resize(b.rank(), 0);
    UnitExponent::new(t % b.torsion_order(), v)
}

fn coords() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-6i64..=6, 4)
}

fn exps() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-3i64..=3, 2)
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norm_is_multiplicative(f in 0usize..4, a in coords(), c in coords()) {
        let b = &bases()[f];
        let k = b.field();
        let (g1, g2) = (elem(b, &a), elem(b, &c));
        prop_assert_eq!(k.norm(&k.mul(&g1, &g2)), k.norm(&g1) * k.norm(&g2));
    }

    #[test]
    fn log_embedding_is_a_homomorphism(f in 0usize..4, a in coords(), c in coords()) {
        let b = &bases()[f];
        let k = b.field();
        let (g1, g2) = (elem(b, &a), elem(b, &c));
        let l1 = b.log_embedding(&g1, P).unwrap();
        let l2 = b.log_embedding(&g2, P).unwrap();
        let l12 = b.log_embedding(&k.mul(&g1, &g2), P).unwrap();
        for i in 0..l1.t.len() {
            prop_assert!(l12.t[i].overlaps(&l1.t[i].add(&l2.t[i])));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn height_identities(f in 0usize..4, a in coords(), n in 1i64..20, d in 1i64..20) {
        let b = &bases()[f];
        let k = b.field();
        let g = elem(b, &a);
        let h = k.abs_log_height_at(&g, P).unwrap();
        let h2 = k.abs_log_height_at(&k.mul(&g, &g), P).unwrap();
        prop_assert!(h2.overlaps(&h.mul_int(2)));
        let r = q(n, d);
        let hq = k.abs_log_height_at(&k.scale(&g, &r), P).unwrap();
        let bound = h.add(&Interval::from_int(r.numer().clone().max(r.denom().clone()).to_i64().unwrap(), P).ln().unwrap());
        prop_assert!(hq.le(&bound) != Some(false));
    }

    #[test]
    fn house_encloses_moduli_and_nests(f in 0usize..4, a in coords()) {
        let b = &bases()[f];
        let k = b.field();
        let g = elem(b, &a);
        let lo = k.house_at(&g, P).unwrap();
        let hi = k.house_at(&g, 2 * P).unwrap();
        for m in k.embedding_moduli(&g, 2 * P).unwrap() {
            prop_assert!(m.le(&hi) != Some(false));
        }
        prop_assert!(lo.contains(&hi));
    }

    #[test]
    fn min_poly_vanishes_on_embeddings(f in 0usize..4, a in coords()) {
        let b = &bases()[f];
        let k = b.field();
        let g = elem(b, &a);
        let mp = k.char_min_poly(&g);
        let d = k.degree();
        prop_assert_eq!(d % mp.delta, 0);
        prop_assert_eq!(mp.delta == d, mp.char_poly.is_squarefree());
        for z in k.embeddings(&g, P).unwrap().values {
            let v = mp.min.iter().fold(twisted_thue::ball::CBall::zero(P), |acc, c| {
                acc.mul(&z).add(&twisted_thue::ball::CBall::from_rational(&Rational::from(c.clone()), P))
            });
            prop_assert!(v.contains_zero());
        }
    }

    #[test]
    fn unit_conjugates_bounded_by_kappa(f in 0usize..4, e in exps()) {
        let b = &bases()[f];
        let k = b.field();
        let ex = exponent(b, 0, &e);
        let c = ex.height();
        let g = b.unit_from_exponent(&ex).unwrap();
        let kc = b.kappa3(P).unwrap().mul_int(c as i64);
        for m in k.embedding_moduli(&g, P).unwrap() {
            let l = m.ln().unwrap().abs();
            prop_assert!(l.le(&kc) != Some(false));
        }
    }

    #[test]
    fn lemma4_witness(f in 0usize..4, e in exps()) {
        let b = &bases()[f];
        let ex = exponent(b, 0, &e);
        prop_assume!(ex.exponents.iter().any(|&x| x != 0));
        let c = b.lemma4_constant(P).unwrap().mul_int(ex.height() as i64);
        let g = b.unit_from_exponent(&ex).unwrap();
        let logs: Vec<Interval> = b.field().embedding_moduli(&g, P).unwrap().iter().map(|m| m.ln().unwrap()).collect();
        prop_assert!(logs.iter().any(|l| l.ge(&c) != Some(false)));
        prop_assert!(logs.iter().any(|l| l.le(&c.neg()) != Some(false)));
    }

    #[test]
    fn lattice_reduce_is_idempotent(f in 0usize..4, a in coords()) {
        let b = &bases()[f];
        let red = b.lattice_reduce(&elem(b, &a), P).unwrap();
        let again = b.lattice_reduce(&red.reduced, P).unwrap();
        prop_assert!(again.exponent.exponents.iter().all(|&x| x == 0));
    }

    #[test]
    fn decompose_beta_round_trip(f in 0usize..4, a in coords()) {
        let b = &bases()[f];
        let k = b.field();
        let beta = elem(b, &a);
        let dec = b.decompose_beta(&beta, P).unwrap();
        let eta = b.unit_from_exponent(&dec.b).unwrap();
        prop_assert_eq!(k.mul(&dec.rho, &eta), beta);
    }

    #[test]
    fn norm_bridge(f in 0usize..4, t in 0u64..10, e in exps(), x in -50i64..=50, y in -50i64..=50) {
        let b = &bases()[f];
        let k = b.field();
        let eps = b.unit_from_exponent(&exponent(b, t, &e)).unwrap();
        let gamma = k.mul(&k.alpha(), &eps);
        let (form, delta) = twisted_form(k, &k.alpha(), &eps).unwrap();
        prop_assume!(delta == k.degree());
        let n = norm_side(k, &gamma, form.lead(), &Integer::from(x), &Integer::from(y));
        prop_assert_eq!(n, Rational::from(form.evaluate_i64(x, y)));
    }

    #[test]
    fn sign_twist_preserves_house_and_values(f in 0usize..4, e in exps(), x in -20i64..=20, y in -20i64..=20) {
        let b = &bases()[f];
        let k = b.field();
        let eps = b.unit_from_exponent(&exponent(b, 0, &e)).unwrap();
        let neg = k.neg(&eps);
        let (f1, _) = twisted_form(k, &k.alpha(), &eps).unwrap();
        let (f2, _) = twisted_form(k, &k.alpha(), &neg).unwrap();
        prop_assert_eq!(f1.evaluate_i64(-x, y).abs(), f2.evaluate_i64(x, y).abs());
        let h1 = k.house_at(&k.mul(&k.alpha(), &eps), P).unwrap();
        let h2 = k.house_at(&k.mul(&k.alpha(), &neg), P).unwrap();
        prop_assert!(h1.overlaps(&h2));
    }

    #[test]
    fn recover_round_trip(f in 0usize..3, e in exps(), x in -10_000i64..=10_000, y in -10_000i64..=10_000) {
        prop_assume!(x != 0 && y != 0);
        let b = &bases()[f];
        let k = b.field();
        let eps = b.unit_from_exponent(&exponent(b, 0, &e)).unwrap();
        let ae = k.mul(&k.alpha(), &eps);
        prop_assume!(twisted_form(k, &k.alpha(), &eps).unwrap().1 == k.degree());
        let beta = k.sub(&k.from_int(x), &k.scale(&ae, &Rational::from(y)));
        let (rx, ry) = recover_xy(k, &ae, &beta, 0, k.degree() - 1, P).unwrap();
        prop_assert_eq!(rx.unique_real_integer(), Some(Integer::from(x)));
        prop_assert_eq!(ry.unique_real_integer(), Some(Integer::from(y)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unit_sets_nest_and_shrink_with_nu(f in 0usize..4, e in exps(), n1 in 1i64..10, n2 in 1i64..10) {
        let b = &bases()[f];
        let alpha = b.field().alpha();
        let ex = exponent(b, 0, &e);
        let (lo, hi) = (q(n1.min(n2), 10), q(n1.max(n2), 10));
        let r_lo = classify_unit(b, &alpha, &ex, &lo, P).unwrap();
        let r_hi = classify_unit(b, &alpha, &ex, &hi, P).unwrap();
        prop_assume!(r_lo.borderline.is_empty() && r_hi.borderline.is_empty());
        for r in [&r_lo, &r_hi] {
            prop_assert!(!r.in_tilde_e_nu || r.in_e_nu);
            prop_assert!(!r.in_e_nu || r.in_e);
        }
        prop_assert!(!r_hi.in_e_nu || r_lo.in_e_nu);
        prop_assert!(!r_hi.in_tilde_e_nu || r_lo.in_tilde_e_nu);
    }

    #[test]
    fn tilde_set_is_inversion_symmetric(f in 0usize..4, t in 0u64..10, e in exps()) {
        let b = &bases()[f];
        let k = b.field();
        let alpha = k.alpha();
        let inv = k.inv(&alpha).unwrap();
        let ex = exponent(b, t, &e);
        let nu = q(1, 2);
        let r = classify_unit(b, &alpha, &ex, &nu, P).unwrap();
        let s = classify_unit(b, &inv, &ex.negate(b.torsion_order()), &nu, P).unwrap();
        prop_assume!(r.borderline.is_empty() && s.borderline.is_empty());
        prop_assert_eq!(r.in_tilde_e_nu, s.in_tilde_e_nu);
    }

    #[test]
    fn privileged_embeddings_bound_all_moduli(f in 0usize..4, e in exps(), x in -30i64..=30, y in -30i64..=30) {
        prop_assume!(x != 0 && y != 0);
        let b = &bases()[f];
        let k = b.field();
        let eps = b.unit_from_exponent(&exponent(b, 0, &e)).unwrap();
        let ae = k.mul(&k.alpha(), &eps);
        let beta = k.sub(&k.from_int(x), &k.scale(&ae, &Rational::from(y)));
        let Ok(pe) = privileged(k, &ae, &beta, &q(1, 2), P) else { return Ok(()); };
        let ma = k.embedding_moduli(&ae, P).unwrap();
        let mb = k.embedding_moduli(&beta, P).unwrap();
        for i in 0..ma.len() {
            prop_assert!(ma[pe.tau_a].le(&ma[i]) != Some(false) && ma[i].le(&ma[pe.sigma_a]) != Some(false));
            prop_assert!(mb[pe.tau_b].le(&mb[i]) != Some(false) && mb[i].le(&mb[pe.sigma_b]) != Some(false));
        }
    }

    #[test]
    fn orientation_symmetry(f in 0usize..3, e in prop::collection::vec(-1i64..=1, 2), m in 1i64..=10) {
        let b = &bases()[f];
        let k = b.field();
        let eps = b.unit_from_exponent(&exponent(b, 0, &e)).unwrap();
        let (form, _) = twisted_form(k, &k.alpha(), &eps).unwrap();
        let rev = form.reciprocal().unwrap();
        let m = Integer::from(m);
        let sols = solve_box(&form, &m, 60).unwrap();
        let rsols = solve_box(&rev, &m, 60).unwrap();
        prop_assert_eq!(sols.len(), rsols.len());
        for s in &sols {
            prop_assert_eq!(rev.evaluate_i64(s.y, s.x).abs(), s.value.clone().abs());
            prop_assert!(rsols.iter().any(|r| (r.x, r.y) == (s.y, s.x)));
        }
    }

    #[test]
    fn trace_reconstructs_beta_and_sandwiches(f in 0usize..3, e in exps(), x in -20i64..=20, y in -20i64..=20) {
        prop_assume!(x != 0 && y != 0);
        let b = &bases()[f];
        let k = b.field();
        let ex = exponent(b, 0, &e);
        let eps = b.unit_from_exponent(&ex).unwrap();
        let (form, delta) = twisted_form(k, &k.alpha(), &eps).unwrap();
        prop_assume!(delta == k.degree());
        let value = form.evaluate_i64(x, y);
        let m = Integer::from(value.abs_ref()).max(Integer::from(2));
        let sol = SolutionRecord { x, y, e: ex, value, m: m.clone(), swapped: x.abs() > y.abs() };
        let t = trace(b, &k.alpha(), &sol, &q(1, 2), &m, P).unwrap();
        prop_assert!(t.inconsistencies().is_empty(), "{:?}", t.inconsistencies());
        for id in ["a_tilde_lower", "a_tilde_upper", "b_tilde_upper", "b_tilde_lower"] {
            if let Some(mg) = t.margin(id) {
                prop_assert!(mg.verdict != Verdict::Fails, "{} fails", id);
            }
        }
    }

    #[test]
    fn sandwich_brackets_enumeration(f in 0usize..3, n in 2i64..=8) {
        let b = &bases()[f];
        let alpha = b.field().alpha();
        let hb = HouseBound::Exp(q(n, 1));
        let en = b.enumerate_units(&alpha, &hb, P).unwrap();
        let (lo, hi) = sandwich_counts(b, &alpha, &hb, P).unwrap();
        let count = en.units.len() as u64;
        prop_assert!(lo <= count && count <= hi, "{} ≤ {} ≤ {}", lo, count, hi);
    }
}

fn sig() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(1, 1), (2, 1), (3, 0), (4, 0), (0, 2), (2, 2), (1, 2), (5, 0)])
}

fn kind() -> impl Strategy<Value = RegionKind> {
    prop::sample::select(RegionKind::ALL.to_vec())
}

/// A rational point on Σ δ_i x_i = 0 (x-frame) or Σ t_i = 0 (t-frame).
fn on_hyperplane(free: &[i64], r1: usize, r2: usize, frame: Frame) -> Vec<Rational> {
    let n = r1 + r2;
    let delta = |i: usize| if i < r1 || frame == Frame::T { 1 } else { 2 };
    let mut x: Vec<Rational> = free.iter().take(n - 1).map(|&v| q(v, 8)).collect();
    let s = x.iter().enumerate().fold(Rational::new(), |acc, (i, v)| acc + Rational::from(v * delta(i)));
    x.push(-s / delta(n - 1));
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn membership_scales(s in sig(), k in kind(), free in prop::collection::vec(-40i64..=40, 5), mn in 1i64..=9, md in 1i64..=4) {
        let (r1, r2) = s;
        let m = q(mn, md);
        let spec = RegionSpec::new(k, m.clone(), q(1, 2), r1, r2, Frame::X).unwrap();
        let unit = spec.with_m(q(1, 1));
        let p = on_hyperplane(&free, r1, r2, Frame::X);
        let scaled: Vec<Rational> = p.iter().map(|v| Rational::from(v / &m)).collect();
        prop_assert_eq!(region_membership(&spec, &p).unwrap(), region_membership(&unit, &scaled).unwrap());
    }

    #[test]
    fn members_of_h_are_bounded(s in sig(), free in prop::collection::vec(-40i64..=40, 5), mn in 1i64..=9) {
        let (r1, r2) = s;
        let m = q(mn, 2);
        let spec = RegionSpec::new(RegionKind::H, m.clone(), q(1, 2), r1, r2, Frame::T).unwrap();
        let p = on_hyperplane(&free, r1, r2, Frame::T);
        if region_membership(&spec, &p).unwrap() == Some(true) {
            let r = (r1 + r2 - 1) as i64;
            let bound = m.clone() * Rational::from(2 * r);
            prop_assert!(p.iter().all(|t| Rational::from(t.abs_ref()) <= bound));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inscribed_box_corners_lie_inside(s in sig(), k in kind(), nn in 1i64..=99) {
        let (r1, r2) = s;
        prop_assume!(k != RegionKind::H && k.feasible(r1, r2).is_ok());
        let nu = q(nn, 100);
        if let Ok(bx) = paper_box(k, r1, r2, &nu) {
            prop_assert!(bx.corners_inside, "{} at ({}, {}), ν = {}", k.name(), r1, r2, nu);
            prop_assert!(bx.volume > 0);
        } else {
            prop_assert!(matches!(k, RegionKind::D | RegionKind::DPrime) && nu >= q(1, 2));
        }
    }
}

#[test]
fn counted_points_are_bounded() {
    for b in &bases()[..3] {
        let k = b.field();
        let m = q(6, 1);
        let spec = RegionSpec::new(RegionKind::H, m.clone(), q(1, 2), k.r1(), k.r2(), Frame::T).unwrap();
        let c = count_lattice_points(b, None, &spec, P).unwrap();
        let bound = 2.0 * b.rank() as f64 * m.to_f64();
        for pt in &c.points {
            let lv = b.log_of_exponent(&UnitExponent::new(0, pt.clone()), P).unwrap();
            assert!(lv.t.iter().all(|t| t.abs().to_f64() <= bound + 1e-9));
        }
    }
}
