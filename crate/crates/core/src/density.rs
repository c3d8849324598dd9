//! Regions of the log-embedding hyperplane, their volumes, lattice point
//! counts, density tables and the CM test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::ball::{CBall, Interval};
use crate::classify::classify_family;
use crate::error::{Error, Result};
use crate::field::{FieldElement, NumberField};
use crate::units::{exponent_box_points, HouseBound, UnitExponent, UnitGroupBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RegionKind {
    #[serde(rename = "H_M")]
    H,
    #[serde(rename = "D_nu")]
    D,
    #[serde(rename = "Dp_nu")]
    DPrime,
    #[serde(rename = "Dt_nu")]
    DTilde,
    #[serde(rename = "Dpp_nu")]
    DDoublePrime,
    #[serde(rename = "Dtp_nu")]
    DTildePrime,
}

impl RegionKind {
    pub const ALL: [RegionKind; 6] = [
        RegionKind::H,
        RegionKind::D,
        RegionKind::DPrime,
        RegionKind::DTilde,
        RegionKind::DDoublePrime,
        RegionKind::DTildePrime,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "H" | "H_M" => RegionKind::H,
            "D" | "D_nu" => RegionKind::D,
            "Dp" | "Dp_nu" => RegionKind::DPrime,
            "Dt" | "Dt_nu" => RegionKind::DTilde,
            "Dpp" | "Dpp_nu" => RegionKind::DDoublePrime,
            "Dtp" | "Dtp_nu" => RegionKind::DTildePrime,
            _ => return Err(Error::InvalidInput(format!("unknown region kind {s:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegionKind::H => "H_M",
            RegionKind::D => "D_nu",
            RegionKind::DPrime => "Dp_nu",
            RegionKind::DTilde => "Dt_nu",
            RegionKind::DDoublePrime => "Dpp_nu",
            RegionKind::DTildePrime => "Dtp_nu",
        }
    }

    /// Signature condition under which the region can be nonempty.
    pub fn feasible(&self, r1: usize, r2: usize) -> std::result::Result<(), String> {
        let ok = match self {
            RegionKind::H => true,
            RegionKind::D => r1 >= 2,
            RegionKind::DPrime => r2 >= 1,
            RegionKind::DTilde => r1 >= 4,
            RegionKind::DDoublePrime => r1 >= 2 && r2 >= 1,
            RegionKind::DTildePrime => r2 >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(match self {
                RegionKind::D => "needs two real coordinates (r1 ≥ 2)".into(),
                RegionKind::DPrime => "needs a complex coordinate (r2 ≥ 1)".into(),
                RegionKind::DTilde => "needs four real coordinates (r1 ≥ 4)".into(),
                RegionKind::DDoublePrime => "needs r1 ≥ 2 and r2 ≥ 1".into(),
                _ => "needs two complex coordinates (r2 ≥ 2)".into(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// `t_i = δ_i log|σ_i|`, hyperplane `Σ t_i = 0`.
    T,
    /// `x_i = t_i / δ_i`, hyperplane `Σ δ_i x_i = 0`.
    X,
}

#[derive(Clone, Debug)]
pub struct RegionSpec {
    pub kind: RegionKind,
    pub m: Rational,
    pub nu: Rational,
    pub r1: usize,
    pub r2: usize,
    pub frame: Frame,
}

impl RegionSpec {
    pub fn new(kind: RegionKind, m: Rational, nu: Rational, r1: usize, r2: usize, frame: Frame) -> Result<Self> {
        if m <= 0 {
            return Err(Error::InvalidInput("region scale M must be positive".into()));
        }
        if kind != RegionKind::H && (nu <= 0 || nu >= 1) {
            return Err(Error::InvalidInput("ν must lie in (0, 1)".into()));
        }
        if r1 + r2 < 2 {
            return Err(Error::InvalidInput("unit rank must be at least 1".into()));
        }
        Ok(RegionSpec { kind, m, nu, r1, r2, frame })
    }

    pub fn rank(&self) -> usize {
        self.r1 + self.r2 - 1
    }

    pub fn degree(&self) -> usize {
        self.r1 + 2 * self.r2
    }

    pub fn delta(&self) -> Vec<u32> {
        (0..=self.rank()).map(|i| if i < self.r1 { 1 } else { 2 }).collect()
    }

    pub fn with_m(&self, m: Rational) -> Self {
        RegionSpec { m, ..self.clone() }
    }
}

/// Scalars the membership predicate runs on.
pub trait Coord: Clone {
    fn from_rational_like(q: &Rational, like: &Self) -> Self;
    fn le_c(&self, o: &Self) -> Option<bool>;
    fn add_c(&self, o: &Self) -> Self;
    fn neg_c(&self) -> Self;
    fn mul_k(&self, k: i64) -> Self;
    fn div_k(&self, k: i64) -> Self;
    /// `Ok` when `Σ terms` is (compatible with) zero, else the residual.
    fn hyperplane(terms: &[Self]) -> std::result::Result<(), f64>;
}

impl Coord for f64 {
    fn from_rational_like(q: &Rational, _: &Self) -> Self {
        q.to_f64()
    }
    fn le_c(&self, o: &Self) -> Option<bool> {
        Some(self <= o)
    }
    fn add_c(&self, o: &Self) -> Self {
        self + o
    }
    fn neg_c(&self) -> Self {
        -self
    }
    fn mul_k(&self, k: i64) -> Self {
        self * k as f64
    }
    fn div_k(&self, k: i64) -> Self {
        self / k as f64
    }
    fn hyperplane(terms: &[Self]) -> std::result::Result<(), f64> {
        let s: f64 = terms.iter().sum();
        let scale: f64 = 1.0 + terms.iter().map(|t| t.abs()).sum::<f64>();
        if s.abs() <= 1e-9 * scale {
            Ok(())
        } else {
            Err(s)
        }
    }
}

impl Coord for Rational {
    fn from_rational_like(q: &Rational, _: &Self) -> Self {
        q.clone()
    }
    fn le_c(&self, o: &Self) -> Option<bool> {
        Some(self <= o)
    }
    fn add_c(&self, o: &Self) -> Self {
        Rational::from(self + o)
    }
    fn neg_c(&self) -> Self {
        Rational::from(-self)
    }
    fn mul_k(&self, k: i64) -> Self {
        Rational::from(self * k)
    }
    fn div_k(&self, k: i64) -> Self {
        Rational::from(self / k)
    }
    fn hyperplane(terms: &[Self]) -> std::result::Result<(), f64> {
        let s = terms.iter().fold(Rational::new(), |a, b| a + b);
        if s == 0 {
            Ok(())
        } else {
            Err(s.to_f64())
        }
    }
}

impl Coord for Interval {
    fn from_rational_like(q: &Rational, like: &Self) -> Self {
        Interval::from_rational(q, like.prec())
    }
    fn le_c(&self, o: &Self) -> Option<bool> {
        self.le(o)
    }
    fn add_c(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn neg_c(&self) -> Self {
        self.neg()
    }
    fn mul_k(&self, k: i64) -> Self {
        self.mul_int(k)
    }
    fn div_k(&self, k: i64) -> Self {
        self.div_int(k)
    }
    fn hyperplane(terms: &[Self]) -> std::result::Result<(), f64> {
        let s = terms[1..].iter().fold(terms[0].clone(), |a, b| a.add(b));
        if s.contains_zero() {
            Ok(())
        } else {
            Err(s.to_f64())
        }
    }
}

fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn all3(it: impl IntoIterator<Item = Option<bool>>) -> Option<bool> {
    it.into_iter().fold(Some(true), and3)
}

fn at_least(it: impl IntoIterator<Item = Option<bool>>, n: usize) -> Option<bool> {
    let (mut sure, mut maybe) = (0, 0);
    for v in it {
        match v {
            Some(true) => sure += 1,
            None => maybe += 1,
            Some(false) => {}
        }
    }
    if sure >= n {
        Some(true)
    } else if sure + maybe < n {
        Some(false)
    } else {
        None
    }
}

/// Tri-state membership of a point (given in `spec.frame`).
pub fn region_membership<C: Coord>(spec: &RegionSpec, point: &[C]) -> Result<Option<bool>> {
    membership_inner(spec, point, true)
}

fn membership_inner<C: Coord>(spec: &RegionSpec, point: &[C], on_hyperplane: bool) -> Result<Option<bool>> {
    let n = spec.rank() + 1;
    if point.len() != n {
        return Err(Error::InvalidInput(format!("point needs {n} coordinates, got {}", point.len())));
    }
    let delta = spec.delta();
    let x: Vec<C> = match spec.frame {
        Frame::X => point.to_vec(),
        Frame::T => point.iter().zip(&delta).map(|(t, &d)| t.div_k(d as i64)).collect(),
    };
    let terms: Vec<C> = x.iter().zip(&delta).map(|(v, &d)| v.mul_k(d as i64)).collect();
    if on_hyperplane {
        C::hyperplane(&terms).map_err(Error::OffHyperplane)?;
    }
    let m = C::from_rational_like(&spec.m, &x[0]);
    let vm = C::from_rational_like(&Rational::from(&spec.nu * &spec.m), &x[0]);
    let neg: Vec<C> = x.iter().map(C::neg_c).collect();
    let in_h = |v: &[C]| all3(v.iter().map(|c| c.le_c(&m)));
    let in_d = |v: &[C]| and3(in_h(v), at_least(v[..spec.r1].iter().map(|c| vm.le_c(c)), 2));
    let in_dp = |v: &[C]| {
        let complex = v[spec.r1.min(n)..].iter().map(|c| vm.le_c(c));
        let any = at_least(complex, 1);
        and3(in_h(v), any)
    };
    Ok(match spec.kind {
        RegionKind::H => in_h(&x),
        RegionKind::D => in_d(&x),
        RegionKind::DPrime => in_dp(&x),
        RegionKind::DTilde => and3(in_d(&x), in_d(&neg)),
        RegionKind::DDoublePrime => and3(in_d(&x), in_dp(&neg)),
        RegionKind::DTildePrime => and3(in_dp(&x), in_dp(&neg)),
    })
}

/// An explicit box inside a region at M = 1 (x-frame): the listed
/// coordinates range over their intervals, `determined` follows from the
/// hyperplane equation.
#[derive(Clone, Debug, Serialize)]
pub struct InscribedBox {
    #[serde(serialize_with = "ser_q")]
    pub a: Rational,
    #[serde(serialize_with = "ser_q")]
    pub b: Rational,
    #[serde(serialize_with = "ser_q")]
    pub c: Rational,
    #[serde(serialize_with = "ser_sides")]
    pub sides: Vec<(usize, Rational, Rational)>,
    pub determined: usize,
    /// Projected x-frame volume at M = 1.
    #[serde(serialize_with = "ser_q")]
    pub volume: Rational,
    pub corners_inside: bool,
}

fn ser_q<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

fn ser_sides<S: serde::Serializer>(v: &[(usize, Rational, Rational)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (i, lo, hi) in v {
        seq.serialize_element(&(i, lo.to_string(), hi.to_string()))?;
    }
    seq.end()
}

/// The explicit boxes: `(a, b, c)` are `(ν, (ν + δ/2)/2, (δ − 2b)/2)` for
/// D_ν and D'_ν and `((1+ν)/2, (3+ν)/4, (1+ν)/4)` for the three tilde-type
/// regions.
pub fn paper_box(kind: RegionKind, r1: usize, r2: usize, nu: &Rational) -> std::result::Result<InscribedBox, String> {
    kind.feasible(r1, r2)?;
    let r = r1 + r2 - 1;
    let n = r + 1;
    let delta: Vec<i64> = (0..n).map(|i| if i < r1 { 1 } else { 2 }).collect();
    let half = |q: Rational| q / 2u32;
    // (fixed coordinates with [lo, hi]), middle range, divisor of c, determined index (all 0-based)
    let sym = |a: &Rational, b: &Rational| (Rational::from(-b), Rational::from(-a));
    let (a, b, c, fixed, middle, k, det): (Rational, Rational, Rational, Vec<(usize, Rational, Rational)>, std::ops::Range<usize>, i64, usize) =
        match kind {
            RegionKind::H => return Err("H(M) is handled exactly".into()),
            RegionKind::D | RegionKind::DPrime => {
                let dl = if kind == RegionKind::D { delta[r] } else { delta[r - 1] };
                let dq = Rational::from(dl);
                if *nu >= half(dq.clone()) {
                    return Err(format!("box needs ν < δ/2 = {}", half(dq)));
                }
                let a = nu.clone();
                let b = half(nu + half(dq.clone()));
                let c = half(&dq - Rational::from(&b * 2u32));
                if kind == RegionKind::D {
                    if r < 2 {
                        return Err("box needs r ≥ 2".into());
                    }
                    let f = vec![(0, a.clone(), b.clone()), (1, a.clone(), b.clone())];
                    (a, b, c, f, 2..r, r as i64 - 2, r)
                } else {
                    let f = vec![(r, a.clone(), b.clone())];
                    (a, b, c, f, 0..r.saturating_sub(1), r as i64 - 1, r - 1)
                }
            }
            _ => {
                if *nu >= 1 {
                    return Err("box needs ν < 1".into());
                }
                let a = half(Rational::from(nu + 1u32));
                let b = Rational::from(nu + 3u32) / 4u32;
                let c = Rational::from(nu + 1u32) / 4u32;
                let (lo, hi) = sym(&a, &b);
                match kind {
                    RegionKind::DTilde => {
                        let f = vec![
                            (0, a.clone(), b.clone()),
                            (1, a.clone(), b.clone()),
                            (2, lo.clone(), hi.clone()),
                            (3, lo, hi),
                        ];
                        (a, b, c, f, 4..r, r as i64 - 4, r)
                    }
                    RegionKind::DDoublePrime => {
                        let f = vec![(0, a.clone(), b.clone()), (1, a.clone(), b.clone()), (r, lo, hi)];
                        (a, b, c, f, 2..r.saturating_sub(1), r as i64 - 3, r - 1)
                    }
                    _ => {
                        let f = vec![(r, a.clone(), b.clone()), (r - 1, lo, hi)];
                        (a, b, c, f, 1..r.saturating_sub(1), r as i64 - 2, 0)
                    }
                }
            }
        };
    let mut sides: Vec<(usize, Rational, Rational)> = fixed.into_iter().filter(|s| s.0 != det).collect();
    for i in middle {
        if i == det || sides.iter().any(|s| s.0 == i) {
            continue;
        }
        let w = &c / Rational::from(delta[i] * k);
        sides.push((i, Rational::from(-&w), w));
    }
    sides.sort_by_key(|s| s.0);
    if sides.len() != r {
        return Err("box does not fix all free coordinates".into());
    }
    let mut volume = sides.iter().fold(Rational::from(1), |acc, (_, lo, hi)| acc * Rational::from(hi - lo));
    if det != r {
        volume *= Rational::from((delta[r], delta[det]));
    }
    let spec = RegionSpec {
        kind,
        m: Rational::from(1),
        nu: nu.clone(),
        r1,
        r2,
        frame: Frame::X,
    };
    let mut corners_inside = true;
    let mut center_pts: Vec<Vec<Rational>> = vec![];
    for mask in 0..(1u64 << r) {
        center_pts.push(
            sides
                .iter()
                .enumerate()
                .map(|(j, (_, lo, hi))| if mask >> j & 1 == 1 { hi.clone() } else { lo.clone() })
                .collect(),
        );
    }
    center_pts.push(sides.iter().map(|(_, lo, hi)| Rational::from(lo + hi) / 2u32).collect());
    for vals in center_pts {
        let mut x = vec![Rational::new(); n];
        for ((i, _, _), v) in sides.iter().zip(vals) {
            x[*i] = v;
        }
        let s = (0..n).filter(|&i| i != det).fold(Rational::new(), |acc, i| acc + Rational::from(&x[i] * delta[i]));
        x[det] = -s / delta[det];
        if !matches!(region_membership(&spec, &x), Ok(Some(true))) {
            corners_inside = false;
        }
    }
    Ok(InscribedBox {
        a,
        b,
        c,
        sides,
        determined: det,
        volume,
        corners_inside,
    })
}

fn frame_factor(spec: &RegionSpec) -> Rational {
    match spec.frame {
        Frame::X => Rational::from(1),
        Frame::T => Rational::from(spec.delta()[..spec.rank()].iter().map(|&d| d as u64).product::<u64>()),
    }
}

/// Exact projected volume of H(M): `(dM)^r / (r!·Π_{i≤r} δ_i)` in the
/// x-frame.
pub fn h_volume(spec: &RegionSpec) -> Rational {
    let r = spec.rank();
    let d = spec.degree() as u32;
    let mut v = Rational::from(&spec.m * d);
    v = v.clone().pow_u(r);
    let fact: u64 = (1..=r as u64).product();
    let prod: u64 = spec.delta()[..r].iter().map(|&x| x as u64).product();
    v / Rational::from(fact * prod) * frame_factor(spec)
}

trait PowU {
    fn pow_u(self, e: usize) -> Self;
}

impl PowU for Rational {
    fn pow_u(self, e: usize) -> Self {
        (0..e).fold(Rational::from(1), |acc, _| acc * &self)
    }
}

pub const VOLUME_CONVENTION: &str = "Lebesgue measure of the projection dropping the last coordinate";

#[derive(Clone, Debug)]
pub enum VolumeMethod {
    AnalyticBox,
    MonteCarlo { seed: u64, samples: u64 },
}

#[derive(Clone, Debug)]
pub struct VolumeReport {
    pub kind: RegionKind,
    /// Exact volume (H(M)) or exact inscribed-box volume.
    pub exact: Option<Rational>,
    pub inscribed_box: Option<InscribedBox>,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub hits: u64,
    pub samples: u64,
    pub seed: Option<u64>,
    pub reason: Option<String>,
}

pub fn region_volume(spec: &RegionSpec, method: &VolumeMethod) -> Result<VolumeReport> {
    let mut rep = VolumeReport {
        kind: spec.kind,
        exact: None,
        inscribed_box: None,
        estimate: None,
        stderr: None,
        hits: 0,
        samples: 0,
        seed: None,
        reason: spec.kind.feasible(spec.r1, spec.r2).err(),
    };
    match method {
        VolumeMethod::AnalyticBox => {
            if spec.kind == RegionKind::H {
                rep.exact = Some(h_volume(spec));
            } else if rep.reason.is_some() {
                rep.exact = Some(Rational::new());
            } else {
                match paper_box(spec.kind, spec.r1, spec.r2, &spec.nu) {
                    Ok(bx) => {
                        let scale = spec.m.clone().pow_u(spec.rank());
                        rep.exact = Some(Rational::from(&bx.volume * &scale) * frame_factor(spec));
                        rep.inscribed_box = Some(bx);
                    }
                    Err(why) => rep.reason = Some(why),
                }
            }
        }
        VolumeMethod::MonteCarlo { seed, samples } => {
            let (hits, vol) = monte_carlo(spec, *seed, *samples)?;
            let n = *samples as f64;
            let frac = hits as f64 / n;
            rep.hits = hits;
            rep.samples = *samples;
            rep.seed = Some(*seed);
            rep.estimate = Some(frac * vol);
            rep.stderr = Some(vol * (frac * (1.0 - frac) / n).sqrt());
        }
    }
    Ok(rep)
}

const SHARDS: u64 = 64;

/// Uniform sampling of the projected bounding box of H(M):
/// `−(d − δ_i)M/δ_i ≤ x_i ≤ M`. Returns hits and the x-frame or t-frame box
/// volume.
fn monte_carlo(spec: &RegionSpec, seed: u64, samples: u64) -> Result<(u64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let r = spec.rank();
    let delta = spec.delta();
    let d = spec.degree() as f64;
    let m = spec.m.to_f64();
    let lo: Vec<f64> = (0..r).map(|i| -(d - delta[i] as f64) * m / delta[i] as f64).collect();
    let xspec = RegionSpec {
        frame: Frame::X,
        ..spec.clone()
    };
    let hits: u64 = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = samples / SHARDS + u64::from(shard < samples % SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let mut x = vec![0.0; r + 1];
            let mut h = 0;
            for _ in 0..count {
                let mut s = 0.0;
                for i in 0..r {
                    x[i] = rng.gen_range(lo[i]..m);
                    s += delta[i] as f64 * x[i];
                }
                x[r] = -s / delta[r] as f64;
                if region_membership(&xspec, &x).ok().flatten() == Some(true) {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let vol: f64 = lo.iter().map(|l| m - l).product::<f64>() * frame_factor(spec).to_f64();
    Ok((hits, vol))
}

#[derive(Clone, Debug)]
pub struct LatticeCount {
    /// Number of units (torsion included) whose point lies in the region.
    pub count: u64,
    pub points: Vec<Vec<i64>>,
    pub exponent_box: Vec<(i64, i64)>,
}

/// Points of `λ(α) + λ(Z_K^×)` (or of `λ(Z_K^×)` when `alpha` is `None`)
/// inside a t-frame region, times the torsion order. The translate lies on
/// `Σ t_i = log|N(α)|`; its points are tested against the region's
/// inequalities only.
pub fn count_lattice_points(
    basis: &UnitGroupBasis,
    alpha: Option<&FieldElement>,
    spec: &RegionSpec,
    p: u32,
) -> Result<LatticeCount> {
    let k = basis.field();
    if spec.frame != Frame::T {
        return Err(Error::InvalidInput("lattice counting works in the t-frame".into()));
    }
    if (spec.r1, spec.r2) != (k.r1(), k.r2()) {
        return Err(Error::InvalidInput("region signature differs from the field's".into()));
    }
    let shift = |q: u32| -> Result<Option<Vec<Interval>>> {
        match alpha {
            None => Ok(None),
            Some(a) => Ok(Some(basis.log_embedding(a, q)?.t)),
        }
    };
    // Units with λ(αε) ∈ H(M) have λ(ε) ∈ H(M + log house(α^{-1})).
    let m_eff = match alpha {
        None => Interval::from_rational(&spec.m, p),
        Some(a) => {
            let hi = k.house_at(&k.inv(a)?, p)?;
            Interval::from_rational(&spec.m, p).add(&hi.ln().expect("house is positive"))
        }
    };
    let bx = basis.exponent_bounds(&m_eff.max(&Interval::zero(p)), p)?;
    let cands = exponent_box_points(&bx);
    let verdicts: Vec<Result<bool>> = cands
        .par_iter()
        .map(|e| {
            k.escalate(p, "lattice point membership", |q| {
                let mut t = basis.log_of_exponent(&UnitExponent::new(0, e.clone()), q)?.t;
                if let Some(s) = shift(q)? {
                    t = t.iter().zip(&s).map(|(a, b)| a.add(b)).collect();
                }
                membership_inner(spec, &t, alpha.is_none())
            })
        })
        .collect();
    let mut points = vec![];
    for (e, v) in cands.into_iter().zip(verdicts) {
        if v? {
            points.push(e);
        }
    }
    Ok(LatticeCount {
        count: points.len() as u64 * basis.torsion_order(),
        points,
        exponent_box: bx,
    })
}

/// `count(H(M_−)) ≤ |Z_K^×(N)| ≤ count(H(M_+))` with the rational endpoints
/// `M_−.lo` and `M_+.hi`.
pub fn sandwich_counts(
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    n: &HouseBound,
    p: u32,
) -> Result<(u64, u64)> {
    let k = basis.field();
    let (mp, mm) = basis.m_bounds(alpha, n, p)?;
    let count = |m: &rug::Float| -> Result<u64> {
        let q = m.to_rational().expect("finite bound");
        if q <= 0 {
            return Ok(0);
        }
        let spec = RegionSpec::new(RegionKind::H, q, Rational::from((1, 2)), k.r1(), k.r2(), Frame::T)?;
        Ok(count_lattice_points(basis, None, &spec, p)?.count)
    };
    Ok((count(mm.lo())?, count(mp.hi())?))
}

#[derive(Clone, Debug)]
pub struct DensityRow {
    pub n: HouseBound,
    pub log_n: Interval,
    pub units: usize,
    pub e: usize,
    pub e_nu: usize,
    pub tilde_e_nu: usize,
    pub borderline: usize,
    /// The four counts divided by `(log N)^r`.
    pub ratios: [Interval; 4],
    pub lattice_lower: u64,
    pub lattice_upper: u64,
}

pub fn density_series(
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    nu: &Rational,
    grid: &[HouseBound],
    p: u32,
) -> Result<Vec<DensityRow>> {
    let r = basis.rank();
    let mut rows = vec![];
    let mut last = f64::NEG_INFINITY;
    for n in grid {
        let ln = n.ln_at(p);
        if ln.to_f64() <= last {
            return Err(Error::InvalidInput("house-bound grid must be increasing".into()));
        }
        if ln.lo() <= &0 {
            return Err(Error::InvalidInput("grid points must exceed 1".into()));
        }
        last = ln.to_f64();
        let fc = classify_family(basis, alpha, n, nu, p)?;
        let pow = (0..r).fold(Interval::one(p), |acc, _| acc.mul(&ln));
        let ratio = |c: usize| Interval::from_int(c as i64, p).div(&pow).expect("log N > 0");
        let c = &fc.counts;
        let (lower, upper) = sandwich_counts(basis, alpha, n, p)?;
        rows.push(DensityRow {
            n: n.clone(),
            log_n: ln,
            units: c.units,
            e: c.e,
            e_nu: c.e_nu,
            tilde_e_nu: c.tilde_e_nu,
            borderline: c.borderline,
            ratios: [ratio(c.units), ratio(c.e), ratio(c.e_nu), ratio(c.tilde_e_nu)],
            lattice_lower: lower,
            lattice_upper: upper,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CmVerdict {
    NotCm,
    CmWithTotallyRealSubfield,
}

/// K is CM iff it is totally imaginary and complex conjugation is induced by
/// one field automorphism τ in every embedding. τ(ψ) for ψ = a_0·α is the
/// Lagrange interpolant of `σ_i(ψ) ↦ conj σ_i(ψ)`, whose coefficients lie in
/// `disc(ψ)^{-1}·Z`; they are pinned and the result checked exactly.
pub fn cm_field_check(field: &NumberField, p: u32) -> Result<CmVerdict> {
    let d = field.degree();
    if field.r1() > 0 || d % 2 == 1 {
        return Ok(CmVerdict::NotCm);
    }
    let a0 = field.coeffs()[0].clone();
    let psi = field.scale(&field.alpha(), &Rational::from(a0.clone()));
    let g = field.char_min_poly(&psi);
    let disc = crate::poly::QPoly::from_desc_integers(&g.min).discriminant();
    let dden = Rational::from(disc.abs_ref());
    field.escalate(p, "CM test", |q| {
        let roots = field.embeddings(&psi, q)?.values;
        let conj: Vec<CBall> = roots.iter().map(CBall::conj).collect();
        let coeffs = match interpolate(&roots, &conj) {
            Some(c) => c,
            None => return Ok(None),
        };
        let dq = Interval::from_rational(&dden, q);
        let mut ints = vec![];
        for c in &coeffs {
            let scaled = c.re.mul(&dq);
            if scaled.excludes_integers() || !c.im.contains_zero() {
                return Ok(Some(CmVerdict::NotCm));
            }
            match scaled.unique_integer() {
                Some(z) => ints.push(z),
                None => return Ok(None),
            }
        }
        let mut tau = field.zero();
        let mut pw = field.one();
        for z in &ints {
            tau = field.add(&tau, &field.scale(&pw, &Rational::from((z.clone(), Integer::from(dden.numer())))));
            pw = field.mul(&pw, &psi);
        }
        if tau == psi || field.char_min_poly(&tau).min != g.min {
            return Ok(Some(CmVerdict::NotCm));
        }
        let tv = field.embeddings(&tau, q)?.values;
        for i in 0..d {
            let j = field.conjugate_index(i);
            if !tv[i].overlaps(&roots[j]) {
                return Ok(Some(CmVerdict::NotCm));
            }
            if (0..d).any(|l| l != j && tv[i].overlaps(&roots[l])) {
                return Ok(None);
            }
        }
        Ok(Some(CmVerdict::CmWithTotallyRealSubfield))
    })
}

/// Ascending coefficients of the interpolant through `(x_i, y_i)`.
fn interpolate(x: &[CBall], y: &[CBall]) -> Option<Vec<CBall>> {
    let n = x.len();
    let q = x[0].prec();
    let mut out = vec![CBall::zero(q); n];
    for i in 0..n {
        let mut basis = vec![CBall::one(q)];
        let mut den = CBall::one(q);
        for j in (0..n).filter(|&j| j != i) {
            let mut next = vec![CBall::zero(q); basis.len() + 1];
            for (k, b) in basis.iter().enumerate() {
                next[k + 1] = next[k + 1].add(b);
                next[k] = next[k].sub(&b.mul(&x[j]));
            }
            basis = next;
            den = den.mul(&x[i].sub(&x[j]));
        }
        let w = y[i].div(&den)?;
        for (k, b) in basis.iter().enumerate() {
            out[k] = out[k].add(&b.mul(&w));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        crate::field::parse_rational(s).unwrap()
    }

    fn spec(kind: RegionKind, r1: usize, r2: usize, nu: &str, frame: Frame) -> RegionSpec {
        RegionSpec::new(kind, Rational::from(1), q(nu), r1, r2, frame).unwrap()
    }

    #[test]
    fn membership_examples() {
        let h = spec(RegionKind::H, 1, 1, "1/2", Frame::T);
        assert_eq!(region_membership(&h, &[1.0, -1.0]).unwrap(), Some(true));
        assert_eq!(region_membership(&h, &[-2.5, 2.5]).unwrap(), Some(false));
        assert!(matches!(region_membership(&h, &[1.0, 1.0]), Err(Error::OffHyperplane(_))));
        let d = spec(RegionKind::D, 2, 1, "0.4", Frame::X);
        assert_eq!(region_membership(&d, &[0.5, 0.5, -0.5]).unwrap(), Some(true));
        let xi: Vec<Interval> = [q("1/2"), q("1/2"), q("-1/2")].iter().map(|v| Interval::from_rational(v, 64)).collect();
        assert_eq!(region_membership(&d, &xi).unwrap(), Some(true));
    }

    #[test]
    fn h_volume_exact() {
        assert_eq!(h_volume(&spec(RegionKind::H, 1, 1, "1/2", Frame::T)), 3);
        assert_eq!(h_volume(&spec(RegionKind::H, 1, 1, "1/2", Frame::X)), 3);
        let s = RegionSpec::new(RegionKind::H, Rational::from(2), q("1/2"), 1, 1, Frame::T).unwrap();
        assert_eq!(h_volume(&s), 6);
    }

    #[test]
    fn part_d_box_values() {
        let bx = paper_box(RegionKind::DDoublePrime, 2, 1, &q("1/2")).unwrap();
        assert_eq!((bx.a.clone(), bx.b.clone(), bx.c.clone()), (q("3/4"), q("7/8"), q("3/8")));
        assert!(bx.volume > 0 && bx.corners_inside);
        assert!(paper_box(RegionKind::D, 1, 1, &q("1/4")).is_err());
    }

    #[test]
    fn cm_detection() {
        let k = NumberField::from_i64(&[1, 1, 1, 1, 1]).unwrap();
        assert_eq!(cm_field_check(&k, 128).unwrap(), CmVerdict::CmWithTotallyRealSubfield);
        let k = NumberField::from_i64(&[1, 0, 0, 0, 2]).unwrap();
        assert_eq!(cm_field_check(&k, 128).unwrap(), CmVerdict::NotCm);
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        assert_eq!(cm_field_check(&k, 128).unwrap(), CmVerdict::NotCm);
        let k = NumberField::from_i64(&[1, 0, 0, 0, 1]).unwrap();
        assert_eq!(cm_field_check(&k, 128).unwrap(), CmVerdict::CmWithTotallyRealSubfield);
    }

    #[test]
    fn lattice_count_matches_house_enumeration() {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        let b = UnitGroupBasis::new(&k, vec![k.element_i64(&[-1, 1])], 2, k.from_int(-1), None).unwrap();
        let a = k.alpha();
        let s = RegionSpec::new(RegionKind::H, Rational::from(5), q("1/2"), 1, 1, Frame::T).unwrap();
        let c = count_lattice_points(&b, Some(&a), &s, 128).unwrap();
        let en = b.enumerate_units(&a, &HouseBound::Exp(Rational::from(5)), 128).unwrap();
        assert_eq!(c.count as usize, en.units.len());
        let (lo, hi) = sandwich_counts(&b, &a, &HouseBound::Exp(Rational::from(5)), 128).unwrap();
        assert!(lo as usize <= en.units.len() && en.units.len() <= hi as usize);
    }
}
