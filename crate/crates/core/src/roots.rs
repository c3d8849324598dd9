//! Certified complex root isolation for squarefree integer polynomials.
//!
//! Approximations come from Aberth iteration. Each approximation `z_i` is
//! certified by the Weierstrass correction
//! `W_i = f(z_i) / (a_0 ∏_{j≠i} (z_i − z_j))`: the disks `D(z_i, d·|W_i|)`
//! contain all roots, and a disk disjoint from the others contains exactly
//! one. A real-centered isolated disk therefore holds a real root.

use std::cmp::Ordering;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer};

use crate::ball::{CBall, Interval};

/// Roots of a squarefree polynomial in the canonical order: real roots
/// ascending, then upper-half-plane representatives sorted by real then
/// imaginary part, then their conjugates in the same order.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub approx: Vec<Complex>,
    pub r1: usize,
    pub r2: usize,
}

fn horner(f: &[Integer], z: &Complex, p: u32) -> (Complex, Complex) {
    let mut v = Complex::with_val(p, 0);
    let mut dv = Complex::with_val(p, 0);
    for a in f {
        dv = Complex::with_val(p, &dv * z) + &v;
        v = Complex::with_val(p, &v * z) + a;
    }
    (v, dv)
}

fn cauchy_bound(f: &[Integer]) -> f64 {
    let a0 = f[0].to_f64().abs();
    1.0 + f[1..]
        .iter()
        .map(|a| a.to_f64().abs() / a0)
        .fold(0.0, f64::max)
}

fn coeff_bits(f: &[Integer]) -> u32 {
    f.iter().map(|a| a.significant_bits()).max().unwrap_or(1)
}

/// Aberth iteration at precision `p`.
fn aberth(f: &[Integer], p: u32) -> Option<Vec<Complex>> {
    let d = f.len() - 1;
    let r = cauchy_bound(f).min(1e300);
    let pi = Float::with_val(p, Constant::Pi);
    let mut z: Vec<Complex> = (0..d)
        .map(|k| {
            let theta: Float = Float::with_val(p, &pi * 2u32) * k as u32 / d as u32 + 0.4;
            let (s, c) = theta.sin_cos(Float::new(p));
            Complex::with_val(p, (c * r, s * r))
        })
        .collect();
    let tol = Float::with_val(p, 2).pow(-(p as i32) + 8);
    for _ in 0..(200 + 4 * p as usize) {
        let mut moved = Float::with_val(p, 0);
        for i in 0..d {
            let (v, dv) = horner(f, &z[i], p);
            if v.real().is_zero() && v.imag().is_zero() {
                continue;
            }
            let ratio = Complex::with_val(p, &v / &dv);
            let mut s = Complex::with_val(p, 0);
            for j in 0..d {
                if j != i {
                    let diff = Complex::with_val(p, &z[i] - &z[j]);
                    s += Complex::with_val(p, diff.recip_ref());
                }
            }
            let den = Complex::with_val(p, 1) - Complex::with_val(p, &ratio * &s);
            let w = Complex::with_val(p, &ratio / &den);
            if !w.real().is_finite() || !w.imag().is_finite() {
                return None;
            }
            let mag = Float::with_val(p, w.abs_ref());
            let scale = Float::with_val(p, z[i].abs_ref()).max(&Float::with_val(p, 1));
            let rel = mag / scale;
            if rel > moved {
                moved = rel;
            }
            z[i] -= w;
        }
        if moved < tol {
            return Some(z);
        }
    }
    None
}

fn newton(f: &[Integer], z: &Complex, p: u32) -> Complex {
    let mut z = Complex::with_val(p, z);
    let tol = Float::with_val(p, 2).pow(-(p as i32) + 4);
    for _ in 0..64 {
        let (v, dv) = horner(f, &z, p);
        if dv.real().is_zero() && dv.imag().is_zero() {
            break;
        }
        let step = Complex::with_val(p, &v / &dv);
        z -= &step;
        let scale = Float::with_val(p, z.abs_ref()).max(&Float::with_val(p, 1));
        if Float::with_val(p, step.abs_ref()) / scale < tol {
            break;
        }
    }
    z
}

/// Splits approximations into the canonical layout, forcing real ones onto
/// the axis and conjugate pairs to exact mirrors.
fn canonicalize(z: Vec<Complex>, p: u32) -> Option<(Vec<Complex>, usize, usize)> {
    let tol = Float::with_val(p, 2).pow(-(p as i32) / 2);
    let mut reals = vec![];
    let mut upper = vec![];
    let mut lower = 0usize;
    for w in z {
        let scale = Float::with_val(p, w.abs_ref()).max(&Float::with_val(p, 1));
        let lim = Float::with_val(p, &scale * &tol);
        let im = w.imag().clone();
        if Float::with_val(p, im.abs_ref()) <= lim {
            reals.push(Complex::with_val(p, (w.real(), 0)));
        } else if im > 0 {
            upper.push(w);
        } else {
            lower += 1;
        }
    }
    if upper.len() != lower {
        return None;
    }
    reals.sort_by(|a, b| a.real().partial_cmp(b.real()).unwrap_or(Ordering::Equal));
    upper.sort_by(|a, b| {
        a.real()
            .partial_cmp(b.real())
            .unwrap_or(Ordering::Equal)
            .then(a.imag().partial_cmp(b.imag()).unwrap_or(Ordering::Equal))
    });
    let (r1, r2) = (reals.len(), upper.len());
    let conj: Vec<Complex> = upper.iter().map(|w| Complex::with_val(p, w.conj_ref())).collect();
    let mut out = reals;
    out.extend(upper);
    out.extend(conj);
    Some((out, r1, r2))
}

pub fn eval_cball(f: &[Integer], z: &CBall) -> CBall {
    let p = z.prec();
    let mut v = CBall::zero(p);
    for a in f {
        v = v.mul(z).add(&CBall::real(Interval::from_integer(a, p)));
    }
    v
}

fn point_ball(z: &Complex, p: u32) -> CBall {
    let re = Interval::point(Float::with_val(p.max(z.prec().0), z.real()));
    if z.imag().is_zero() {
        CBall::real(re)
    } else {
        CBall::new(re, Interval::point(Float::with_val(p.max(z.prec().1), z.imag())))
    }
}

/// Certified enclosures for canonical approximations, or `None` if the
/// inclusion disks are not pairwise disjoint at this precision.
pub fn certify(f: &[Integer], z: &[Complex], r1: usize, r2: usize, p: u32) -> Option<Vec<CBall>> {
    let d = z.len();
    let a0 = Interval::from_integer(&f[0], p);
    let pts: Vec<CBall> = z.iter().map(|w| point_ball(w, p)).collect();
    let dint = Interval::from_int(d as i64, p);
    let mut rad = Vec::with_capacity(d);
    for i in 0..(r1 + r2) {
        let num = eval_cball(f, &pts[i]);
        let mut den = CBall::real(a0.clone());
        for j in 0..d {
            if j != i {
                den = den.mul(&pts[i].sub(&pts[j]));
            }
        }
        let w = num.div(&den)?;
        rad.push(w.abs().mul(&dint).hi().clone());
    }
    for i in 0..r2 {
        let r = rad[r1 + i].clone();
        rad.push(r);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let dist = pts[i].sub(&pts[j]).abs();
            let sum = Interval::point(rad[i].clone()).add(&Interval::point(rad[j].clone()));
            if dist.gt(&sum) != Some(true) {
                return None;
            }
        }
    }
    let mut out: Vec<CBall> = (0..(r1 + r2))
        .map(|i| {
            let (re, im) = (z[i].real(), z[i].imag());
            if i < r1 {
                CBall::real(Interval::from_mid_rad(re, &rad[i], p))
            } else {
                CBall::from_center_rad(re, im, &rad[i], p)
            }
        })
        .collect();
    for i in 0..r2 {
        let c = out[r1 + i].conj();
        out.push(c);
    }
    Some(out)
}

/// Isolates all roots of a squarefree integer polynomial (coefficients
/// highest degree first), escalating precision up to `max_prec` bits.
pub fn isolate(f: &[Integer], max_prec: u32) -> Option<(RootSet, Vec<CBall>)> {
    assert!(f.len() >= 2 && f[0] != 0);
    let mut p = 128u32.max(coeff_bits(f) * 2 + 64);
    while p <= max_prec.max(128) {
        if let Some(z) = aberth(f, p) {
            let z: Vec<Complex> = z.iter().map(|w| newton(f, w, p)).collect();
            if let Some((z, r1, r2)) = canonicalize(z, p) {
                if let Some(balls) = certify(f, &z, r1, r2, p) {
                    return Some((RootSet { approx: z, r1, r2 }, balls));
                }
            }
        }
        p *= 2;
    }
    None
}

impl RootSet {
    /// Certified balls at precision `p`, refining the stored approximations
    /// by Newton's method without changing their order.
    pub fn balls(&self, f: &[Integer], p: u32) -> Option<Vec<CBall>> {
        let wp = p + 32;
        let d = self.approx.len();
        let mut z: Vec<Complex> = Vec::with_capacity(d);
        for w in &self.approx[..self.r1 + self.r2] {
            let mut n = newton(f, w, wp);
            if w.imag().is_zero() {
                n = Complex::with_val(wp, (n.real(), 0));
            }
            z.push(n);
        }
        for i in 0..self.r2 {
            let c = Complex::with_val(wp, z[self.r1 + i].conj_ref());
            z.push(c);
        }
        certify(f, &z, self.r1, self.r2, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(a: &[i64]) -> Vec<Integer> {
        a.iter().map(|&x| Integer::from(x)).collect()
    }

    #[test]
    fn cube_root_of_two() {
        let f = ints(&[1, 0, 0, -2]);
        let (rs, balls) = isolate(&f, 4096).unwrap();
        assert_eq!((rs.r1, rs.r2), (1, 1));
        let c = 2f64.cbrt();
        assert!(balls[0].re.contains_f64(c) || (balls[0].re.to_f64() - c).abs() < 1e-15);
        assert!(balls[1].im.to_f64() > 0.0);
        assert_eq!(balls[2], balls[1].conj());
        assert!((balls[1].re.to_f64() + c / 2.0).abs() < 1e-15);
    }

    #[test]
    fn totally_real_order_is_ascending() {
        // (X-1)(X+2)(X-3)(X+5) - 1 keeps four real roots
        let f = ints(&[1, 3, -15, -19, 29]);
        let (rs, balls) = isolate(&f, 4096).unwrap();
        assert_eq!((rs.r1, rs.r2), (4, 0));
        for w in balls.windows(2) {
            assert_eq!(w[0].re.lt(&w[1].re), Some(true));
        }
    }

    #[test]
    fn refinement_tightens_and_nests() {
        let f = ints(&[1, 0, -1, -1]);
        let (rs, _) = isolate(&f, 4096).unwrap();
        let lo = rs.balls(&f, 128).unwrap();
        let hi = rs.balls(&f, 512).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            assert!(a.overlaps(b));
            assert!(b.re.width() <= a.re.width());
        }
        assert!(hi[0].re.width() < 1e-100);
    }

    #[test]
    fn non_monic() {
        let f = ints(&[3, 0, 0, -2]);
        let (rs, balls) = isolate(&f, 4096).unwrap();
        assert_eq!(rs.r1, 1);
        assert!((balls[0].re.to_f64() - (2.0f64 / 3.0).cbrt()).abs() < 1e-15);
    }
}
