//! Integer binary forms and the twisted forms F_ε attached to αε.

use std::fmt;

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::field::{FieldElement, NumberField};
use crate::poly::{format_binary_form, QPoly};
use crate::units::{UnitExponent, UnitGroupBasis};

/// `b_0 X^δ + b_1 X^{δ−1} Y + … + b_δ Y^δ`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryForm {
    coeffs: Vec<Integer>,
}

impl BinaryForm {
    /// Normalizes to content 1 and positive leading coefficient.
    pub fn new(coeffs: Vec<Integer>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidInput("form needs degree at least 1".into()));
        }
        if coeffs[0] == 0 {
            return Err(Error::InvalidInput("leading coefficient of a form is zero".into()));
        }
        let mut g = Integer::new();
        for a in &coeffs {
            g.gcd_mut(a);
        }
        if coeffs[0] < 0 {
            g = -g;
        }
        Ok(BinaryForm {
            coeffs: coeffs.into_iter().map(|a| a / &g).collect(),
        })
    }

    pub fn from_i64(c: &[i64]) -> Result<Self> {
        Self::new(c.iter().map(|&x| Integer::from(x)).collect())
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn lead(&self) -> &Integer {
        &self.coeffs[0]
    }

    /// Exact value by homogeneous Horner.
    pub fn evaluate(&self, x: &Integer, y: &Integer) -> Integer {
        let mut acc = Integer::new();
        let mut ypow = Integer::from(1);
        for b in &self.coeffs {
            acc *= x;
            acc += Integer::from(b * &ypow);
            ypow *= y;
        }
        acc
    }

    pub fn evaluate_i64(&self, x: i64, y: i64) -> Integer {
        self.evaluate(&Integer::from(x), &Integer::from(y))
    }

    /// `F(X, 1)` as a polynomial over Q.
    pub fn dehomogenize(&self) -> QPoly {
        QPoly::from_desc_integers(&self.coeffs)
    }

    /// Coefficients reversed and sign-normalized; `F'(y, x) = ±F(x, y)`.
    pub fn reciprocal(&self) -> Result<Self> {
        if self.coeffs.last().is_some_and(|c| *c == 0) {
            return Err(Error::InvalidInput(
                "reciprocal of a form with vanishing constant term".into(),
            ));
        }
        BinaryForm::new(self.coeffs.iter().rev().cloned().collect())
    }

    pub fn is_squarefree(&self) -> bool {
        self.dehomogenize().is_squarefree()
    }
}

impl fmt::Display for BinaryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_binary_form(&self.coeffs))
    }
}

impl fmt::Debug for BinaryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryForm({self})")
    }
}

/// F_ε: the primitive form of the minimal polynomial of αε, with its degree δ.
pub fn twisted_form(
    field: &NumberField,
    alpha: &FieldElement,
    eps: &FieldElement,
) -> Result<(BinaryForm, usize)> {
    if !field.is_unit(eps) {
        return Err(Error::NotAUnit(eps.to_string()));
    }
    let ae = field.mul(alpha, eps);
    if ae.is_zero() {
        return Err(Error::ZeroElement("twisted form"));
    }
    let mp = field.char_min_poly(&ae);
    Ok((BinaryForm::new(mp.min)?, mp.delta))
}

pub fn twisted_form_exponent(
    basis: &UnitGroupBasis,
    alpha: &FieldElement,
    e: &UnitExponent,
) -> Result<(BinaryForm, usize)> {
    let eps = basis.unit_from_exponent(e)?;
    twisted_form(basis.field(), alpha, &eps)
}

/// `a_0'·N(x − γy)` with `a_0'` the leading coefficient of γ's minimal
/// polynomial; equals `F_ε(x, y)` when γ = αε generates K.
pub fn norm_side(field: &NumberField, gamma: &FieldElement, a0: &Integer, x: &Integer, y: &Integer) -> Rational {
    let beta = field.sub(
        &field.from_rational(Rational::from(x.clone())),
        &field.scale(gamma, &Rational::from(y.clone())),
    );
    field.norm(&beta) * Rational::from(a0.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twisted_form_examples() {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        let a = k.alpha();
        let (f, d) = twisted_form(&k, &a, &k.element_i64(&[-1, 1])).unwrap();
        assert_eq!(f, BinaryForm::from_i64(&[1, 0, 6, -2]).unwrap());
        assert_eq!(d, 3);
        let (f, _) = twisted_form(&k, &a, &k.one()).unwrap();
        assert_eq!(f, BinaryForm::from_i64(&[1, 0, 0, -2]).unwrap());
        let (f, _) = twisted_form(&k, &a, &k.from_int(-1)).unwrap();
        assert_eq!(f, BinaryForm::from_i64(&[1, 0, 0, 2]).unwrap());
        assert!(twisted_form(&k, &a, &a).is_err());
    }

    #[test]
    fn evaluation() {
        let f = BinaryForm::from_i64(&[1, 0, 6, -2]).unwrap();
        assert_eq!(f.evaluate_i64(1, 3), 1);
        assert_eq!(f.evaluate_i64(0, 0), 0);
        let g = BinaryForm::from_i64(&[1, 0, 0, -2]).unwrap();
        assert_eq!(g.evaluate_i64(1, 1), -1);
        assert_eq!(g.evaluate_i64(-3, 2), -27 - 16);
    }

    #[test]
    fn reciprocals() {
        let f = BinaryForm::from_i64(&[1, 0, 6, -2]).unwrap();
        let r = f.reciprocal().unwrap();
        assert_eq!(r, BinaryForm::from_i64(&[2, -6, 0, -1]).unwrap());
        assert_eq!(Integer::from(r.evaluate_i64(3, 1).abs_ref()), Integer::from(f.evaluate_i64(1, 3).abs_ref()));
        let g = BinaryForm::from_i64(&[1, 0, 0, -2]).unwrap();
        assert_eq!(g.reciprocal().unwrap(), BinaryForm::from_i64(&[2, 0, 0, -1]).unwrap());
        let p = BinaryForm::from_i64(&[1, 1, 1, 1]).unwrap();
        assert_eq!(p.reciprocal().unwrap(), p);
        assert!(BinaryForm::from_i64(&[1, 2, 0]).unwrap().reciprocal().is_err());
    }

    #[test]
    fn norm_bridge() {
        let k = NumberField::from_i64(&[1, 0, 0, -2]).unwrap();
        let g = k.element_i64(&[0, -1, 1]);
        let (f, _) = twisted_form(&k, &k.alpha(), &k.element_i64(&[-1, 1])).unwrap();
        for (x, y) in [(1, 3), (-4, 7), (5, -2)] {
            let (x, y) = (Integer::from(x), Integer::from(y));
            assert_eq!(Rational::from(f.evaluate(&x, &y)), norm_side(&k, &g, f.lead(), &x, &y));
        }
    }
}
