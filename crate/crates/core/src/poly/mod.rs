//! Exact multivariate polynomials over the rationals.
//!
//! Variables are indexed `0..n`. Terms are stored sorted in strictly
//! decreasing order under the polynomial's [`MonomialOrder`] with no zero
//! coefficients, so the leading term is always `terms()[0]`.

mod division;
mod monomial;
mod parse;
mod serial;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use division::normal_form;
pub use monomial::{Monomial, MonomialOrder};
pub use serial::PolyJson;

use crate::{Error, Result};

pub type Term = (Monomial, BigRational);

#[derive(Clone, Debug)]
pub struct Polynomial {
    nvars: usize,
    order: MonomialOrder,
    terms: Vec<Term>,
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            order: MonomialOrder::default(),
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::monomial(nvars, Monomial::one(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(nvars, Monomial::var(nvars, i), BigRational::one())
    }

    pub fn monomial(nvars: usize, mono: Monomial, c: BigRational) -> Self {
        let terms = if c.is_zero() { Vec::new() } else { vec![(mono, c)] };
        Self {
            nvars,
            order: MonomialOrder::default(),
            terms,
        }
    }

    /// Builds a polynomial from arbitrary (possibly repeated, possibly zero) terms.
    pub fn from_terms<I>(nvars: usize, order: MonomialOrder, terms: I) -> Self
    where
        I: IntoIterator<Item = Term>,
    {
        let mut acc: HashMap<Monomial, BigRational> = HashMap::new();
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "monomial arity");
            *acc.entry(m).or_insert_with(BigRational::zero) += c;
        }
        let mut terms: Vec<Term> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| order.cmp(&b.0, &a.0));
        Self { nvars, order, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True for nonzero constants.
    pub fn is_constant(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one()
    }

    pub fn is_one(&self) -> bool {
        self.is_constant() && self.terms[0].1.is_one()
    }

    /// Total degree; zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn leading_term(&self) -> Option<&Term> {
        self.terms.first()
    }

    pub fn leading_monomial(&self) -> Option<&Monomial> {
        self.terms.first().map(|t| &t.0)
    }

    pub fn leading_coeff(&self) -> Option<&BigRational> {
        self.terms.first().map(|t| &t.1)
    }

    pub fn coeff(&self, mono: &Monomial) -> BigRational {
        self.terms
            .iter()
            .find(|(m, _)| m == mono)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn constant_term(&self) -> BigRational {
        match self.terms.last() {
            Some((m, c)) if m.is_one() => c.clone(),
            _ => BigRational::zero(),
        }
    }

    /// Removes and returns the leading term.
    pub fn pop_leading(&mut self) -> Option<Term> {
        if self.terms.is_empty() {
            None
        } else {
            Some(self.terms.remove(0))
        }
    }

    /// Re-sorts the terms under `order`.
    pub fn with_order(mut self, order: MonomialOrder) -> Self {
        if order != self.order {
            self.order = order;
            self.terms.sort_by(|a, b| order.cmp(&b.0, &a.0));
        }
        self
    }

    pub fn has_integer_coefficients(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_integer())
    }

    fn check_nvars(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::VariableCountMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    fn aligned<'a>(&self, other: &'a Polynomial) -> std::borrow::Cow<'a, Polynomial> {
        if other.order == self.order {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(other.clone().with_order(self.order))
        }
    }

    /// Merges `self + factor * other`, both sorted under the same order.
    fn merge(&self, other: &Polynomial, factor: &BigRational) -> Polynomial {
        let order = self.order;
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (ma, ca) = &self.terms[i];
            let (mb, cb) = &other.terms[j];
            match order.cmp(ma, mb) {
                std::cmp::Ordering::Greater => {
                    out.push((ma.clone(), ca.clone()));
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    out.push((mb.clone(), cb * factor));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = ca + cb * factor;
                    if !c.is_zero() {
                        out.push((ma.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.terms[i..].iter().cloned());
        out.extend(other.terms[j..].iter().map(|(m, c)| (m.clone(), c * factor)));
        Polynomial {
            nvars: self.nvars,
            order,
            terms: out,
        }
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_nvars(other)?;
        Ok(self.merge(&self.aligned(other), &BigRational::one()))
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_nvars(other)?;
        Ok(self.merge(&self.aligned(other), &-BigRational::one()))
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_nvars(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Polynomial::zero(self.nvars).with_order(self.order));
        }
        let mut acc: HashMap<Monomial, BigRational> = HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        let mut terms: Vec<Term> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let order = self.order;
        terms.sort_by(|a, b| order.cmp(&b.0, &a.0));
        Ok(Polynomial {
            nvars: self.nvars,
            order,
            terms,
        })
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars).with_order(self.order);
        }
        Polynomial {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    /// `c * mono * self`; the order is preserved since monomial orders are
    /// compatible with multiplication.
    pub fn mul_term(&self, mono: &Monomial, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars).with_order(self.order);
        }
        Polynomial {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(m, a)| (m.mul(mono), a * c)).collect(),
        }
    }

    /// `self - c * mono * other`.
    pub fn sub_mul_term(&self, c: &BigRational, mono: &Monomial, other: &Polynomial) -> Polynomial {
        let other = self.aligned(other);
        self.merge(&other.mul_term(mono, &BigRational::one()), &-c)
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::one(self.nvars).with_order(self.order);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        let terms = self.terms.iter().filter_map(|(m, c)| {
            m.derivative(var)
                .map(|(e, dm)| (dm, c * BigRational::from_integer(BigInt::from(e))))
        });
        Polynomial::from_terms(self.nvars, self.order, terms)
    }

    pub fn evaluate(&self, point: &[BigRational]) -> Result<BigRational> {
        if point.len() != self.nvars {
            return Err(Error::LengthMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (x, &e) in point.iter().zip(m.exps()) {
                if e > 0 {
                    v *= num_traits::pow(x.clone(), e as usize);
                }
            }
            total += v;
        }
        Ok(total)
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.nvars {
            return Err(Error::LengthMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut v = c.to_f64().unwrap_or(f64::NAN);
                for (x, &e) in point.iter().zip(m.exps()) {
                    if e > 0 {
                        v *= x.powi(e as i32);
                    }
                }
                v
            })
            .sum())
    }

    /// Splits `self = content * primitive` where `primitive` has coprime
    /// integer coefficients and a positive leading coefficient.
    pub fn primitive_part(&self) -> (BigRational, Polynomial) {
        if self.is_zero() {
            return (BigRational::one(), self.clone());
        }
        let mut den_lcm = BigInt::one();
        for (_, c) in &self.terms {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut num_gcd = BigInt::zero();
        for (_, c) in &self.terms {
            let n = c.numer() * (&den_lcm / c.denom());
            num_gcd = num_gcd.gcd(&n);
        }
        let mut content = BigRational::new(num_gcd, den_lcm);
        if self.terms[0].1.is_negative() {
            content = -content;
        }
        let inv = content.recip();
        (content, self.scale(&inv))
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> Polynomial {
        match self.leading_coeff() {
            Some(lc) if !lc.is_one() => self.scale(&lc.recip()),
            _ => self.clone(),
        }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Named { poly: self, names }
    }

    pub fn parse(text: &str, names: &[&str]) -> Result<Polynomial> {
        parse::parse(text, names)
    }

    /// Rough heap footprint in bytes, used by resource limits.
    pub fn approx_bytes(&self) -> usize {
        self.terms
            .iter()
            .map(|(m, c)| 48 + 4 * m.nvars() + (c.numer().bits() as usize + c.denom().bits() as usize) / 8 + 32)
            .sum()
    }
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        if self.nvars != other.nvars || self.terms.len() != other.terms.len() {
            return false;
        }
        if self.order == other.order {
            return self.terms == other.terms;
        }
        self.terms == other.clone().with_order(self.order).terms
    }
}

impl Eq for Polynomial {}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.try_add(rhs).expect("polynomial variable counts differ")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.try_sub(rhs).expect("polynomial variable counts differ")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.try_mul(rhs).expect("polynomial variable counts differ")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(&-BigRational::one())
    }
}

struct Named<'a> {
    poly: &'a Polynomial,
    names: &'a [String],
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |i: usize| self.names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
        fmt_poly(self.poly, f, &names)
    }
}

fn fmt_poly(p: &Polynomial, f: &mut fmt::Formatter<'_>, names: &dyn Fn(usize) -> String) -> fmt::Result {
    if p.is_zero() {
        return f.write_str("0");
    }
    for (k, (m, c)) in p.terms.iter().enumerate() {
        let neg = c.is_negative();
        let abs = c.abs();
        match (k, neg) {
            (0, true) => f.write_str("-")?,
            (0, false) => {}
            (_, true) => f.write_str(" - ")?,
            (_, false) => f.write_str(" + ")?,
        }
        if m.is_one() {
            write!(f, "{abs}")?;
        } else {
            if !abs.is_one() {
                write!(f, "{abs}*")?;
            }
            m.fmt_with(f, names)?;
        }
    }
    Ok(())
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_poly(self, f, &|i| format!("x{i}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s, &["x", "y"]).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        assert_eq!(&p("x + y") * &p("x - y"), p("x^2 - y^2"));
    }

    #[test]
    fn additive_inverse_is_zero() {
        let q = p("3*x^2*y - 7/2*y + 1");
        let z = &q + &q.scale(&rat(-1));
        assert!(z.is_zero());
        assert!(z.terms().is_empty());
    }

    #[test]
    fn expands_modulus_shift() {
        let names = ["x1", "y1"];
        let lhs = Polynomial::parse("(1+x1)^2 + y1^2 - 2", &names).unwrap();
        let rhs = Polynomial::parse("x1^2 + 2*x1 + y1^2 - 1", &names).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn variable_count_mismatch_is_an_error() {
        let a = Polynomial::var(2, 0);
        let b = Polynomial::var(3, 0);
        assert!(matches!(a.try_add(&b), Err(Error::VariableCountMismatch { .. })));
        assert!(a.try_mul(&b).is_err());
    }

    #[test]
    fn evaluate_checks_length_and_constant_term() {
        let q = p("x^2 + 3*y - 5/3");
        assert!(q.evaluate(&[rat(1)]).is_err());
        assert_eq!(q.evaluate(&[rat(0), rat(0)]).unwrap(), ratio(-5, 3));
        assert_eq!(q.constant_term(), ratio(-5, 3));
    }

    #[test]
    fn primitive_part_clears_denominators() {
        let q = p("-3/4*x^2 + 3/2*y");
        let (c, prim) = q.primitive_part();
        assert_eq!(c, ratio(-3, 4));
        assert_eq!(prim, p("x^2 - 2*y"));
        assert!(prim.has_integer_coefficients());
    }

    #[test]
    fn terms_strictly_decreasing_after_reorder() {
        let q = p("x*y^2 + x^3 + y + 1 + x^2*y").with_order(MonomialOrder::Lex);
        for w in q.terms().windows(2) {
            assert_eq!(q.order().cmp(&w[0].0, &w[1].0), std::cmp::Ordering::Greater);
        }
        assert_eq!(q.leading_monomial().unwrap().exps(), &[3, 0]);
    }

    #[test]
    fn derivative_of_product() {
        let q = p("x^3*y + 2*x");
        assert_eq!(q.derivative(0), p("3*x^2*y + 2"));
        assert_eq!(q.derivative(1), p("x^3"));
    }
}
