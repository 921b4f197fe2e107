//! Truncated power series and polynomial differential operators.

mod exponential;
pub mod io;
mod operator;

use std::ops::{Add, Neg, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::logmag::LogMagnitude;
use crate::scalar::{self, Real};

pub use exponential::{apply_to_exponential, exp_tail_bound, exp_truncate, EigenRelation, ExponentialCombo};
pub use operator::PolynomialOperator;

/// A truncated entire function `a_0 + a_1 z + ... + a_N z^N`.
///
/// The truncation degree `N` is carried explicitly by the coefficient vector
/// and may exceed the actual degree. Equality ignores trailing zeros.
#[derive(Clone, Debug)]
pub struct TaylorPolynomial<T: Real> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> TaylorPolynomial<T> {
    pub fn new(mut coeffs: Vec<Complex<T>>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(Complex::zero());
        }
        TaylorPolynomial { coeffs }
    }

    pub fn from_real(coeffs: Vec<T>) -> Self {
        Self::new(coeffs.into_iter().map(|c| Complex::new(c, T::zero())).collect())
    }

    /// The zero function truncated at degree `n`.
    pub fn zero(n: usize) -> Self {
        TaylorPolynomial { coeffs: vec![Complex::zero(); n + 1] }
    }

    /// `c z^k`.
    pub fn monomial(k: usize, c: Complex<T>) -> Self {
        let mut p = Self::zero(k);
        p.coeffs[k] = c;
        p
    }

    /// `z^k`.
    pub fn power(k: usize) -> Self {
        Self::monomial(k, scalar::from_i64(1))
    }

    pub fn truncation_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Index of the highest nonzero coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !scalar::is_zero(c))
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Complex<T> {
        self.coeffs.get(i).cloned().unwrap_or_else(Complex::zero)
    }

    /// `(index, coefficient)` for every nonzero coefficient, ascending.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &Complex<T>)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| !scalar::is_zero(c))
    }

    /// Drops trailing zeros, keeping at least the constant term.
    pub fn trimmed(mut self) -> Self {
        let keep = self.degree().map_or(1, |d| d + 1);
        self.coeffs.truncate(keep);
        self
    }

    /// Pads with zeros up to truncation degree `n` (never shrinks).
    pub fn padded(mut self, n: usize) -> Self {
        if self.coeffs.len() < n + 1 {
            self.coeffs.resize(n + 1, Complex::zero());
        }
        self
    }

    /// Horner evaluation.
    pub fn eval(&self, z: &Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::zero(), |acc: Complex<T>, c| acc * z.clone() + c.clone())
    }

    /// `D^order f`: coefficient `i` becomes `a_{i+order} (i+order)!/i!`.
    pub fn differentiate(&self, order: usize) -> Self {
        let n = self.truncation_degree();
        if order > n {
            return Self::zero(0);
        }
        let mut out = vec![Complex::zero(); n - order + 1];
        for (idx, a) in self.terms().filter(|(idx, _)| *idx >= order) {
            out[idx - order] = scalar::mul_falling(a, idx as u64, order as u64);
        }
        TaylorPolynomial { coeffs: out }
    }

    /// The coefficient majorant `sum |a_j| r^j`, an upper bound for
    /// `max |f(z)|` over `|z| <= r`.
    pub fn majorant_norm(&self, r: f64) -> LogMagnitude {
        assert!(r > 0.0, "majorant radius must be positive");
        let ln_r = r.ln();
        self.terms()
            .map(|(j, a)| LogMagnitude::from_ln(scalar::ln_modulus(a) + j as f64 * ln_r))
            .sum()
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        TaylorPolynomial { coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect() }
    }

    /// Multiplication by a polynomial (used for factored operator families).
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![Complex::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.terms() {
            for (j, b) in other.terms() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        TaylorPolynomial { coeffs: out }
    }

    /// Converts between scalar fields.
    pub fn convert<S: Real>(&self) -> TaylorPolynomial<S> {
        TaylorPolynomial { coeffs: self.coeffs.iter().map(scalar::convert).collect() }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        TaylorPolynomial { coeffs: (0..n).map(|i| f(self.coeff(i), other.coeff(i))).collect() }
    }
}

impl<T: Real> PartialEq for TaylorPolynomial<T> {
    fn eq(&self, other: &Self) -> bool {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).all(|i| self.coeff(i) == other.coeff(i))
    }
}

impl<T: Real> Add for &TaylorPolynomial<T> {
    type Output = TaylorPolynomial<T>;

    fn add(self, rhs: Self) -> TaylorPolynomial<T> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &TaylorPolynomial<T> {
    type Output = TaylorPolynomial<T>;

    fn sub(self, rhs: Self) -> TaylorPolynomial<T> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<T: Real> Neg for &TaylorPolynomial<T> {
    type Output = TaylorPolynomial<T>;

    fn neg(self) -> TaylorPolynomial<T> {
        TaylorPolynomial { coeffs: self.coeffs.iter().map(|a| -a.clone()).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExactPoly;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn qp(coeffs: &[(i64, i64)]) -> ExactPoly {
        TaylorPolynomial::from_real(coeffs.iter().map(|&(p, q)| BigRational::new(p.into(), q.into())).collect())
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn derivative_examples() {
        // z^3 -> 3z^2
        assert_eq!(ExactPoly::power(3).differentiate(1), qp(&[(0, 1), (0, 1), (3, 1)]));
        // z^k, order k+1 -> 0
        for k in 0..6 {
            assert!(ExactPoly::power(k).differentiate(k + 1).is_zero());
        }
        // e^z truncation, order 2 -> 1 + z
        let e = qp(&[(1, 1), (1, 1), (1, 2), (1, 6)]);
        assert_eq!(e.differentiate(2), qp(&[(1, 1), (1, 1)]));
    }

    #[test]
    fn eval_examples() {
        let sq = TaylorPolynomial::<f64>::power(2);
        assert_eq!(sq.eval(&c(3.0, 0.0)), c(9.0, 0.0));
        assert_eq!(TaylorPolynomial::<f64>::zero(4).eval(&c(1.5, -2.0)), c(0.0, 0.0));
        // (1 + z)^2 at 1 + i = (2 + i)^2 = 3 + 4i
        let p = qp(&[(1, 1), (2, 1), (1, 1)]);
        let z = Complex::new(BigRational::from_integer(1.into()), BigRational::from_integer(1.into()));
        assert_eq!(p.eval(&z), Complex::new(BigRational::from_integer(3.into()), BigRational::from_integer(4.into())));
    }

    #[test]
    fn majorant_examples() {
        assert!((ExactPoly::power(7).majorant_norm(1.0).to_f64() - 1.0).abs() < 1e-15);
        assert!((qp(&[(1, 1), (1, 1)]).majorant_norm(2.0).to_f64() - 3.0).abs() < 1e-14);
        // partial sums of e
        let mut coeffs = vec![];
        let mut fact = 1i64;
        for j in 0..=10i64 {
            if j > 0 {
                fact *= j;
            }
            coeffs.push((1, fact));
        }
        let m = qp(&coeffs).majorant_norm(1.0).to_f64();
        let e = std::f64::consts::E;
        assert!(m <= e && m >= e - 3e-7, "{m}");
    }

    #[test]
    fn equality_ignores_trailing_zeros() {
        assert_eq!(qp(&[(1, 1), (0, 1), (0, 1)]), qp(&[(1, 1)]));
        assert_eq!(qp(&[(1, 1), (0, 1)]).trimmed().truncation_degree(), 0);
        assert_ne!(qp(&[(1, 1), (0, 1), (1, 1)]), qp(&[(1, 1)]));
    }

    fn arb_poly() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..12)
    }

    proptest! {
        #[test]
        fn majorant_dominates_values(coeffs in arb_poly(), r in 0.1..4.0f64, zs in prop::collection::vec((0.0..1.0f64, 0.0..std::f64::consts::TAU), 100)) {
            let f = TaylorPolynomial::new(coeffs.iter().map(|&(a, b)| c(a, b)).collect());
            let m = f.majorant_norm(r).to_f64();
            for (rho, theta) in zs {
                let z = Complex::from_polar(rho * r, theta);
                prop_assert!(f.eval(&z).norm() <= m * (1.0 + 1e-12) + 1e-300);
            }
        }

        #[test]
        fn majorant_monotone_and_subadditive(a in arb_poly(), b in arb_poly(), r in 0.1..3.0f64, dr in 0.0..2.0f64) {
            let f = TaylorPolynomial::new(a.iter().map(|&(x, y)| c(x, y)).collect());
            let g = TaylorPolynomial::new(b.iter().map(|&(x, y)| c(x, y)).collect());
            prop_assert!(f.majorant_norm(r).to_f64() <= f.majorant_norm(r + dr).to_f64() * (1.0 + 1e-12));
            let sum = (&f + &g).majorant_norm(r).to_f64();
            prop_assert!(sum <= (f.majorant_norm(r).to_f64() + g.majorant_norm(r).to_f64()) * (1.0 + 1e-12));
        }
    }
}
