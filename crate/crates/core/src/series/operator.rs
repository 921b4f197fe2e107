use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;
use crate::scalar::{self, Real};

use super::TaylorPolynomial;

/// A nonconstant polynomial `P(z) = sum_{j=m}^{d} c_j z^j`, read as the
/// differential operator `P(D) = sum c_j D^j`.
///
/// `m` is the valence, `d` the degree; `c_m` and `c_d` are nonzero and `d >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialOperator<T: Real> {
    valence: usize,
    /// `coeffs[i]` is `c_{valence + i}`.
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> PolynomialOperator<T> {
    /// Builds `sum_i coeffs[i] z^{valence + i}`.
    pub fn new(valence: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        let (first, last) = match (coeffs.first(), coeffs.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidOperator("no coefficients".into())),
        };
        if scalar::is_zero(first) {
            return Err(Error::InvalidOperator(format!("coefficient at valence {valence} is zero")));
        }
        if scalar::is_zero(last) {
            return Err(Error::InvalidOperator("leading coefficient is zero".into()));
        }
        let op = PolynomialOperator { valence, coeffs };
        if op.degree() < 1 {
            return Err(Error::InvalidOperator("constant polynomial".into()));
        }
        Ok(op)
    }

    /// Builds an operator from coefficients indexed by power, locating the
    /// valence and degree.
    pub fn from_dense(coeffs: &[Complex<T>]) -> Result<Self> {
        let lo = coeffs.iter().position(|c| !scalar::is_zero(c));
        let hi = coeffs.iter().rposition(|c| !scalar::is_zero(c));
        match (lo, hi) {
            (Some(lo), Some(hi)) => Self::new(lo, coeffs[lo..=hi].to_vec()),
            _ => Err(Error::InvalidOperator("zero polynomial".into())),
        }
    }

    /// `c z^n`.
    pub fn monomial(n: usize, c: Complex<T>) -> Result<Self> {
        Self::new(n, vec![c])
    }

    pub fn valence(&self) -> usize {
        self.valence
    }

    pub fn degree(&self) -> usize {
        self.valence + self.coeffs.len() - 1
    }

    /// `c_j`, zero outside `[valence, degree]`.
    pub fn coeff(&self, j: usize) -> Complex<T> {
        j.checked_sub(self.valence)
            .and_then(|i| self.coeffs.get(i).cloned())
            .unwrap_or_else(Complex::zero)
    }

    /// Coefficients `c_m, ..., c_d`.
    pub fn band(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// `(j, c_j)` over nonzero coefficients.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &Complex<T>)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !scalar::is_zero(c))
            .map(move |(i, c)| (self.valence + i, c))
    }

    /// `P(w)`.
    pub fn eval(&self, w: &Complex<T>) -> Complex<T> {
        let inner = self
            .coeffs
            .iter()
            .rev()
            .fold(Complex::zero(), |acc: Complex<T>, c| acc * w.clone() + c.clone());
        inner * num_traits::pow(w.clone(), self.valence)
    }

    /// `P(D) f = sum_j c_j D^j f`.
    pub fn apply(&self, f: &TaylorPolynomial<T>) -> TaylorPolynomial<T> {
        let n = f.truncation_degree();
        if self.valence > n {
            return TaylorPolynomial::zero(0);
        }
        let mut out = vec![Complex::zero(); n - self.valence + 1];
        for (idx, a) in f.terms() {
            for (j, c) in self.terms() {
                if j > idx {
                    break;
                }
                let term = scalar::mul_pair_falling(c, a, idx as u64, j as u64);
                out[idx - j] = out[idx - j].clone() + term;
            }
        }
        TaylorPolynomial::new(out)
    }

    /// `A = sum_j |c_j|`.
    pub fn coeff_abs_sum(&self) -> LogMagnitude {
        self.terms().map(|(_, c)| scalar::modulus(c)).sum()
    }

    /// `sum_j |c_j| r^j`, the majorant of `P` on `|z| = r`.
    pub fn majorant(&self, r: f64) -> LogMagnitude {
        let ln_r = r.ln();
        self.terms()
            .map(|(j, c)| LogMagnitude::from_ln(scalar::ln_modulus(c) + j as f64 * ln_r))
            .sum()
    }

    /// `sum_j j |c_j| r^{j-1}`, the majorant of `P'` on `|z| = r`.
    pub fn derivative_majorant(&self, r: f64) -> LogMagnitude {
        let ln_r = r.ln();
        self.terms()
            .filter(|(j, _)| *j > 0)
            .map(|(j, c)| {
                LogMagnitude::from_ln(scalar::ln_modulus(c) + (j as f64).ln() + (j - 1) as f64 * ln_r)
            })
            .sum()
    }

    /// As a dense polynomial in `z`.
    pub fn to_polynomial(&self) -> TaylorPolynomial<T> {
        let mut coeffs = vec![Complex::zero(); self.valence];
        coeffs.extend(self.coeffs.iter().cloned());
        TaylorPolynomial::new(coeffs)
    }

    pub fn convert<S: Real>(&self) -> Result<PolynomialOperator<S>> {
        PolynomialOperator::new(self.valence, self.coeffs.iter().map(scalar::convert).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ExactOperator, ExactPoly};
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn int(v: i64) -> Complex<BigRational> {
        scalar::from_i64(v)
    }

    fn poly(coeffs: &[i64]) -> ExactPoly {
        TaylorPolynomial::new(coeffs.iter().map(|&v| int(v)).collect())
    }

    #[test]
    fn rejects_invalid_shapes() {
        assert!(ExactOperator::new(0, vec![int(1)]).is_err(), "constant");
        assert!(ExactOperator::new(1, vec![int(0), int(1)]).is_err(), "zero at valence");
        assert!(ExactOperator::new(1, vec![int(1), int(0)]).is_err(), "zero leading");
        assert!(ExactOperator::from_dense(&[int(0), int(0)]).is_err());
        let p = ExactOperator::from_dense(&[int(0), int(0), int(3), int(0), int(1)]).unwrap();
        assert_eq!((p.valence(), p.degree()), (2, 4));
    }

    #[test]
    fn apply_examples() {
        let d = ExactOperator::monomial(1, int(1)).unwrap();
        assert_eq!(d.apply(&ExactPoly::power(4)), poly(&[0, 0, 0, 4]));
        let d2 = ExactOperator::monomial(2, int(1)).unwrap();
        assert_eq!(d2.apply(&poly(&[0, 1, 0, 1])), poly(&[0, 6]));
        // c3 D^3 + c4 D^4 on z^5 with unit coefficients: 60 z^2 + 120 z
        let p = ExactOperator::new(3, vec![int(1), int(1)]).unwrap();
        assert_eq!(p.apply(&ExactPoly::power(5)), poly(&[0, 120, 60]));
    }

    #[test]
    fn eval_examples() {
        let p = ExactOperator::monomial(4, int(1)).unwrap();
        assert_eq!(p.eval(&int(0)), int(0));
        let p = ExactOperator::monomial(2, int(1)).unwrap();
        assert_eq!(p.eval(&int(2)), int(4));
        // z^3 (z - 1)^3 at -2: (-8)(-27) = 216
        let cube = poly(&[-1, 1]).mul(&poly(&[-1, 1])).mul(&poly(&[-1, 1]));
        let p = ExactOperator::from_dense(ExactPoly::power(3).mul(&cube).coeffs()).unwrap();
        assert_eq!(p.eval(&int(-2)), int(216));
    }

    #[test]
    fn float_apply_survives_huge_factorials() {
        // 1e-200 D^300 applied to 1e-200 z^300 = 1e-400 * 300!, finite.
        let p = PolynomialOperator::<f64>::monomial(300, Complex::new(1e-200, 0.0)).unwrap();
        let f = TaylorPolynomial::monomial(300, Complex::new(1e-200, 0.0));
        let v = p.apply(&f).coeff(0).re;
        let expected = (crate::logmag::ln_factorial(300) - 400.0 * 10f64.ln()).exp();
        assert!((v - expected).abs() < 1e-9 * expected, "{v} vs {expected}");
    }

    fn arb_exact_poly() -> impl Strategy<Value = ExactPoly> {
        prop::collection::vec((-20i64..20, 1i64..6), 1..10).prop_map(|v| {
            TaylorPolynomial::from_real(v.into_iter().map(|(p, q)| BigRational::new(p.into(), q.into())).collect())
        })
    }

    fn arb_operator() -> impl Strategy<Value = ExactOperator> {
        (0usize..5, prop::collection::vec((-9i64..9, 1i64..4), 1..5)).prop_filter_map("valid", |(m, v)| {
            let mut coeffs: Vec<_> =
                v.into_iter().map(|(p, q)| Complex::new(BigRational::new(p.into(), q.into()), BigRational::zero())).collect();
            if m + coeffs.len() < 2 {
                coeffs.push(int(1));
            }
            ExactOperator::new(m, coeffs).ok()
        })
    }

    proptest! {
        #[test]
        fn apply_is_linear_exactly(p in arb_operator(), f in arb_exact_poly(), g in arb_exact_poly(), a in -5i64..5, b in -5i64..5) {
            let (a, b) = (int(a), int(b));
            let lhs = p.apply(&(&f.scale(&a) + &g.scale(&b)));
            let rhs = &p.apply(&f).scale(&a) + &p.apply(&g).scale(&b);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
