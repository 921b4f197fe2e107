use num_complex::Complex;
use num_traits::One;

use crate::error::{Error, Result};
use crate::logmag::{ln_factorial, LogMagnitude};
use crate::scalar::{self, Real};

use super::{PolynomialOperator, TaylorPolynomial};

/// Upper bound for `sum_{i > m} x^i / i!` where `x = |w| r`.
///
/// `m < 0` means the whole series (bounded by `e^x`).
pub fn exp_tail_bound(x: LogMagnitude, m: i64) -> LogMagnitude {
    if x.is_zero() {
        return if m < 0 { LogMagnitude::ONE } else { LogMagnitude::ZERO };
    }
    let xf = x.to_f64();
    if m < 0 || xf >= (m + 2) as f64 {
        return LogMagnitude::from_ln(xf);
    }
    let m = m as u64;
    // first omitted term times the geometric majorant of the ratios
    let ln = (m + 1) as f64 * x.ln_or_neg_inf() - ln_factorial(m + 1) - (-xf / (m + 2) as f64).ln_1p();
    LogMagnitude::from_ln(ln)
}

/// Taylor truncation of `e^{wz}` at degree `n`, with a bound on the
/// omitted tail's majorant on `|z| <= r`.
pub fn exp_truncate<T: Real>(w: &Complex<T>, n: usize, r: f64) -> (TaylorPolynomial<T>, LogMagnitude) {
    assert!(r > 0.0, "radius must be positive");
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut c: Complex<T> = Complex::one();
    coeffs.push(c.clone());
    for j in 1..=n {
        c = c * w.clone() / T::from_i64(j as i64);
        coeffs.push(c.clone());
    }
    let x = scalar::modulus(w) * LogMagnitude::from_value(r);
    (TaylorPolynomial::new(coeffs), exp_tail_bound(x, n as i64))
}

/// Finite linear combination `sum_i weight_i e^{w_i z}` with distinct
/// frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialCombo<T: Real> {
    terms: Vec<(Complex<T>, Complex<T>)>,
}

impl<T: Real> ExponentialCombo<T> {
    /// `terms` are `(weight, frequency)` pairs.
    pub fn new(terms: Vec<(Complex<T>, Complex<T>)>) -> Result<Self> {
        for (i, (_, w)) in terms.iter().enumerate() {
            if terms[..i].iter().any(|(_, v)| v == w) {
                return Err(Error::InvalidParameter(format!(
                    "repeated frequency {}",
                    scalar::format_complex(w)
                )));
            }
        }
        Ok(ExponentialCombo { terms })
    }

    pub fn zero() -> Self {
        ExponentialCombo { terms: Vec::new() }
    }

    pub fn single(weight: Complex<T>, freq: Complex<T>) -> Self {
        ExponentialCombo { terms: vec![(weight, freq)] }
    }

    pub fn terms(&self) -> &[(Complex<T>, Complex<T>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(a, _)| scalar::is_zero(a))
    }

    /// Truncates every exponential at degree `n`; the bound covers the sum
    /// of the weighted tails on `|z| <= r`.
    pub fn truncate(&self, n: usize, r: f64) -> (TaylorPolynomial<T>, LogMagnitude) {
        let mut acc = TaylorPolynomial::zero(n);
        let mut tails = Vec::with_capacity(self.terms.len());
        for (a, w) in &self.terms {
            let (e, tail) = exp_truncate(w, n, r);
            acc = &acc + &e.scale(a);
            tails.push(scalar::modulus(a) * tail);
        }
        (acc, tails.into_iter().sum())
    }
}

/// The eigenrelation `P(D) e_w = P(w) e_w` checked on a truncation.
#[derive(Clone, Debug)]
pub struct EigenRelation<T: Real> {
    /// `P(w)`.
    pub value: Complex<T>,
    /// Majorant of `P(D) E_N - P(w) E_N` on `|z| <= r`, `E_N` the truncation.
    pub distance: LogMagnitude,
    /// Reported bound: `sum_j |c_j| |w|^j tail_{N-j}(|w| r)`, plus a rounding
    /// allowance in floating modes.
    pub bound: LogMagnitude,
}

impl<T: Real> EigenRelation<T> {
    pub fn holds(&self) -> bool {
        self.distance <= self.bound
    }
}

/// Evaluates `P(w)` and audits the eigenrelation on the degree-`n`
/// truncation of `e_w` over `|z| <= r`.
pub fn apply_to_exponential<T: Real>(
    p: &PolynomialOperator<T>,
    w: &Complex<T>,
    n: usize,
    r: f64,
) -> EigenRelation<T> {
    let value = p.eval(w);
    let (e, _) = exp_truncate(w, n, r);
    let lhs = p.apply(&e);
    let rhs = e.scale(&value);
    let distance = (&lhs - &rhs).majorant_norm(r);

    let w_abs = scalar::modulus(w);
    let x = w_abs * LogMagnitude::from_value(r);
    let weights: Vec<(usize, LogMagnitude)> =
        p.terms().map(|(j, c)| (j, scalar::modulus(c) * w_abs.powi(j as u64))).collect();
    let mut bound: LogMagnitude = weights
        .iter()
        .map(|&(j, cw)| cw * exp_tail_bound(x, n as i64 - j as i64))
        .sum();
    if !T::EXACT {
        let scale: LogMagnitude = weights.iter().map(|&(_, cw)| cw).sum();
        let slack = LogMagnitude::from_value(8.0 * T::unit_roundoff() * (n + p.degree() + 2) as f64);
        bound = bound.add(slack * scale * LogMagnitude::from_ln(x.to_f64()));
    }
    EigenRelation { value, distance, bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ExactOperator, ExactPoly};
    use num_rational::BigRational;
    use num_traits::Zero;

    fn q(p: i64, d: i64) -> Complex<BigRational> {
        Complex::new(BigRational::new(p.into(), d.into()), BigRational::zero())
    }

    #[test]
    fn exp_truncate_examples() {
        let (e, tail) = exp_truncate(&q(0, 1), 5, 1.0);
        assert_eq!(e, ExactPoly::power(0));
        assert!(tail.is_zero());

        let (_, tail) = exp_truncate(&q(1, 1), 0, 1.0);
        assert!(tail.to_f64() >= std::f64::consts::E - 1.0);

        let (e, tail) = exp_truncate(&q(1, 1), 20, 1.0);
        assert!(tail.to_f64() <= 1e-18);
        assert_eq!(e.coeff(3), q(1, 6));
    }

    #[test]
    fn tail_bound_dominates_true_tail() {
        for &(x, m) in &[(0.5f64, 3i64), (2.0, 5), (5.0, 10), (5.0, 2), (10.0, 40)] {
            let mut term = 1.0f64;
            let mut tail = 0.0;
            for i in 1..400 {
                term *= x / i as f64;
                if i as i64 > m {
                    tail += term;
                }
            }
            let b = exp_tail_bound(LogMagnitude::from_value(x), m).to_f64();
            assert!(b >= tail * (1.0 - 1e-12), "x={x} m={m}: {b} < {tail}");
        }
    }

    #[test]
    fn eigen_relation_bound_shrinks_with_truncation() {
        let p = ExactOperator::new(2, vec![q(1, 1), q(-3, 2), q(1, 1)]).unwrap();
        let w = q(-3, 1);
        let mut last = f64::INFINITY;
        for n in [20, 40, 80] {
            let rel = apply_to_exponential(&p, &w, n, 1.0);
            assert!(rel.holds(), "n={n}: {:?}", rel);
            let b = rel.bound.ln_or_neg_inf();
            assert!(b < last);
            last = b;
        }
        assert_eq!(apply_to_exponential(&p, &w, 20, 1.0).value, p.eval(&w));
    }

    #[test]
    fn float_eigen_relation_includes_rounding() {
        let p = PolynomialOperator::<f64>::new(1, vec![Complex::new(0.3, 0.1), Complex::new(-1.0, 0.0)]).unwrap();
        for n in [20, 40, 80] {
            let rel = apply_to_exponential(&p, &Complex::new(-2.5, 0.5), n, 1.5);
            assert!(rel.holds(), "{:?}", rel);
        }
    }

    #[test]
    fn combo_rejects_duplicates() {
        assert!(ExponentialCombo::new(vec![(q(1, 1), q(2, 1)), (q(3, 1), q(2, 1))]).is_err());
        let combo = ExponentialCombo::new(vec![(q(1, 1), q(2, 1)), (q(3, 1), q(-2, 1))]).unwrap();
        let (t, _) = combo.truncate(3, 1.0);
        assert_eq!(t.coeff(0), q(4, 1));
        assert_eq!(t.coeff(1), q(-4, 1));
    }
}
