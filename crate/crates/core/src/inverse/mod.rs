//! Approximate right inverses `S_n` of `P_n(D)`.
//!
//! * Exponential route: `S_n e_w = e_w / P_n(w)` (zero at roots).
//! * Polynomial route: `S_n z^k = f_{n,k}`, the `m`-fold antiderivative of
//!   the polynomial `g` solving `Psi_n(D) g = z^k`, where `Psi_n` is `P_n`
//!   shifted down by its valence.

mod cramer;

use std::ops::RangeInclusive;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logmag::{ln_factorial, LogMagnitude};
use crate::scalar::{self, Real};
use crate::sequences::{GrowthRule, OperatorSequence, Verdict};
use crate::series::{ExponentialCombo, PolynomialOperator, TaylorPolynomial};

pub use cramer::{cramer_cross_check, CramerSolution, MAX_CRAMER_ORDER};

/// `e_w / P(w)`, or the zero combination when `P(w) = 0`.
pub fn exp_inverse<T: Real>(p: &PolynomialOperator<T>, w: &Complex<T>) -> ExponentialCombo<T> {
    let v = p.eval(w);
    if scalar::is_zero(&v) {
        return ExponentialCombo::zero();
    }
    ExponentialCombo::single(Complex::<T>::one() / v, w.clone())
}

/// `a_j = c_{j+m}`, `j = 0..=d-m`.
pub fn shifted_coeffs<T: Real>(p: &PolynomialOperator<T>) -> Vec<Complex<T>> {
    p.band().to_vec()
}

fn check_leading<T: Real>(a: &[Complex<T>]) -> Result<()> {
    match a.first() {
        Some(a0) if !scalar::is_zero(a0) => Ok(()),
        _ => Err(Error::precondition("shifted coefficient a_0 must be nonzero")),
    }
}

/// Solves `sum_{j=s}^{k} a_{j-s} b_j j!/s! = [s = k]` for `s = 0..=k` by back
/// substitution. The system is upper triangular with determinant
/// `a_0^{k+1}`.
pub fn solve_monic_system<T: Real>(a: &[Complex<T>], k: usize) -> Result<Vec<Complex<T>>> {
    let mut y = vec![Complex::zero(); k + 1];
    y[k] = Complex::one();
    solve_shifted(a, &y)
}

/// Solves `Psi(D) g = y` for the polynomial `g` with `deg g <= deg y`, where
/// `Psi = sum_j a_j z^j`.
fn solve_shifted<T: Real>(a: &[Complex<T>], y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    check_leading(a)?;
    let k = y.len() - 1;
    let a0 = a[0].clone();
    let mut b: Vec<Complex<T>> = vec![Complex::zero(); k + 1];
    for s in (0..=k).rev() {
        let mut acc = y[s].clone();
        for j in s + 1..=k.min(s + a.len() - 1) {
            let c = &a[j - s];
            if scalar::is_zero(c) || scalar::is_zero(&b[j]) {
                continue;
            }
            acc = acc - scalar::mul_pair_falling(c, &b[j], j as u64, (j - s) as u64);
        }
        b[s] = acc / a0.clone();
    }
    Ok(b)
}

/// `sum_s b_s z^{s+m} s!/(s+m)!`: the `m`-fold antiderivative of `g`
/// vanishing to order `m` at the origin.
fn antiderivative<T: Real>(g: &[Complex<T>], m: usize) -> TaylorPolynomial<T> {
    let mut coeffs = vec![Complex::zero(); g.len() + m];
    for (s, b) in g.iter().enumerate() {
        coeffs[s + m] = scalar::div_falling(b, (s + m) as u64, m as u64);
    }
    TaylorPolynomial::new(coeffs)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Exponential,
    Polynomial,
}

/// How `P(D) f = y` was confirmed after construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityCheck {
    /// Exact equality in rational arithmetic.
    Exact,
    /// Floating mode: majorant of `P(D) f - y` on the unit disk.
    Residual(LogMagnitude),
}

impl IdentityCheck {
    pub fn describe(&self) -> String {
        match self {
            IdentityCheck::Exact => "exact".into(),
            IdentityCheck::Residual(r) => format!("residual {:e}", r.to_f64()),
        }
    }
}

/// Polynomial-route right inverse at `(P, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RightInverse<T: Real> {
    pub k: usize,
    pub valence: usize,
    /// Shifted coefficients `a_0..a_{d-m}`.
    pub shifted: Vec<Complex<T>>,
    /// `b_0..b_k`, the coefficients of `g` with `Psi(D) g = z^k`.
    pub b: Vec<Complex<T>>,
    /// `f_{n,k}` with `P(D) f_{n,k} = z^k`.
    pub f: TaylorPolynomial<T>,
    pub identity: IdentityCheck,
}

fn verify<T: Real>(p: &PolynomialOperator<T>, f: &TaylorPolynomial<T>, y: &TaylorPolynomial<T>) -> Result<IdentityCheck> {
    let image = p.apply(f);
    if T::EXACT {
        if &image != y {
            return Err(Error::invariant("P(D) f differs from the target in exact arithmetic"));
        }
        return Ok(IdentityCheck::Exact);
    }
    Ok(IdentityCheck::Residual((&image - y).majorant_norm(1.0)))
}

/// Builds `f_{n,k}` and confirms `P(D) f_{n,k} = z^k`.
pub fn build_f_nk<T: Real>(p: &PolynomialOperator<T>, k: usize) -> Result<RightInverse<T>> {
    let shifted = shifted_coeffs(p);
    let b = solve_monic_system(&shifted, k)?;
    let f = antiderivative(&b, p.valence());
    let identity = verify(p, &f, &TaylorPolynomial::power(k))?;
    Ok(RightInverse { k, valence: p.valence(), shifted, b, f, identity })
}

/// `S y = sum_k y_k f_{n,k}`, computed with one triangular solve; confirms
/// `P(D) S y = y`.
pub fn inverse_for_polynomial<T: Real>(p: &PolynomialOperator<T>, y: &TaylorPolynomial<T>) -> Result<TaylorPolynomial<T>> {
    let y = y.clone().trimmed();
    if y.is_zero() {
        return Ok(TaylorPolynomial::zero(0));
    }
    let g = solve_shifted(&shifted_coeffs(p), y.coeffs())?;
    let f = antiderivative(&g, p.valence());
    if T::EXACT {
        verify(p, &f, &y)?;
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FnkRow {
    pub n: u64,
    pub valence: u64,
    /// `||f_{n,k}||_r`.
    pub norm: LogMagnitude,
    /// `(|c_{m,n}|^{k+1-j} m!)^{1/m} > 2r` for every `j = 0..=k`.
    pub threshold_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FnkDecayReport {
    pub k: usize,
    pub r: f64,
    pub rows: Vec<FnkRow>,
    /// Growth rule applied to `-ln ||f_{n,k}||_r`.
    pub verdict: Verdict,
    /// First `n` from which the threshold holds through the end of the range.
    pub threshold_from: Option<u64>,
}

/// Norms of `f_{n,k}` on `|z| <= r` over `n_range`, with the factorial
/// threshold that forces their decay.
pub fn fnk_decay(
    seq: &OperatorSequence,
    k: usize,
    r: f64,
    n_range: RangeInclusive<u64>,
    rule: &GrowthRule,
) -> Result<FnkDecayReport> {
    if !(r > 1.0) {
        return Err(Error::InvalidParameter("fnk decay needs r > 1".into()));
    }
    let ns: Vec<u64> = n_range.collect();
    let rows = ns
        .par_iter()
        .map(|&n| {
            let p: PolynomialOperator<f64> = seq.operator(n)?;
            let inv = build_f_nk(&p, k)?;
            let m = p.valence() as u64;
            let ln_c = seq.band_log(n)?[0].0;
            let ln_2r = (2.0 * r).ln();
            let threshold_pass = m > 0
                && (0..=k).all(|j| ((k + 1 - j) as f64 * ln_c + ln_factorial(m)) / m as f64 > ln_2r);
            Ok(FnkRow { n, valence: m, norm: inv.f.majorant_norm(r), threshold_pass })
        })
        .collect::<Result<Vec<_>>>()?;
    let neg: Vec<(u64, f64)> = rows.iter().map(|row| (row.n, -row.norm.ln_or_neg_inf())).collect();
    let verdict = rule.classify(&neg).0;
    let threshold_from = rows.iter().rposition(|row| !row.threshold_pass).map_or(rows.first().map(|row| row.n), |i| rows.get(i + 1).map(|row| row.n));
    Ok(FnkDecayReport { k, r, rows, verdict, threshold_from })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ExactOperator, ExactPoly};
    use num_rational::BigRational;

    fn q(p: i64, d: i64) -> Complex<BigRational> {
        scalar::from_rational(&BigRational::new(p.into(), d.into()))
    }

    fn ints(v: &[i64]) -> Vec<Complex<BigRational>> {
        v.iter().map(|&x| q(x, 1)).collect()
    }

    #[test]
    fn exp_inverse_examples() {
        let p = ExactOperator::monomial(2, q(1, 1)).unwrap();
        assert!(exp_inverse(&p, &q(0, 1)).is_zero());
        let e = exp_inverse(&p, &q(2, 1));
        assert_eq!(e.terms(), &[(q(1, 4), q(2, 1))]);
    }

    #[test]
    fn shifted_examples() {
        assert_eq!(shifted_coeffs(&ExactOperator::monomial(5, q(1, 1)).unwrap()), ints(&[1]));
        let f1 = ExactOperator::new(3, vec![q(1, 27), q(1, 1)]).unwrap();
        assert_eq!(shifted_coeffs(&f1), vec![q(1, 27), q(1, 1)]);
    }

    #[test]
    fn monic_system_examples() {
        assert_eq!(solve_monic_system(&ints(&[1]), 3).unwrap(), ints(&[0, 0, 0, 1]));
        assert_eq!(solve_monic_system(&ints(&[1, 1]), 1).unwrap(), ints(&[-1, 1]));
        assert_eq!(solve_monic_system(&ints(&[2]), 0).unwrap(), vec![q(1, 2)]);
        assert!(matches!(solve_monic_system(&ints(&[0, 1]), 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn f_nk_examples() {
        for m in 1..6usize {
            let p = ExactOperator::monomial(m, q(1, 1)).unwrap();
            let inv = build_f_nk(&p, 0).unwrap();
            let fact: i64 = (1..=m as i64).product();
            assert_eq!(inv.f, ExactPoly::monomial(m, q(1, fact)));
        }
        let p = ExactOperator::new(3, vec![q(1, 1), q(1, 1)]).unwrap();
        let inv = build_f_nk(&p, 1).unwrap();
        assert_eq!(p.apply(&inv.f), ExactPoly::power(1));
        assert_eq!(inv.identity, IdentityCheck::Exact);
        let p = ExactOperator::monomial(5, q(2, 1)).unwrap();
        assert_eq!(build_f_nk(&p, 0).unwrap().f, ExactPoly::monomial(5, q(1, 240)));
    }

    #[test]
    fn inverse_for_polynomial_examples() {
        let p = ExactOperator::new(2, vec![q(3, 1), q(-1, 2), q(1, 1)]).unwrap();
        assert!(inverse_for_polynomial(&p, &ExactPoly::zero(3)).unwrap().is_zero());
        for k in 0..5 {
            assert_eq!(inverse_for_polynomial(&p, &ExactPoly::power(k)).unwrap(), build_f_nk(&p, k).unwrap().f);
        }
        let m = 4usize;
        let p = ExactOperator::monomial(m, q(1, 1)).unwrap();
        let y = TaylorPolynomial::new(ints(&[1, 1]));
        let expect = &ExactPoly::monomial(m, q(1, 24)) + &ExactPoly::monomial(m + 1, q(1, 120));
        assert_eq!(inverse_for_polynomial(&p, &y).unwrap(), expect);
    }

    #[test]
    fn unit_monomial_norms_follow_closed_form() {
        let seq = OperatorSequence::from_tag("F4", &Default::default()).unwrap();
        let rep = fnk_decay(&seq, 0, 2.0, 1..=40, &GrowthRule::pointwise()).unwrap();
        for row in &rep.rows {
            let expect = row.n as f64 * 2f64.ln() - ln_factorial(row.n);
            assert!((row.norm.ln_or_neg_inf() - expect).abs() < 1e-10);
        }
        assert_eq!(rep.verdict, Verdict::Supports);
        // 2^n/n! decreases from n = 2 on and drops below 1 at n = 4
        assert!(rep.rows.windows(2).skip(1).all(|w| w[1].norm <= w[0].norm));
    }

    #[test]
    fn float_identity_residual_is_small() {
        let p = PolynomialOperator::<f64>::new(3, vec![Complex::new(0.5, 0.1), Complex::new(1.0, 0.0), Complex::new(-0.25, 0.0)]).unwrap();
        let inv = build_f_nk(&p, 4).unwrap();
        match inv.identity {
            IdentityCheck::Residual(r) => assert!(r.to_f64() < 1e-12, "{r}"),
            IdentityCheck::Exact => panic!("float mode"),
        }
    }
}
