//! Cramer's rule for the shifted system, with determinants expanded as
//! polynomials in `a_0`.

use std::collections::HashMap;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;
use crate::scalar::{self, Real};

use super::solve_monic_system;

pub const MAX_CRAMER_ORDER: usize = 8;

/// Coefficients in `a_0`, lowest first.
type Poly<T> = Vec<Complex<T>>;

#[derive(Clone, Debug)]
enum Entry<T: Real> {
    Zero,
    Diagonal,
    Constant(Complex<T>),
}

#[derive(Clone, Debug)]
pub struct CramerSolution<T: Real> {
    pub k: usize,
    pub b: Vec<Complex<T>>,
    /// `phi[s][j]`: coefficient of `a_0^j` in the determinant with column
    /// `s` replaced by the right-hand side.
    pub phi: Vec<Vec<Complex<T>>>,
    /// `C = max |phi[s][j]|`.
    pub constant: LogMagnitude,
}

impl<T: Real> CramerSolution<T> {
    /// `sum_{j=0}^{k} C / |a_0|^{k+1-j}`, an upper bound for every `|b_s|`.
    pub fn bound(&self, a0: LogMagnitude) -> LogMagnitude {
        (0..=self.k).map(|j| self.constant / a0.powi((self.k + 1 - j) as u64)).sum()
    }
}

fn matrix<T: Real>(a: &[Complex<T>], k: usize, replaced: usize) -> Vec<Vec<Entry<T>>> {
    (0..=k)
        .map(|s| {
            (0..=k)
                .map(|j| {
                    if j == replaced {
                        return if s == k { Entry::Constant(Complex::one()) } else { Entry::Zero };
                    }
                    if j < s || j - s >= a.len() || scalar::is_zero(&a[j - s]) {
                        Entry::Zero
                    } else if j == s {
                        Entry::Diagonal
                    } else {
                        Entry::Constant(scalar::mul_falling(&a[j - s], j as u64, (j - s) as u64))
                    }
                })
                .collect()
        })
        .collect()
}

fn poly_add<T: Real>(acc: &mut Poly<T>, p: &Poly<T>, negate: bool) {
    if acc.len() < p.len() {
        acc.resize(p.len(), Complex::zero());
    }
    for (x, y) in acc.iter_mut().zip(p) {
        *x = if negate { x.clone() - y.clone() } else { x.clone() + y.clone() };
    }
}

fn scaled<T: Real>(entry: &Entry<T>, p: &Poly<T>) -> Poly<T> {
    match entry {
        Entry::Zero => Vec::new(),
        Entry::Diagonal => std::iter::once(Complex::zero()).chain(p.iter().cloned()).collect(),
        Entry::Constant(c) => p.iter().map(|x| x.clone() * c.clone()).collect(),
    }
}

/// Laplace expansion along rows, memoized on the set of used columns.
fn det<T: Real>(m: &[Vec<Entry<T>>], used: u32, memo: &mut HashMap<u32, Poly<T>>) -> Poly<T> {
    let row = used.count_ones() as usize;
    if row == m.len() {
        return vec![Complex::one()];
    }
    if let Some(p) = memo.get(&used) {
        return p.clone();
    }
    let mut acc: Poly<T> = Vec::new();
    let mut free_before = 0usize;
    for (j, entry) in m[row].iter().enumerate() {
        if used & (1 << j) != 0 {
            continue;
        }
        if !matches!(entry, Entry::Zero) {
            let minor = det(m, used | (1 << j), memo);
            if !minor.is_empty() {
                poly_add(&mut acc, &scaled(entry, &minor), free_before % 2 == 1);
            }
        }
        free_before += 1;
    }
    memo.insert(used, acc.clone());
    acc
}

/// Solves the shifted system by Cramer's rule and compares with back
/// substitution (exactly, in rational mode).
pub fn cramer_cross_check<T: Real>(a: &[Complex<T>], k: usize) -> Result<CramerSolution<T>> {
    if k > MAX_CRAMER_ORDER {
        return Err(Error::InvalidParameter(format!("Cramer cross-check supports k <= {MAX_CRAMER_ORDER}")));
    }
    let direct = solve_monic_system(a, k)?;
    let a0 = a[0].clone();
    let det_full = (0..=k).fold(Complex::<T>::one(), |acc, _| acc * a0.clone());
    let mut phi = Vec::with_capacity(k + 1);
    let mut b = Vec::with_capacity(k + 1);
    for s in 0..=k {
        let mut poly = det(&matrix(a, k, s), 0, &mut HashMap::new());
        poly.resize(k + 1, Complex::zero());
        let value = poly.iter().rev().fold(Complex::<T>::zero(), |acc, c| acc * a0.clone() + c.clone());
        b.push(value / det_full.clone());
        phi.push(poly);
    }
    if T::EXACT && b != direct {
        return Err(Error::invariant("Cramer solution differs from back substitution"));
    }
    let constant = phi.iter().flatten().map(scalar::modulus).fold(LogMagnitude::ZERO, LogMagnitude::max);
    Ok(CramerSolution { k, b, phi, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(p: i64, d: i64) -> Complex<BigRational> {
        scalar::from_rational(&BigRational::new(p.into(), d.into()))
    }

    #[test]
    fn first_order_has_constant_term() {
        // b_0 = -a_1 / a_0^2: the numerator is the a_0^0 coefficient
        let a = vec![q(3, 1), q(5, 1)];
        let sol = cramer_cross_check(&a, 1).unwrap();
        assert_eq!(sol.b, vec![q(-5, 9), q(1, 3)]);
        assert_eq!(sol.phi[0], vec![q(-5, 1), q(0, 1)]);
        assert_eq!(sol.phi[1], vec![q(0, 1), q(1, 1)]);
    }

    #[test]
    fn order_cap() {
        assert!(matches!(cramer_cross_check(&[q(1, 1)], 9), Err(Error::InvalidParameter(_))));
    }
}
