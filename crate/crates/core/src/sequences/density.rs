use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{exp_truncate, ExponentialCombo, TaylorPolynomial};

/// Condition numbers above this make a least-squares fit meaningless in
/// double precision.
pub const MAX_CONDITION: f64 = 1e13;

const RINGS: usize = 8;
const ANGLES: usize = 32;

#[derive(Clone, Debug, Serialize)]
pub struct DensityFit {
    #[serde(skip)]
    pub combo: ExponentialCombo<f64>,
    /// Best max-error on the grid using the first `m_terms` frequencies.
    pub residual: f64,
    /// Best residual with the first `k` frequencies, `k = 1..=m_terms`;
    /// nonincreasing by construction (nested spans).
    pub residuals: Vec<f64>,
    /// Condition number of each prefix design matrix.
    pub conditions: Vec<f64>,
    pub grid_points: usize,
}

/// Polar grid on `|z| <= r`: the origin plus 8 rings of 32 points.
pub fn disk_grid(r: f64) -> Vec<Complex<f64>> {
    let mut pts = vec![Complex::new(0.0, 0.0)];
    for i in 1..=RINGS {
        for a in 0..ANGLES {
            pts.push(Complex::from_polar(r * i as f64 / RINGS as f64, std::f64::consts::TAU * a as f64 / ANGLES as f64));
        }
    }
    pts
}

/// Truncation degree whose exponential tail on `|z| <= r` is below `e^-40`.
fn truncation_for(w: &Complex<f64>, r: f64) -> usize {
    let mut n = 8;
    while exp_truncate(w, n, r).1.ln_or_neg_inf() > -40.0 {
        n *= 2;
    }
    n
}

/// Least-squares approximation of `target` on a disk grid by combinations of
/// truncated `e_w`, `w` among the first `m_terms` samples.
pub fn density_demo(
    samples: &[Complex<f64>],
    target: &TaylorPolynomial<f64>,
    r: f64,
    m_terms: usize,
) -> Result<DensityFit> {
    if m_terms == 0 || m_terms > samples.len() {
        return Err(Error::InvalidParameter(format!("m_terms={m_terms} must lie in 1..={}", samples.len())));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let grid = disk_grid(r);
    if target.is_zero() {
        return Ok(DensityFit {
            combo: ExponentialCombo::zero(),
            residual: 0.0,
            residuals: vec![0.0; m_terms],
            conditions: vec![],
            grid_points: grid.len(),
        });
    }
    let ws = &samples[..m_terms];
    ExponentialCombo::new(ws.iter().map(|w| (Complex::new(1.0, 0.0), *w)).collect())?;
    let columns: Vec<Vec<Complex<f64>>> = ws
        .iter()
        .map(|w| {
            let (e, _) = exp_truncate(w, truncation_for(w, r), r);
            grid.iter().map(|z| e.eval(z)).collect()
        })
        .collect();
    let b = DVector::from_iterator(grid.len(), grid.iter().map(|z| target.eval(z)));
    let mut best: Option<(f64, Vec<Complex<f64>>)> = None;
    let (mut residuals, mut conditions) = (vec![], vec![]);
    for k in 1..=m_terms {
        let a = DMatrix::from_fn(grid.len(), k, |i, j| columns[j][i]);
        let svd = a.clone().svd(true, true);
        let sv = &svd.singular_values;
        let cond = sv.max() / sv.min();
        conditions.push(cond);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition: cond });
        }
        let x = svd.solve(&b, 0.0).map_err(|e| Error::Invariant(format!("least squares: {e}")))?;
        let res = (&a * &x - &b).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(r0, _)| res < *r0) {
            best = Some((res, x.iter().copied().collect()));
        }
        residuals.push(best.as_ref().expect("set above").0);
    }
    let (residual, weights) = best.expect("m_terms >= 1");
    let mut terms: Vec<_> = weights.into_iter().zip(ws.iter().copied()).collect();
    terms.resize(m_terms.min(terms.len()), (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)));
    Ok(DensityFit { combo: ExponentialCombo::new(terms)?, residual, residuals, conditions, grid_points: grid.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn freqs(m: usize) -> Vec<Complex<f64>> {
        (0..m).map(|k| Complex::new(-1.0 - k as f64 / 10.0, 0.0)).collect()
    }

    #[test]
    fn zero_target() {
        let fit = density_demo(&freqs(3), &TaylorPolynomial::zero(2), 1.0, 3).unwrap();
        assert!(fit.combo.is_zero() && fit.residual == 0.0);
    }

    #[test]
    fn residuals_are_nonincreasing() {
        let one = TaylorPolynomial::from_real(vec![1.0]);
        let fit = density_demo(&freqs(7), &one, 1.0, 7).unwrap();
        assert!(fit.residuals.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.residuals[6] < fit.residuals[0]);
    }

    #[test]
    fn identity_target_with_many_terms() {
        let z = TaylorPolynomial::from_real(vec![0.0, 1.0]);
        let f8 = density_demo(&freqs(8), &z, 1.0, 8).unwrap();
        assert!(f8.residual < 1.5e-3, "{}", f8.residual);
        let f9 = density_demo(&freqs(9), &z, 1.0, 9).unwrap();
        assert!(f9.residual < 1e-3, "{}", f9.residual);
    }

    #[test]
    fn rejects_bad_sizes_and_conditioning() {
        let z = TaylorPolynomial::from_real(vec![0.0, 1.0]);
        assert!(density_demo(&freqs(2), &z, 1.0, 3).is_err());
        let close: Vec<_> = (0..12).map(|k| Complex::new(-1.0 - k as f64 * 1e-4, 0.0)).collect();
        assert!(matches!(density_demo(&close, &z, 1.0, 12), Err(Error::IllConditioned { .. })));
    }
}
