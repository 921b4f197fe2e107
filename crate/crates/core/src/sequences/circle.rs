use num_complex::Complex;

use crate::logmag::LogMagnitude;
use crate::scalar::{self, Real};
use crate::series::PolynomialOperator;

use super::LogCoefficient;

/// Certified lower bound for `min_{|z| = r} |P(z)|` from `samples` equally
/// spaced evaluations.
///
/// Every point of the circle lies within arc distance `pi r / M` of a sample
/// and `|d/dtheta P(r e^{i theta})| <= sum_j j |c_j| r^j`, so the sampled
/// minimum minus `(pi / M) sum_j j |c_j| r^j` (and a rounding allowance)
/// bounds the true minimum from below. Coefficients are rescaled by the
/// majorant before sampling so the evaluation never overflows.
pub fn circle_min<T: Real>(p: &PolynomialOperator<T>, r: f64, samples: usize) -> CircleMin {
    let band: Vec<LogCoefficient> = p
        .band()
        .iter()
        .map(|c| {
            let ln = scalar::ln_modulus(c);
            let unit = if ln.is_finite() { scalar::scaled_c64(c, ln) } else { Complex::new(0.0, 0.0) };
            (ln, unit)
        })
        .collect();
    circle_min_log(p.valence(), &band, r, samples)
}

/// [`circle_min`] on coefficients `c_m..c_d` given in log form.
pub fn circle_min_log(valence: usize, band: &[LogCoefficient], r: f64, samples: usize) -> CircleMin {
    assert!(samples >= 64, "at least 64 samples per circle");
    assert!(r > 0.0, "radius must be positive");
    let ln_r = r.ln();
    let logs: Vec<f64> = band.iter().enumerate().map(|(i, (l, _))| l + (valence + i) as f64 * ln_r).collect();
    if band.len() == 1 {
        let v = LogMagnitude::from_ln(logs[0]);
        return CircleMin { lower: v, sampled: v };
    }
    let shift = logs.iter().map(|&l| LogMagnitude::from_ln(l)).sum::<LogMagnitude>().ln_or_neg_inf();
    // c_j r^j / majorant; |z^m| = r^m is folded in, so Horner runs on the unit circle
    let scaled: Vec<Complex<f64>> = band
        .iter()
        .zip(&logs)
        .map(|((_, u), &l)| if l.is_finite() { u * (l - shift).exp() } else { Complex::new(0.0, 0.0) })
        .collect();
    let step = std::f64::consts::TAU / samples as f64;
    let sampled_min = (0..samples)
        .map(|i| {
            let u = Complex::from_polar(1.0, step * i as f64);
            scaled.iter().rev().fold(Complex::new(0.0, 0.0), |acc, c| acc * u + c).norm()
        })
        .fold(f64::INFINITY, f64::min);
    let slope: f64 = scaled.iter().enumerate().map(|(i, c)| (valence + i) as f64 * c.norm()).sum();
    let correction = std::f64::consts::PI / samples as f64 * slope;
    let max_log = logs.iter().chain(std::iter::once(&shift)).filter(|l| l.is_finite()).fold(0f64, |a, l| a.max(l.abs()));
    let rounding = f64::EPSILON * (4.0 * scaled.len() as f64 + 16.0 + 2.0 * max_log);
    let lower = (sampled_min - correction - rounding).max(0.0);
    CircleMin {
        lower: LogMagnitude::from_value(lower) * LogMagnitude::from_ln(shift),
        sampled: LogMagnitude::from_value(sampled_min) * LogMagnitude::from_ln(shift),
    }
}

/// Result of [`circle_min`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleMin {
    /// Certified lower bound for the circle minimum.
    pub lower: LogMagnitude,
    /// Minimum over the samples; an upper bound for the circle minimum.
    pub sampled: LogMagnitude,
}
