use serde::Serialize;

use crate::error::{Error, Result};

/// Point moduli `|w_1| <= |w_2| <= ...` of a candidate unicity set.
#[derive(Clone, Debug, PartialEq)]
pub enum PointSource {
    /// Explicit moduli (sorted internally).
    List(Vec<f64>),
    /// `n^exponent`, `n >= 1`.
    Power { exponent: f64 },
    /// `base^n`, `n >= 1`.
    Geometric { base: f64 },
}

impl PointSource {
    /// Counting function `n(r) = #{points with modulus <= r}`.
    fn counter(&self) -> Result<Box<dyn Fn(f64) -> u64 + '_>> {
        match self {
            PointSource::List(v) => {
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidParameter("point moduli must be finite and nonnegative".into()));
                }
                let mut sorted = v.clone();
                sorted.sort_by(f64::total_cmp);
                Ok(Box::new(move |r| sorted.partition_point(|&x| x <= r) as u64))
            }
            &PointSource::Power { exponent } => {
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::InvalidParameter("exponent must be positive".into()));
                }
                Ok(Box::new(move |r| {
                    if r < 1.0 {
                        return 0;
                    }
                    let mut k = r.powf(1.0 / exponent).floor() as u64;
                    while ((k + 1) as f64).powf(exponent) <= r {
                        k += 1;
                    }
                    while k > 0 && (k as f64).powf(exponent) > r {
                        k -= 1;
                    }
                    k
                }))
            }
            &PointSource::Geometric { base } => {
                if !(base > 1.0 && base.is_finite()) {
                    return Err(Error::InvalidParameter("base must exceed 1".into()));
                }
                Ok(Box::new(move |r| {
                    if r < base {
                        return 0;
                    }
                    let mut k = (r.ln() / base.ln()).floor() as u64;
                    while base.powf((k + 1) as f64) <= r {
                        k += 1;
                    }
                    while k > 0 && base.powf(k as f64) > r {
                        k -= 1;
                    }
                    k
                }))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnicityEstimate {
    /// Log-spaced sample radii in `(1, r_max]`.
    pub radii: Vec<f64>,
    /// `n(r)` at each radius.
    pub counts: Vec<u64>,
    /// `ln n(r) / ln r` (`-inf` where `n(r) = 0`).
    pub slopes: Vec<f64>,
    /// Maximum slope over the last decade `[r_max / 10, r_max]`.
    pub chi: f64,
    /// `chi > 1 + margin`.
    pub unicity_supported: bool,
}

/// Estimates the convergence exponent `limsup ln n(r) / ln r` from the
/// counting function on `samples_per_decade` log-spaced radii up to `r_max`.
pub fn unicity_exponent(
    points: &PointSource,
    r_max: f64,
    samples_per_decade: usize,
    margin: f64,
) -> Result<UnicityEstimate> {
    if !(r_max > 10.0) {
        return Err(Error::InvalidParameter("r_max must exceed 10".into()));
    }
    let count = points.counter()?;
    if count(r_max) < 10 {
        return Err(Error::precondition("fewer than 10 points below r_max"));
    }
    let decades = r_max.log10();
    let steps = (decades * samples_per_decade.max(1) as f64).ceil() as usize;
    let radii: Vec<f64> = (1..=steps).map(|i| 10f64.powf(decades * i as f64 / steps as f64)).collect();
    let counts: Vec<u64> = radii.iter().map(|&r| count(r)).collect();
    let slopes: Vec<f64> = radii
        .iter()
        .zip(&counts)
        .map(|(&r, &c)| if c == 0 { f64::NEG_INFINITY } else { (c as f64).ln() / r.ln() })
        .collect();
    let chi = radii
        .iter()
        .zip(&slopes)
        .filter(|(&r, _)| r >= r_max / 10.0 * (1.0 - 1e-12))
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(UnicityEstimate { radii, counts, slopes, chi, unicity_supported: chi > 1.0 + margin })
}
