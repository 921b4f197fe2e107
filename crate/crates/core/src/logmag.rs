//! Nonnegative magnitudes stored by their natural logarithm.
//!
//! Quantities such as `2^m`, `m!` or `A_k * m^d` leave the range of `f64`
//! long before the index sweeps get interesting. A [`LogMagnitude`] keeps the
//! logarithm instead, so products and comparisons never overflow.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Div, Mul};
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A nonnegative real number `x`, stored as `ln x`. Zero is stored as `-inf`.
#[derive(Clone, Copy, PartialEq)]
pub struct LogMagnitude(f64);

impl LogMagnitude {
    pub const ZERO: LogMagnitude = LogMagnitude(f64::NEG_INFINITY);
    pub const ONE: LogMagnitude = LogMagnitude(0.0);

    /// Builds a magnitude from its natural logarithm. `-inf` is zero.
    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan(), "NaN logarithm");
        LogMagnitude(ln)
    }

    /// Magnitude of an ordinary float (its absolute value).
    pub fn from_value(x: f64) -> Self {
        LogMagnitude(x.abs().ln())
    }

    pub fn is_zero(&self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// The natural log, or `None` for zero.
    pub fn ln(&self) -> Option<f64> {
        if self.is_zero() {
            None
        } else {
            Some(self.0)
        }
    }

    /// The natural log with zero mapped to `-inf`.
    pub fn ln_or_neg_inf(&self) -> f64 {
        self.0
    }

    /// Converts back to a float; may be `inf` or `0.0`.
    pub fn to_f64(&self) -> f64 {
        self.0.exp()
    }

    /// `2^k`.
    pub fn pow2(k: f64) -> Self {
        LogMagnitude(k * std::f64::consts::LN_2)
    }

    pub fn powi(self, k: u64) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        LogMagnitude(self.0 * k as f64)
    }

    pub fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        LogMagnitude(self.0 * p)
    }

    /// `n!`.
    pub fn factorial(n: u64) -> Self {
        LogMagnitude(ln_factorial(n))
    }

    /// `self + other`, via log-sum-exp.
    pub fn add(self, other: Self) -> Self {
        let (hi, lo) = if self.0 >= other.0 { (self.0, other.0) } else { (other.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogMagnitude(hi);
        }
        if hi == f64::INFINITY {
            return LogMagnitude(hi);
        }
        LogMagnitude(hi + (lo - hi).exp().ln_1p())
    }

    /// `self - other` when `self >= other`.
    pub fn checked_sub(self, other: Self) -> Option<Self> {
        match self.0.partial_cmp(&other.0)? {
            Ordering::Less => None,
            Ordering::Equal => Some(Self::ZERO),
            Ordering::Greater => {
                if other.is_zero() {
                    Some(self)
                } else {
                    Some(LogMagnitude(self.0 + (-(other.0 - self.0).exp()).ln_1p()))
                }
            }
        }
    }

    /// `max(self - other, 0)`.
    pub fn saturating_sub(self, other: Self) -> Self {
        self.checked_sub(other).unwrap_or(Self::ZERO)
    }

    pub fn max(self, other: Self) -> Self {
        if self.0 >= other.0 {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self.0 <= other.0 {
            self
        } else {
            other
        }
    }
}

impl Mul for LogMagnitude {
    type Output = LogMagnitude;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        LogMagnitude(self.0 + rhs.0)
    }
}

impl Div for LogMagnitude {
    type Output = LogMagnitude;

    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "division of a magnitude by zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        LogMagnitude(self.0 - rhs.0)
    }
}

impl PartialOrd for LogMagnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Sum for LogMagnitude {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let terms: Vec<f64> = iter.map(|m| m.0).collect();
        let hi = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi.is_infinite() {
            return LogMagnitude(hi);
        }
        let s: f64 = terms.iter().map(|&t| (t - hi).exp()).sum();
        LogMagnitude(hi + s.ln())
    }
}

impl fmt::Debug for LogMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "LogMagnitude(0)")
        } else {
            write!(f, "LogMagnitude(e^{})", self.0)
        }
    }
}

impl fmt::Display for LogMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ln() {
            None => write!(f, "zero"),
            Some(l) => write!(f, "{l:?}"),
        }
    }
}

// Serialized as the log value, with `null` for zero.
impl Serialize for LogMagnitude {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.ln().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogMagnitude {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map_or(Self::ZERO, LogMagnitude))
    }
}

const TABLE_LEN: usize = 2048;

fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..TABLE_LEN {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`: tabulated below 2048, Stirling series above (error < 1e-16 relative).
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return factorial_table()[n as usize];
    }
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln Γ(x) = (x - 1/2) ln x - x + ln(2π)/2 + 1/(12x) - 1/(360x^3) + 1/(1260x^5)
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln(top! / (top - count)!)`, the falling factorial `top (top-1) ... (top-count+1)`.
pub fn ln_falling(top: u64, count: u64) -> f64 {
    assert!(count <= top, "falling factorial with count > top");
    if count == 0 {
        return 0.0;
    }
    if count <= 32 {
        return ((top - count + 1)..=top).map(|k| (k as f64).ln()).sum();
    }
    ln_factorial(top) - ln_factorial(top - count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirling_matches_table_at_the_seam() {
        let direct: f64 = (1..=3000u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(3000) - direct).abs() < 1e-9 * direct);
        let direct: f64 = (1..=2048u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(2048) - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn sum_and_add_agree() {
        let a = LogMagnitude::from_value(3.0);
        let b = LogMagnitude::from_value(4.0);
        assert!((a.add(b).to_f64() - 7.0).abs() < 1e-12);
        let s: LogMagnitude = [a, b, LogMagnitude::ZERO].into_iter().sum();
        assert!((s.to_f64() - 7.0).abs() < 1e-12);
        let empty: LogMagnitude = std::iter::empty().sum();
        assert!(empty.is_zero());
    }

    #[test]
    fn huge_products_do_not_overflow() {
        let big = LogMagnitude::factorial(100_000);
        let pow = LogMagnitude::pow2(1e6);
        assert!(big * pow > pow);
        assert!((big * pow / big).ln().unwrap() - pow.ln().unwrap() < 1e-6);
    }

    #[test]
    fn subtraction() {
        let a = LogMagnitude::from_value(5.0);
        let b = LogMagnitude::from_value(2.0);
        assert!((a.checked_sub(b).unwrap().to_f64() - 3.0).abs() < 1e-12);
        assert!(b.checked_sub(a).is_none());
        assert!(a.checked_sub(a).unwrap().is_zero());
        assert!(b.saturating_sub(a).is_zero());
    }

    #[test]
    fn zero_behaviour() {
        let z = LogMagnitude::ZERO;
        assert!(z.is_zero());
        assert_eq!(z.ln(), None);
        assert!((z * LogMagnitude::factorial(10)).is_zero());
        assert!(z < LogMagnitude::from_value(1e-300));
        assert_eq!(serde_json::to_string(&z).unwrap(), "null");
    }

    #[test]
    fn falling_factorial() {
        assert!((ln_falling(5, 2) - 20f64.ln()).abs() < 1e-14);
        assert_eq!(ln_falling(7, 0), 0.0);
        let big = ln_falling(114_000, 6815);
        assert!((big - (ln_factorial(114_000) - ln_factorial(114_000 - 6815))).abs() < 1e-6);
    }
}
