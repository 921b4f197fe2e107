//! Scalar fields used by every kernel in the crate.
//!
//! All polynomial and operator types are generic over a real field `T` and
//! store complex coefficients as [`Complex<T>`]. Two families of `T` exist:
//!
//! * exact: [`BigRational`], used for identity-level checks where equality
//!   must hold with zero tolerance;
//! * floating: `f64` and `f32`, used for growth and decay sweeps, escorted by
//!   [`LogMagnitude`] so that large intermediate magnitudes never overflow.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::logmag::{ln_falling, LogMagnitude};

/// Real scalar field underlying the complex coefficients.
pub trait Real:
    Clone + fmt::Debug + fmt::Display + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;
    /// Short mode name used in reports (`exact`, `f64`, `f32`).
    const MODE: &'static str;

    fn from_i64(v: i64) -> Self;

    fn from_rational(q: &BigRational) -> Self;

    /// Exact conversion for rationals, nearest value for floats.
    /// `None` for non-finite input.
    fn from_f64(v: f64) -> Option<Self>;

    /// Nearest `f64`; may overflow to `inf` or underflow to `0`.
    fn to_f64(&self) -> f64;

    /// The exact rational value; `None` for non-finite floats.
    fn to_rational(&self) -> Option<BigRational>;

    /// `ln |self|`, `-inf` for zero. Never overflows.
    fn ln_abs(&self) -> f64;

    /// `self * top! / (top - count)!`.
    fn mul_falling(&self, top: u64, count: u64) -> Self;

    /// `self * (top - count)! / top!`.
    fn div_falling(&self, top: u64, count: u64) -> Self;

    /// Unit roundoff of the arithmetic; zero for exact fields.
    fn unit_roundoff() -> f64;

    /// Parses `p/q`, integers and decimals (`-1.25e-3`).
    fn parse_literal(s: &str) -> Result<Self>;

    /// Inverse of [`Real::parse_literal`]: exact for rationals, shortest
    /// round-trip representation for floats.
    fn to_literal(&self) -> String;

    /// `ln sqrt(re^2 + im^2)`.
    fn ln_hypot(re: &Self, im: &Self) -> f64 {
        if im.is_zero() {
            return re.ln_abs();
        }
        if re.is_zero() {
            return im.ln_abs();
        }
        let (a, b) = (re.ln_abs(), im.ln_abs());
        let hi = a.max(b);
        hi + 0.5 * (2.0 * (a.min(b) - hi)).exp().ln_1p()
    }
}

/// Parses a decimal or `p/q` literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Literal(s.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let mut q = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        q = -q;
    }
    Ok(q)
}

/// `ln |n|` for arbitrarily large integers.
pub fn ln_bigint(n: &BigInt) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits < 1000 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n.abs() >> shift).to_f64().expect("64-bit mantissa fits f64");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn falling_product(top: u64, count: u64) -> BigInt {
    assert!(count <= top, "falling factorial with count > top");
    let mut acc = BigInt::one();
    // Multiply in u64 chunks to cut the number of bignum operations.
    let mut chunk: u64 = 1;
    for k in (top - count + 1)..=top {
        match chunk.checked_mul(k) {
            Some(c) => chunk = c,
            None => {
                acc *= chunk;
                chunk = k;
            }
        }
    }
    acc * chunk
}

impl Real for BigRational {
    const EXACT: bool = true;
    const MODE: &'static str = "exact";

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        ln_bigint(self.numer()) - ln_bigint(self.denom())
    }

    fn mul_falling(&self, top: u64, count: u64) -> Self {
        if count == 0 || self.is_zero() {
            return self.clone();
        }
        self * BigRational::from_integer(falling_product(top, count))
    }

    fn div_falling(&self, top: u64, count: u64) -> Self {
        if count == 0 || self.is_zero() {
            return self.clone();
        }
        self / BigRational::from_integer(falling_product(top, count))
    }

    fn unit_roundoff() -> f64 {
        0.0
    }

    fn parse_literal(s: &str) -> Result<Self> {
        parse_rational(s)
    }

    fn to_literal(&self) -> String {
        self.to_string()
    }

    fn ln_hypot(re: &Self, im: &Self) -> f64 {
        if im.is_zero() {
            return re.ln_abs();
        }
        if re.is_zero() {
            return im.ln_abs();
        }
        0.5 * (re * re + im * im).ln_abs()
    }
}

macro_rules! impl_float_real {
    ($t:ty, $mode:literal) => {
        impl Real for $t {
            const EXACT: bool = false;
            const MODE: &'static str = $mode;

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn from_rational(q: &BigRational) -> Self {
                ToPrimitive::to_f64(q).unwrap_or(f64::NAN) as $t
            }

            fn from_f64(v: f64) -> Option<Self> {
                v.is_finite().then_some(v as $t)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_rational(&self) -> Option<BigRational> {
                BigRational::from_float(*self)
            }

            fn ln_abs(&self) -> f64 {
                (*self as f64).abs().ln()
            }

            fn mul_falling(&self, top: u64, count: u64) -> Self {
                if count == 0 || *self == 0.0 {
                    return *self;
                }
                let lf = ln_falling(top, count);
                if lf < 600.0 && count <= 64 {
                    let prod: f64 = ((top - count + 1)..=top).map(|k| k as f64).product();
                    return ((*self as f64) * prod) as $t;
                }
                let l = (*self as f64).abs().ln() + lf;
                (self.signum() as f64 * l.exp()) as $t
            }

            fn div_falling(&self, top: u64, count: u64) -> Self {
                if count == 0 || *self == 0.0 {
                    return *self;
                }
                let lf = ln_falling(top, count);
                if lf < 600.0 && count <= 64 {
                    let prod: f64 = ((top - count + 1)..=top).map(|k| k as f64).product();
                    return ((*self as f64) / prod) as $t;
                }
                let l = (*self as f64).abs().ln() - lf;
                (self.signum() as f64 * l.exp()) as $t
            }

            fn unit_roundoff() -> f64 {
                (<$t>::EPSILON / 2.0) as f64
            }

            fn parse_literal(s: &str) -> Result<Self> {
                let s = s.trim();
                if s.contains('/') {
                    return Ok(Self::from_rational(&parse_rational(s)?));
                }
                s.parse::<$t>().map_err(|_| Error::Literal(s.to_string()))
            }

            fn to_literal(&self) -> String {
                format!("{:?}", self)
            }

            fn ln_hypot(re: &Self, im: &Self) -> f64 {
                (*re as f64).hypot(*im as f64).ln()
            }
        }
    };
}

impl_float_real!(f64, "f64");
impl_float_real!(f32, "f32");

/// `ln |z|`, `-inf` for zero.
pub fn ln_modulus<T: Real>(z: &Complex<T>) -> f64 {
    T::ln_hypot(&z.re, &z.im)
}

/// `|z|` as a log-domain magnitude.
pub fn modulus<T: Real>(z: &Complex<T>) -> LogMagnitude {
    LogMagnitude::from_ln(ln_modulus(z))
}

pub fn is_zero<T: Real>(z: &Complex<T>) -> bool {
    z.re.is_zero() && z.im.is_zero()
}

pub fn from_i64<T: Real>(v: i64) -> Complex<T> {
    Complex::new(T::from_i64(v), T::zero())
}

pub fn from_rational<T: Real>(q: &BigRational) -> Complex<T> {
    Complex::new(T::from_rational(q), T::zero())
}

pub fn convert<S: Real, T: Real>(z: &Complex<S>) -> Complex<T> {
    if S::EXACT || T::EXACT {
        let part = |x: &S| x.to_rational().map_or_else(T::zero, |q| T::from_rational(&q));
        return Complex::new(part(&z.re), part(&z.im));
    }
    Complex::new(
        T::from_f64(z.re.to_f64()).unwrap_or_else(T::zero),
        T::from_f64(z.im.to_f64()).unwrap_or_else(T::zero),
    )
}

/// A rational within a few ulps of `sign * e^ln`, built without passing
/// through an overflowing or underflowing `f64`.
pub fn rational_from_ln(ln: f64, negative: bool) -> BigRational {
    if ln == f64::NEG_INFINITY {
        return BigRational::zero();
    }
    let k = (ln / std::f64::consts::LN_2).floor();
    let mantissa = (ln - k * std::f64::consts::LN_2).exp();
    let mut q = BigRational::from_float(mantissa).expect("finite mantissa");
    let two = BigRational::from_integer(BigInt::from(2));
    let p = num_traits::pow(two, k.abs() as usize);
    q = if k >= 0.0 { q * p } else { q / p };
    if negative {
        -q
    } else {
        q
    }
}

/// `z * top! / (top - count)!`, applied to both parts.
pub fn mul_falling<T: Real>(z: &Complex<T>, top: u64, count: u64) -> Complex<T> {
    Complex::new(z.re.mul_falling(top, count), z.im.mul_falling(top, count))
}

/// `c * a * top! / (top - count)!`. Floating modes route huge or tiny
/// intermediates through the log domain so that a representable result is
/// never lost to overflow or underflow of a partial product.
pub fn mul_pair_falling<T: Real>(c: &Complex<T>, a: &Complex<T>, top: u64, count: u64) -> Complex<T> {
    if T::EXACT {
        return mul_falling(&(c.clone() * a.clone()), top, count);
    }
    let prod = c.clone() * a.clone();
    let (lc, la) = (ln_modulus(c), ln_modulus(a));
    let lf = ln_falling(top, count);
    let target = lc + la + lf;
    let lp = ln_modulus(&prod);
    // the direct route is safe when the product kept its magnitude and the
    // scaled result stays well inside the exponent range
    if !is_zero(&prod) && (lp - (lc + la)).abs() < 1e-6 && target.abs() < 600.0 && lf < 600.0 {
        return mul_falling(&prod, top, count);
    }
    if lc == f64::NEG_INFINITY || la == f64::NEG_INFINITY {
        return Complex::new(T::zero(), T::zero());
    }
    let unit = scaled_c64(c, lc) * scaled_c64(a, la);
    let mag = target.exp();
    let part = |x: f64| T::from_f64(x * mag).unwrap_or_else(|| T::from_f64(x.signum() * f64::MAX).expect("finite"));
    Complex::new(part(unit.re), part(unit.im))
}

/// `z * (top - count)! / top!`, applied to both parts.
pub fn div_falling<T: Real>(z: &Complex<T>, top: u64, count: u64) -> Complex<T> {
    Complex::new(z.re.div_falling(top, count), z.im.div_falling(top, count))
}

/// `z * e^{-shift}` as a double-precision complex, without intermediate
/// overflow. Parts far below `e^{shift}` flush to zero.
pub fn scaled_c64<T: Real>(z: &Complex<T>, shift: f64) -> Complex<f64> {
    let part = |x: &T| {
        if x.is_zero() {
            0.0
        } else {
            let s = if x.is_negative() { -1.0 } else { 1.0 };
            s * (x.ln_abs() - shift).exp()
        }
    };
    Complex::new(part(&z.re), part(&z.im))
}

/// Nearest double-precision value of `z` (may overflow).
pub fn to_c64<T: Real>(z: &Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

/// Parses a complex literal `re` or `re:im`.
pub fn parse_complex<T: Real>(s: &str) -> Result<Complex<T>> {
    match s.split_once(':') {
        Some((re, im)) => Ok(Complex::new(T::parse_literal(re)?, T::parse_literal(im)?)),
        None => Ok(Complex::new(T::parse_literal(s)?, T::zero())),
    }
}

/// Formats a complex value as `re` when real, `re:im` otherwise.
pub fn format_complex<T: Real>(z: &Complex<T>) -> String {
    if z.im.is_zero() {
        z.re.to_literal()
    } else {
        format!("{}:{}", z.re.to_literal(), z.im.to_literal())
    }
}
