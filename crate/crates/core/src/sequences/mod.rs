//! Operator sequences `(P_n)`: built-in families, user tables, and evidence
//! for the growth properties (P), (Q), (R).

mod circle;
mod density;
mod evidence;
mod unicity;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::logmag::{ln_factorial, LogMagnitude};
use crate::scalar::{self, Real};
use crate::series::PolynomialOperator;
use crate::ExactOperator;

pub use circle::{circle_min, circle_min_log, CircleMin};
pub use density::{density_demo, DensityFit};
pub use evidence::{
    check_property_p, check_property_q, check_property_r, EvidenceReport, GrowthRule, Property, StatSeries,
    Verdict, Witness,
};
pub use unicity::{unicity_exponent, PointSource, UnicityEstimate};
pub(crate) use evidence::fmt_ln;

/// Coefficient rule `n -> c_n` for the monomial family `c_n z^n`.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientRule {
    /// `c_n = c`.
    Constant(BigRational),
    /// `c_n = b^n`.
    Geometric(BigRational),
    /// `c_n = b^{n^2}`.
    SquareDecay(BigRational),
}

impl CoefficientRule {
    fn base(&self) -> &BigRational {
        match self {
            CoefficientRule::Constant(b) | CoefficientRule::Geometric(b) | CoefficientRule::SquareDecay(b) => b,
        }
    }

    fn exponent(&self, n: u64) -> u64 {
        match self {
            CoefficientRule::Constant(_) => 1,
            CoefficientRule::Geometric(_) => n,
            CoefficientRule::SquareDecay(_) => n * n,
        }
    }

    fn exact(&self, n: u64) -> BigRational {
        num_traits::pow(self.base().clone(), self.exponent(n) as usize)
    }

    fn ln_abs(&self, n: u64) -> f64 {
        self.exponent(n) as f64 * self.base().ln_abs()
    }

    fn negative(&self, n: u64) -> bool {
        self.base().is_negative() && self.exponent(n) % 2 == 1
    }
}

/// A sequence of nonconstant polynomials `P_n`, `n >= 1`, read as operators
/// `P_n(D)`.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorSequence {
    /// `z^n / n^n + z^{n+1}` (tag `F1`).
    PowerPlusShift,
    /// `c_n z^n (1 + z)` with `c_n = n^{-n / log_b(n+1)}` (tag `F2`).
    /// `ln_base = 1` is the natural logarithm; `unit_c` forces `c_n = 1`.
    DampedPair { ln_base: f64, unit_c: bool },
    /// `z^n (z - q_n)^n`, `q_n` the diagonal enumeration of positive
    /// rationals (tag `F3`).
    NearRoot,
    /// `c_n z^n` (tag `F4`).
    Monomial(CoefficientRule),
    /// Explicit table; entry `i` is `P_{first + i}` (tag `F5`).
    Table { first: u64, ops: Vec<ExactOperator> },
}

/// `q_n = p / q` for the `n`-th pair (`n >= 1`) of the enumeration over
/// `p, q >= 1` by increasing `p + q`, ties by `p`, duplicates kept.
pub fn diagonal_rational(n: u64) -> (u64, u64) {
    assert!(n >= 1, "enumeration starts at 1");
    // diagonal s = p + q holds s - 1 entries, preceded by (s-2)(s-1)/2
    let mut s = (((8.0 * n as f64).sqrt() + 1.0) / 2.0).floor() as u64 + 1;
    while (s - 2) * (s - 1) / 2 >= n {
        s -= 1;
    }
    while (s - 1) * s / 2 < n {
        s += 1;
    }
    let p = n - (s - 2) * (s - 1) / 2;
    (p, s - p)
}

pub fn diagonal_rational_value(n: u64) -> BigRational {
    let (p, q) = diagonal_rational(n);
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn ln_binomial(n: u64, j: u64) -> f64 {
    ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j)
}

/// Coefficient as `(ln |c|, c / |c|)`; `ln = -inf` for zero.
pub type LogCoefficient = (f64, Complex<f64>);

fn positive(ln: f64) -> LogCoefficient {
    (ln, Complex::new(1.0, 0.0))
}

fn signed(ln: f64, negative: bool) -> LogCoefficient {
    (ln, Complex::new(if negative { -1.0 } else { 1.0 }, 0.0))
}

impl OperatorSequence {
    /// Builds a family from its tag and `key=value` parameters.
    ///
    /// * `F1`, `F3`: no parameters.
    /// * `F2`: `log_base` (`e` or a positive number, default `e`), `unit_c`.
    /// * `F4`: one of `c`, `geometric`, `square_decay` (rational literal);
    ///   default `c=1`.
    /// * `F5`: use [`OperatorSequence::table`].
    pub fn from_tag(tag: &str, params: &BTreeMap<String, String>) -> Result<Self> {
        let allow = |keys: &[&str]| -> Result<()> {
            match params.keys().find(|k| !keys.contains(&k.as_str())) {
                Some(k) => Err(Error::InvalidParameter(format!("family {tag} takes no parameter `{k}`"))),
                None => Ok(()),
            }
        };
        match tag {
            "F1" => {
                allow(&[])?;
                Ok(OperatorSequence::PowerPlusShift)
            }
            "F2" => {
                allow(&["log_base", "unit_c"])?;
                let ln_base = match params.get("log_base").map(String::as_str) {
                    None | Some("e") => 1.0,
                    Some(v) => {
                        let b: f64 = v.parse().map_err(|_| Error::InvalidParameter(format!("log_base={v}")))?;
                        if !(b > 0.0 && b != 1.0 && b.is_finite()) {
                            return Err(Error::InvalidParameter(format!("log_base={v}")));
                        }
                        b.ln()
                    }
                };
                let unit_c = match params.get("unit_c").map(String::as_str) {
                    None | Some("false") => false,
                    Some("true") => true,
                    Some(v) => return Err(Error::InvalidParameter(format!("unit_c={v}"))),
                };
                Ok(OperatorSequence::DampedPair { ln_base, unit_c })
            }
            "F3" => {
                allow(&[])?;
                Ok(OperatorSequence::NearRoot)
            }
            "F4" => {
                allow(&["c", "geometric", "square_decay"])?;
                if params.len() > 1 {
                    return Err(Error::InvalidParameter("F4 takes exactly one coefficient rule".into()));
                }
                let (key, value) = params
                    .iter()
                    .next()
                    .map(|(k, v)| (k.as_str(), v.as_str()))
                    .unwrap_or(("c", "1"));
                let b = scalar::parse_rational(value)?;
                if b.is_zero() {
                    return Err(Error::InvalidParameter(format!("{key}=0 gives the zero operator")));
                }
                Ok(OperatorSequence::Monomial(match key {
                    "c" => CoefficientRule::Constant(b),
                    "geometric" => CoefficientRule::Geometric(b),
                    _ => CoefficientRule::SquareDecay(b),
                }))
            }
            "F5" => Err(Error::InvalidParameter("F5 needs a table file".into())),
            _ => Err(Error::UnknownFamily(tag.to_string())),
        }
    }

    pub fn table(first: u64, ops: Vec<ExactOperator>) -> Result<Self> {
        if first == 0 || ops.is_empty() {
            return Err(Error::InvalidParameter("table needs first >= 1 and at least one operator".into()));
        }
        Ok(OperatorSequence::Table { first, ops })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            OperatorSequence::PowerPlusShift => "F1",
            OperatorSequence::DampedPair { .. } => "F2",
            OperatorSequence::NearRoot => "F3",
            OperatorSequence::Monomial(_) => "F4",
            OperatorSequence::Table { .. } => "F5",
        }
    }

    /// Largest index the sequence defines; `None` for infinite families.
    pub fn last_index(&self) -> Option<u64> {
        match self {
            OperatorSequence::Table { first, ops } => Some(first + ops.len() as u64 - 1),
            _ => None,
        }
    }

    pub fn first_index(&self) -> u64 {
        match self {
            OperatorSequence::Table { first, .. } => *first,
            _ => 1,
        }
    }

    fn check_index(&self, n: u64) -> Result<()> {
        if n < self.first_index() || self.last_index().is_some_and(|l| n > l) {
            return Err(Error::InvalidParameter(format!("index {n} outside the {} sequence", self.tag())));
        }
        Ok(())
    }

    fn table_entry(&self, n: u64) -> Option<&ExactOperator> {
        match self {
            OperatorSequence::Table { first, ops } => ops.get((n - first) as usize),
            _ => None,
        }
    }

    /// `(m(n), d(n))`.
    pub fn valence_degree(&self, n: u64) -> Result<(u64, u64)> {
        self.check_index(n)?;
        Ok(match self {
            OperatorSequence::PowerPlusShift | OperatorSequence::DampedPair { .. } => (n, n + 1),
            OperatorSequence::NearRoot => (n, 2 * n),
            OperatorSequence::Monomial(_) => (n, n),
            OperatorSequence::Table { .. } => {
                let p = self.table_entry(n).expect("index checked");
                (p.valence() as u64, p.degree() as u64)
            }
        })
    }

    /// `ln c_n` for the damped pair family.
    fn damped_ln_c(n: u64, ln_base: f64, unit_c: bool) -> f64 {
        if unit_c {
            return 0.0;
        }
        let n = n as f64;
        -n * n.ln() * ln_base / (n + 1.0).ln()
    }

    /// `q_n` for the near-root family.
    pub fn near_root_shift(n: u64) -> BigRational {
        diagonal_rational_value(n)
    }

    /// Coefficients `c_m..c_d` in log form, computed from closed forms so
    /// that no intermediate overflows.
    pub fn band_log(&self, n: u64) -> Result<Vec<LogCoefficient>> {
        self.check_index(n)?;
        Ok(match self {
            OperatorSequence::PowerPlusShift => {
                let nf = n as f64;
                vec![positive(-nf * nf.ln()), positive(0.0)]
            }
            OperatorSequence::DampedPair { ln_base, unit_c } => {
                let c = Self::damped_ln_c(n, *ln_base, *unit_c);
                vec![positive(c), positive(c)]
            }
            OperatorSequence::NearRoot => {
                let (p, q) = diagonal_rational(n);
                let ln_q = (p as f64).ln() - (q as f64).ln();
                // z^n (z - q)^n = sum_j C(n, j) (-q)^{n-j} z^{n+j}
                (0..=n).map(|j| signed(ln_binomial(n, j) + (n - j) as f64 * ln_q, (n - j) % 2 == 1)).collect()
            }
            OperatorSequence::Monomial(rule) => vec![signed(rule.ln_abs(n), rule.negative(n))],
            OperatorSequence::Table { .. } => {
                let p = self.table_entry(n).expect("index checked");
                p.band()
                    .iter()
                    .map(|c| {
                        let ln = scalar::ln_modulus(c);
                        let unit = if ln.is_finite() { scalar::scaled_c64(c, ln) } else { Complex::zero() };
                        (ln, unit)
                    })
                    .collect()
            }
        })
    }

    /// Exact rational coefficients `c_m..c_d`. The damped pair family has
    /// irrational `c_n` unless `unit_c` is set; a rational within a few ulps
    /// of the double-precision value is used instead.
    pub fn band_exact(&self, n: u64) -> Result<Vec<Complex<BigRational>>> {
        self.check_index(n)?;
        let real = |q: BigRational| Complex::new(q, BigRational::zero());
        Ok(match self {
            OperatorSequence::PowerPlusShift => {
                let nn = num_traits::pow(BigInt::from(n), n as usize);
                vec![real(BigRational::new(BigInt::one(), nn)), real(BigRational::one())]
            }
            OperatorSequence::DampedPair { ln_base, unit_c } => {
                let c = scalar::rational_from_ln(Self::damped_ln_c(n, *ln_base, *unit_c), false);
                vec![real(c.clone()), real(c)]
            }
            OperatorSequence::NearRoot => {
                let q = diagonal_rational_value(n);
                let neg_q = -q;
                let mut out = Vec::with_capacity(n as usize + 1);
                let mut binom = BigInt::one();
                let mut pows = vec![BigRational::one(); n as usize + 1];
                for i in 1..=n as usize {
                    pows[i] = &pows[i - 1] * &neg_q;
                }
                for j in 0..=n {
                    out.push(real(BigRational::from_integer(binom.clone()) * &pows[(n - j) as usize]));
                    binom = binom * BigInt::from(n - j) / BigInt::from(j + 1);
                }
                out
            }
            OperatorSequence::Monomial(rule) => vec![real(rule.exact(n))],
            OperatorSequence::Table { .. } => self.table_entry(n).expect("index checked").band().to_vec(),
        })
    }

    /// `P_n` in the scalar field `T`.
    pub fn operator<T: Real>(&self, n: u64) -> Result<PolynomialOperator<T>> {
        let (m, _) = self.valence_degree(n)?;
        let band: Vec<Complex<T>> = if T::EXACT {
            self.band_exact(n)?.iter().map(scalar::convert).collect()
        } else if let Some(p) = self.table_entry(n) {
            p.band().iter().map(scalar::convert).collect()
        } else {
            self.band_log(n)?
                .into_iter()
                .map(|(ln, u)| {
                    let mag = ln.exp();
                    let part = |x: f64| T::from_f64(x * mag).unwrap_or_else(T::zero);
                    Complex::new(part(u.re), part(u.im))
                })
                .collect()
        };
        PolynomialOperator::new(m as usize, band).map_err(|e| match e {
            Error::InvalidOperator(msg) => Error::InvalidOperator(format!(
                "{} n={n} is not representable in {} mode: {msg}",
                self.tag(),
                T::MODE
            )),
            other => other,
        })
    }

    /// `ln A_n`, `A_n = sum_j |c_{j,n}|`.
    pub fn ln_coeff_abs_sum(&self, n: u64) -> Result<f64> {
        self.check_index(n)?;
        Ok(match self {
            OperatorSequence::PowerPlusShift => {
                let nf = n as f64;
                (-nf * nf.ln()).exp().ln_1p()
            }
            OperatorSequence::DampedPair { ln_base, unit_c } => Self::damped_ln_c(n, *ln_base, *unit_c) + 2f64.ln(),
            OperatorSequence::NearRoot => {
                // |coefficients| are those of (z + q)^n
                let (p, q) = diagonal_rational(n);
                n as f64 * ((p + q) as f64 / q as f64).ln()
            }
            OperatorSequence::Monomial(rule) => rule.ln_abs(n),
            OperatorSequence::Table { .. } => self.band_log(n)?.iter().map(|&(ln, _)| LogMagnitude::from_ln(ln)).sum::<LogMagnitude>().ln_or_neg_inf(),
        })
    }

    /// `ln |P_n(z)|`, evaluated through the family's factored form where one
    /// exists so that cancellation and overflow are avoided.
    pub fn ln_abs_at(&self, n: u64, z: Complex<f64>) -> Result<f64> {
        let (m, _) = self.valence_degree(n)?;
        let nf = n as f64;
        let ln_z = z.norm().ln();
        Ok(match self {
            OperatorSequence::PowerPlusShift => {
                nf * ln_z + (z + Complex::new((-nf * nf.ln()).exp(), 0.0)).norm().ln()
            }
            OperatorSequence::DampedPair { ln_base, unit_c } => {
                Self::damped_ln_c(n, *ln_base, *unit_c) + nf * ln_z + (z + 1.0).norm().ln()
            }
            OperatorSequence::NearRoot => {
                let (p, q) = diagonal_rational(n);
                nf * ln_z + nf * (z - p as f64 / q as f64).norm().ln()
            }
            OperatorSequence::Monomial(rule) => rule.ln_abs(n) + nf * ln_z,
            OperatorSequence::Table { .. } => {
                let band = self.band_log(n)?;
                if z == Complex::zero() {
                    return Ok(if m == 0 { band[0].0 } else { f64::NEG_INFINITY });
                }
                let unit = z / z.norm();
                let top = band.iter().enumerate().map(|(i, (ln, _))| ln + i as f64 * ln_z).fold(f64::NEG_INFINITY, f64::max);
                let s: Complex<f64> = band
                    .iter()
                    .enumerate()
                    .filter(|(_, (ln, _))| ln.is_finite())
                    .map(|(i, (ln, u))| u * unit.powu(i as u32) * (ln + i as f64 * ln_z - top).exp())
                    .sum();
                top + s.norm().ln() + m as f64 * ln_z
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExactPoly;
    use crate::series::TaylorPolynomial;

    fn q(s: &str) -> BigRational {
        scalar::parse_rational(s).unwrap()
    }

    fn fam(tag: &str) -> OperatorSequence {
        OperatorSequence::from_tag(tag, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn enumeration_is_diagonal() {
        let first: Vec<_> = (1..=10).map(diagonal_rational).collect();
        assert_eq!(first, vec![(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1), (1, 4), (2, 3), (3, 2), (4, 1)]);
        assert_eq!(diagonal_rational(345), (20, 7));
        assert_eq!(diagonal_rational(458), (23, 8));
        assert_eq!(diagonal_rational(587), (26, 9));
        for n in 1..5000u64 {
            let (p, qq) = diagonal_rational(n);
            let (p2, q2) = diagonal_rational(n + 1);
            assert!(p2 + q2 > p + qq || (p2 + q2 == p + qq && p2 == p + 1));
        }
    }

    #[test]
    fn family_examples() {
        let p: ExactOperator = fam("F1").operator(2).unwrap();
        assert_eq!(p.coeff(2), Complex::new(q("1/4"), q("0")));
        assert_eq!(p.coeff(3), Complex::new(q("1"), q("0")));
        let p: ExactOperator = fam("F4").operator(5).unwrap();
        assert_eq!(p.to_polynomial(), ExactPoly::power(5));
        let p: ExactOperator = fam("F3").operator(1).unwrap();
        assert_eq!(p.to_polynomial(), TaylorPolynomial::from_real(vec![q("0"), q("-1"), q("1")]));
    }

    #[test]
    fn metadata_matches_coefficients() {
        let mut table_ops = vec![];
        for n in 1..=50usize {
            table_ops.push(ExactOperator::new(n, vec![scalar::from_i64(2), scalar::from_i64(0), scalar::from_i64(-1)]).unwrap());
        }
        let fams = vec![
            fam("F1"),
            OperatorSequence::DampedPair { ln_base: 1.0, unit_c: false },
            OperatorSequence::DampedPair { ln_base: 1.0, unit_c: true },
            fam("F3"),
            fam("F4"),
            OperatorSequence::Monomial(CoefficientRule::Geometric(q("-1/2"))),
            OperatorSequence::Monomial(CoefficientRule::SquareDecay(q("1/2"))),
            OperatorSequence::table(1, table_ops).unwrap(),
        ];
        for f in &fams {
            for n in 1..=50u64 {
                let (m, d) = f.valence_degree(n).unwrap();
                let p: ExactOperator = f.operator(n).unwrap();
                assert_eq!((p.valence() as u64, p.degree() as u64), (m, d), "{} n={n}", f.tag());
                match f.operator::<f64>(n) {
                    Ok(pf) => assert_eq!((pf.valence() as u64, pf.degree() as u64), (m, d), "{} n={n} float", f.tag()),
                    Err(_) => assert!(f.band_log(n).unwrap().iter().any(|c| c.0 < -700.0), "{} n={n}", f.tag()),
                }
                let a = f.ln_coeff_abs_sum(n).unwrap();
                let direct = p.coeff_abs_sum().ln_or_neg_inf();
                assert!((a - direct).abs() < 1e-9 * (1.0 + a.abs()), "{} n={n}: {a} vs {direct}", f.tag());
                for z in [Complex::new(-2.0, 0.0), Complex::new(0.5, 0.7), Complex::new(1.3, -0.2)] {
                    let exact = p.eval(&scalar::convert::<f64, BigRational>(&z));
                    let direct = scalar::ln_modulus(&exact);
                    let fact = f.ln_abs_at(n, z).unwrap();
                    assert!((fact - direct).abs() < 1e-8 * (1.0 + direct.abs()), "{} n={n} z={z}: {fact} vs {direct}", f.tag());
                }
            }
        }
    }

    #[test]
    fn enumeration_is_reproducible() {
        let a: Vec<_> = (1..300).map(OperatorSequence::near_root_shift).collect();
        let b: Vec<_> = (1..300).map(OperatorSequence::near_root_shift).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_tags_and_params() {
        assert!(matches!(OperatorSequence::from_tag("F9", &BTreeMap::new()), Err(Error::UnknownFamily(_))));
        let mut p = BTreeMap::new();
        p.insert("c".to_string(), "0".to_string());
        assert!(OperatorSequence::from_tag("F4", &p).is_err());
        p.insert("geometric".to_string(), "2".to_string());
        assert!(OperatorSequence::from_tag("F4", &p).is_err());
        let mut p = BTreeMap::new();
        p.insert("bogus".to_string(), "1".to_string());
        assert!(OperatorSequence::from_tag("F1", &p).is_err());
        let mut p = BTreeMap::new();
        p.insert("log_base".to_string(), "1".to_string());
        assert!(OperatorSequence::from_tag("F2", &p).is_err());
        assert!(fam("F1").valence_degree(0).is_err());
    }

    #[test]
    fn log_base_changes_constants() {
        let nat = OperatorSequence::DampedPair { ln_base: 1.0, unit_c: false };
        let ten = OperatorSequence::DampedPair { ln_base: 10f64.ln(), unit_c: false };
        let n = 20u64;
        let expect_nat = -(n as f64) * (n as f64).ln() / (21f64).ln();
        assert!((nat.band_log(n).unwrap()[0].0 - expect_nat).abs() < 1e-12);
        assert!((ten.band_log(n).unwrap()[0].0 - expect_nat * 10f64.ln()).abs() < 1e-10);
    }
}
