//! Plain-text coefficient files.
//!
//! ```text
//! #taylor N=5            or   #operator m=3 d=4
//! #any further comment lines are kept as metadata
//! 3,1/2,0
//! 5,-1,2.5
//! ```
//!
//! Data lines are `index,re,im`; values are decimals or exact `p/q`.
//! Omitted indices are zero.

use std::fmt::Write as _;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{self, Real};

use super::{PolynomialOperator, TaylorPolynomial};

#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientFile<T: Real> {
    Taylor(TaylorPolynomial<T>),
    Operator(PolynomialOperator<T>),
}

fn write_line<T: Real>(out: &mut String, i: usize, c: &Complex<T>) {
    let _ = writeln!(out, "{},{},{}", i, c.re.to_literal(), c.im.to_literal());
}

fn write_metadata(out: &mut String, metadata: &[String]) {
    for line in metadata {
        let _ = writeln!(out, "#{}", line.trim_start_matches('#'));
    }
}

pub fn write_taylor<T: Real>(f: &TaylorPolynomial<T>, metadata: &[String]) -> String {
    let mut out = format!("#taylor N={}\n", f.truncation_degree());
    write_metadata(&mut out, metadata);
    for (i, c) in f.terms() {
        write_line(&mut out, i, c);
    }
    out
}

pub fn write_operator<T: Real>(p: &PolynomialOperator<T>, metadata: &[String]) -> String {
    let mut out = format!("#operator m={} d={}\n", p.valence(), p.degree());
    write_metadata(&mut out, metadata);
    for (j, c) in p.terms() {
        write_line(&mut out, j, c);
    }
    out
}

fn header_value(fields: &[&str], key: &str, line: usize) -> Result<usize> {
    fields
        .iter()
        .find_map(|f| f.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .ok_or_else(|| Error::Parse { line, msg: format!("missing `{key}=` in header") })?
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad `{key}` value") })
}

/// Parses a coefficient file, returning the value and its metadata lines
/// (without the leading `#`).
pub fn parse_coefficients<T: Real>(text: &str) -> Result<(CoefficientFile<T>, Vec<String>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty file".into() })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    enum Kind {
        Taylor(usize),
        Operator(usize, usize),
    }
    let kind = match fields.first().copied() {
        Some("#taylor") => Kind::Taylor(header_value(&fields, "N", hline)?),
        Some("#operator") => {
            let m = header_value(&fields, "m", hline)?;
            let d = header_value(&fields, "d", hline)?;
            if d < m {
                return Err(Error::Parse { line: hline, msg: "degree below valence".into() });
            }
            Kind::Operator(m, d)
        }
        _ => return Err(Error::Parse { line: hline, msg: "expected `#taylor` or `#operator` header".into() }),
    };
    let top = match kind {
        Kind::Taylor(n) => n,
        Kind::Operator(_, d) => d,
    };
    let mut coeffs: Vec<Option<Complex<T>>> = vec![None; top + 1];
    let mut metadata = Vec::new();
    for (ln, line) in lines {
        if let Some(meta) = line.strip_prefix('#') {
            metadata.push(meta.to_string());
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse { line: ln, msg: "expected `index,re,im`".into() });
        }
        let idx: usize = parts[0].parse().map_err(|_| Error::Parse { line: ln, msg: "bad index".into() })?;
        let re = T::parse_literal(parts[1]).map_err(|e| Error::Parse { line: ln, msg: e.to_string() })?;
        let im = T::parse_literal(parts[2]).map_err(|e| Error::Parse { line: ln, msg: e.to_string() })?;
        let slot = coeffs
            .get_mut(idx)
            .ok_or_else(|| Error::Parse { line: ln, msg: format!("index {idx} beyond header bound {top}") })?;
        if slot.is_some() {
            return Err(Error::Parse { line: ln, msg: format!("duplicate index {idx}") });
        }
        *slot = Some(Complex::new(re, im));
    }
    let dense: Vec<Complex<T>> = coeffs.into_iter().map(|c| c.unwrap_or_else(Complex::zero)).collect();
    let value = match kind {
        Kind::Taylor(_) => CoefficientFile::Taylor(TaylorPolynomial::new(dense)),
        Kind::Operator(m, _) => {
            if dense[..m].iter().any(|c| !scalar::is_zero(c)) {
                return Err(Error::Parse { line: hline, msg: "coefficient below valence".into() });
            }
            CoefficientFile::Operator(PolynomialOperator::new(m, dense[m..].to_vec())?)
        }
    };
    Ok((value, metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ExactOperator, ExactPoly};
    use num_rational::BigRational;
    use proptest::prelude::*;

    #[test]
    fn parses_operator_file() {
        let text = "#operator m=2 d=3\n#note family F1\n2,1/4,0\n3,1,0\n";
        let (v, meta) = parse_coefficients::<BigRational>(text).unwrap();
        let CoefficientFile::Operator(p) = v else { panic!("expected operator") };
        assert_eq!((p.valence(), p.degree()), (2, 3));
        assert_eq!(p.coeff(2), scalar::from_rational(&BigRational::new(1.into(), 4.into())));
        assert_eq!(meta, vec!["note family F1".to_string()]);
        assert_eq!(write_operator(&p, &meta), text);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_coefficients::<f64>("").is_err());
        assert!(parse_coefficients::<f64>("#taylor\n0,1,0").is_err());
        assert!(parse_coefficients::<f64>("#taylor N=1\n2,1,0").is_err());
        assert!(parse_coefficients::<f64>("#taylor N=1\n0,1,0\n0,2,0").is_err());
        assert!(parse_coefficients::<f64>("#taylor N=1\n0,1").is_err());
        assert!(parse_coefficients::<f64>("#operator m=2 d=3\n1,1,0\n3,1,0").is_err());
        assert!(parse_coefficients::<f64>("#operator m=2 d=3\n2,1,0").is_err());
        assert!(parse_coefficients::<f64>("#matrix N=1").is_err());
    }

    #[test]
    fn decimal_input_is_exact_in_exact_mode() {
        let (v, _) = parse_coefficients::<BigRational>("#taylor N=0\n0,0.1,-2.5e-1").unwrap();
        let CoefficientFile::Taylor(f) = v else { panic!() };
        assert_eq!(f.coeff(0).re, BigRational::new(1.into(), 10.into()));
        assert_eq!(f.coeff(0).im, BigRational::new((-1).into(), 4.into()));
    }

    proptest! {
        #[test]
        fn exact_round_trip(coeffs in prop::collection::vec((-1000i64..1000, 1i64..50, -10i64..10), 1..15)) {
            let f: ExactPoly = TaylorPolynomial::new(coeffs.iter().map(|&(p, q, im)| Complex::new(
                BigRational::new(p.into(), q.into()), BigRational::from_integer(im.into()))).collect());
            let text = write_taylor(&f, &["inverse n=1 k=2".into()]);
            let (back, meta) = parse_coefficients::<BigRational>(&text).unwrap();
            prop_assert_eq!(back, CoefficientFile::Taylor(f.clone()));
            prop_assert_eq!(meta.len(), 1);
            if let Ok(p) = ExactOperator::from_dense(f.coeffs()) {
                let (back, _) = parse_coefficients::<BigRational>(&write_operator(&p, &[])).unwrap();
                prop_assert_eq!(back, CoefficientFile::Operator(p));
            }
        }

        #[test]
        fn float_round_trip_is_bit_exact(coeffs in prop::collection::vec((any::<f64>(), -1e300..1e300f64), 1..15)) {
            prop_assume!(coeffs.iter().all(|(a, _)| a.is_finite()));
            let f = TaylorPolynomial::new(coeffs.iter().map(|&(a, b)| Complex::new(a, b)).collect());
            let (back, _) = parse_coefficients::<f64>(&write_taylor(&f, &[])).unwrap();
            let CoefficientFile::Taylor(g) = back else { panic!() };
            for (x, y) in f.coeffs().iter().zip(g.coeffs()) {
                prop_assert_eq!(x.re.to_bits() == y.re.to_bits() || (x.re == 0.0 && y.re == 0.0), true);
                prop_assert_eq!(x.im.to_bits() == y.im.to_bits() || (x.im == 0.0 && y.im == 0.0), true);
            }
        }
    }
}
