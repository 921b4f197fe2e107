//! Lacunary index selection, the subspace `M0` of functions supported on the
//! selected valences, and decay audits for `P_{n_k}(D)` on `M0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logmag::{ln_falling, LogMagnitude};
use crate::scalar::{self, Real};
use crate::sequences::OperatorSequence;
use crate::series::TaylorPolynomial;

/// Default cap on candidate indices.
pub const DEFAULT_INDEX_CAP: u64 = 1_000_000;

/// Relative guard band for log-domain strict inequalities.
const GUARD: f64 = 1e-12;

fn strictly_less(lhs: f64, rhs: f64) -> bool {
    rhs - lhs > GUARD * lhs.abs().max(rhs.abs()).max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisEntry {
    pub n: u64,
    pub valence: u64,
    pub degree: u64,
    /// `ln A = ln sum_s |c_{n,s}|`.
    pub ln_a: f64,
}

/// Selected indices `n_1 < n_2 < ...` with their valences, degrees and
/// coefficient sums.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LacunaryBasis {
    pub family: String,
    pub entries: Vec<BasisEntry>,
}

fn entry(seq: &OperatorSequence, n: u64) -> Result<BasisEntry> {
    let (valence, degree) = seq.valence_degree(n)?;
    Ok(BasisEntry { n, valence, degree, ln_a: seq.ln_coeff_abs_sum(n)? })
}

/// `ln A_k + d(n_k)`, with `ln A_k` clamped at zero so that the recursion
/// implies the pairwise inequality for every later index.
fn recursion_lhs(e: &BasisEntry) -> f64 {
    e.ln_a.max(0.0) + e.degree as f64
}

fn recursion_rhs(m: u64) -> f64 {
    let m = m as f64;
    m * std::f64::consts::LN_2 / m.ln()
}

/// Whether `next` may follow `prev` in a selection.
pub fn admissible(prev: &BasisEntry, next_valence: u64) -> bool {
    next_valence >= 3 && next_valence > prev.valence && strictly_less(recursion_lhs(prev), recursion_rhs(next_valence))
}

impl LacunaryBasis {
    /// Builds a basis from given indices without checking any inequality.
    pub fn from_indices(seq: &OperatorSequence, indices: &[u64]) -> Result<Self> {
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("indices must be strictly increasing".into()));
        }
        let entries = indices.iter().map(|&n| entry(seq, n)).collect::<Result<_>>()?;
        Ok(LacunaryBasis { family: seq.tag().to_string(), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.n).collect()
    }

    pub fn valences(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.valence).collect()
    }

    /// CSV `k,n_k,m(n_k),d(n_k),logA_k` with `k` starting at 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n_k,m(n_k),d(n_k),logA_k\n");
        for (k, e) in self.entries.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{:?}", k + 1, e.n, e.valence, e.degree, e.ln_a);
        }
        out
    }
}

/// Selects `count` indices: `n_1` is the first index `>= n_start` with
/// valence at least 3, and each `n_{k+1}` is the least index after `n_k`
/// with `max(ln A_k, 0) + d(n_k) < m ln 2 / ln m`, `m = m(n_{k+1}) > m(n_k)`.
pub fn select_indices(seq: &OperatorSequence, count: usize, n_start: u64, n_cap: u64) -> Result<LacunaryBasis> {
    if count < 2 {
        return Err(Error::InvalidParameter("need at least two indices".into()));
    }
    let cap = seq.last_index().map_or(n_cap, |l| l.min(n_cap));
    let start = n_start.max(seq.first_index());
    let mut n = start;
    let first = loop {
        if n > cap {
            return Err(Error::CapExhausted {
                last_index: n.saturating_sub(1),
                reason: "no index with valence >= 3".into(),
            });
        }
        let (m, _) = seq.valence_degree(n)?;
        if m >= 3 {
            break entry(seq, n)?;
        }
        n += 1;
    };
    let mut entries = vec![first];
    while entries.len() < count {
        let prev = entries.last().expect("nonempty");
        let mut n = prev.n + 1;
        loop {
            if n > cap {
                return Err(Error::CapExhausted {
                    last_index: prev.n,
                    reason: format!(
                        "no index in {}..={cap} satisfies the recursion after n={} (step {})",
                        prev.n + 1,
                        prev.n,
                        entries.len() + 1
                    ),
                });
            }
            let (m, _) = seq.valence_degree(n)?;
            if admissible(prev, m) {
                break;
            }
            n += 1;
        }
        entries.push(entry(seq, n)?);
    }
    Ok(LacunaryBasis { family: seq.tag().to_string(), entries })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairMargin {
    pub k: usize,
    pub j: usize,
    /// `m(n_j) ln 2 - (ln A_k + d(n_k) ln m(n_j))`.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IneqReport {
    pub pairs: Vec<PairMargin>,
}

impl IneqReport {
    pub fn holds(&self) -> bool {
        self.pairs.iter().all(|p| p.holds)
    }

    /// First violating pair `(k, j)`, 1-based.
    pub fn first_violation(&self) -> Option<(usize, usize)> {
        self.pairs.iter().find(|p| !p.holds).map(|p| (p.k, p.j))
    }
}

/// Checks `A_k m(n_j)^{d(n_k)} < 2^{m(n_j)}` for all pairs `k < j`.
pub fn verify_ineq_ak(basis: &LacunaryBasis) -> IneqReport {
    let e = &basis.entries;
    let pairs: Vec<(usize, usize)> = (0..e.len()).flat_map(|k| (k + 1..e.len()).map(move |j| (k, j))).collect();
    let pairs = pairs
        .par_iter()
        .map(|&(k, j)| {
            let mj = e[j].valence as f64;
            let lhs = e[k].ln_a + e[k].degree as f64 * mj.ln();
            let rhs = mj * std::f64::consts::LN_2;
            PairMargin { k: k + 1, j: j + 1, margin: rhs - lhs, holds: strictly_less(lhs, rhs) }
        })
        .collect();
    IneqReport { pairs }
}

/// `sum_j a_j z^{m(n_j)}` over the first `a.len()` basis valences.
pub fn m0_member<T: Real>(basis: &LacunaryBasis, a: &[Complex<T>]) -> Result<TaylorPolynomial<T>> {
    if a.len() > basis.len() {
        return Err(Error::InvalidParameter(format!("{} coefficients for a basis of {}", a.len(), basis.len())));
    }
    let top = a.len().checked_sub(1).map_or(0, |i| basis.entries[i].valence as usize);
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); top + 1];
    for (e, c) in basis.entries.iter().zip(a) {
        coeffs[e.valence as usize] = c.clone();
    }
    Ok(TaylorPolynomial::new(coeffs))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub k: usize,
    pub n: u64,
    /// `||P_{n_k}(D) f||_r`.
    pub measured: LogMagnitude,
    /// `sum_{j >= k} |a_j| (2r)^{m(n_j)}`.
    pub bound: LogMagnitude,
    /// Exact majorant of the `j = k` term plus the tail
    /// `sum_{j > k} |a_j| (2r)^{m(n_j)}` (times `r^{-d(n_k)}` when `r < 1`).
    pub corrected_bound: LogMagnitude,
    pub within_bound: bool,
    pub within_corrected_bound: bool,
}

/// Measures `||P_{n_k}(D) f||_r` for every basis step and compares it with
/// the geometric bound. The application runs in the log domain on the
/// sparse support of `f`, so valences in the hundreds of thousands are fine.
pub fn decay_report<T: Real>(
    seq: &OperatorSequence,
    basis: &LacunaryBasis,
    f: &TaylorPolynomial<T>,
    r: f64,
) -> Result<Vec<DecayRow>> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let mut a: Vec<Option<(f64, Complex<f64>)>> = vec![None; basis.len()];
    for (idx, c) in f.terms() {
        let slot = basis
            .entries
            .iter()
            .position(|e| e.valence as usize == idx)
            .ok_or_else(|| Error::precondition(format!("coefficient of z^{idx} lies outside the lacunary support")))?;
        let ln = scalar::ln_modulus(c);
        a[slot] = Some((ln, scalar::scaled_c64(c, ln)));
    }
    let ln_r = r.ln();
    let ln_2r = (2.0 * r).ln();
    let rows = (0..basis.len())
        .into_par_iter()
        .map(|k| {
            let e = &basis.entries[k];
            let band = seq.band_log(e.n)?;
            // output power -> terms (ln, unit)
            let mut out: BTreeMap<u64, Vec<(f64, Complex<f64>)>> = BTreeMap::new();
            let mut diag = LogMagnitude::ZERO;
            for (j, aj) in a.iter().enumerate().skip(k) {
                let Some((la, ua)) = aj else { continue };
                let mj = basis.entries[j].valence;
                for (i, (lc, uc)) in band.iter().enumerate() {
                    let s = e.valence + i as u64;
                    if s > mj || !lc.is_finite() {
                        continue;
                    }
                    let ln = la + lc + ln_falling(mj, s);
                    out.entry(mj - s).or_default().push((ln, ua * uc));
                    if j == k {
                        diag = diag.add(LogMagnitude::from_ln(ln + (mj - s) as f64 * ln_r));
                    }
                }
            }
            let measured: LogMagnitude = out
                .iter()
                .map(|(&p, terms)| {
                    let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
                    let s: Complex<f64> = terms.iter().map(|(l, u)| u * (l - top).exp()).sum();
                    LogMagnitude::from_ln(top + s.norm().ln() + p as f64 * ln_r)
                })
                .sum();
            let geometric = |from: usize| -> LogMagnitude {
                a.iter()
                    .enumerate()
                    .skip(from)
                    .filter_map(|(j, aj)| aj.map(|(la, _)| LogMagnitude::from_ln(la + basis.entries[j].valence as f64 * ln_2r)))
                    .sum()
            };
            let bound = geometric(k);
            let tail_factor = if r < 1.0 { LogMagnitude::from_ln(-(e.degree as f64) * ln_r) } else { LogMagnitude::ONE };
            let corrected_bound = diag.add(geometric(k + 1) * tail_factor);
            let slack = |b: LogMagnitude| measured.ln_or_neg_inf() <= b.ln_or_neg_inf() + 1e-12 * (1.0 + b.ln_or_neg_inf().abs());
            Ok(DecayRow {
                k: k + 1,
                n: e.n,
                measured,
                bound,
                corrected_bound,
                within_bound: measured.is_zero() || slack(bound),
                within_corrected_bound: measured.is_zero() || slack(corrected_bound),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}

/// CSV `k,measured_log,bound_log,corrected_bound_log,within_bound`.
pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("k,measured_log,bound_log,corrected_bound_log,within_bound\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.k,
            crate::sequences::fmt_ln(r.measured.ln_or_neg_inf()),
            crate::sequences::fmt_ln(r.bound.ln_or_neg_inf()),
            crate::sequences::fmt_ln(r.corrected_bound.ln_or_neg_inf()),
            r.within_bound
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ExactOperator, ExactPoly};
    use num_rational::BigRational;

    fn f4() -> OperatorSequence {
        OperatorSequence::from_tag("F4", &Default::default()).unwrap()
    }

    #[test]
    fn unit_monomials_select_three_ten_fifty_nine() {
        let b = select_indices(&f4(), 3, 3, DEFAULT_INDEX_CAP).unwrap();
        assert_eq!(b.indices(), vec![3, 10, 59]);
        // brute-force minimality oracle
        let ok = |prev: u64, n: u64| (prev as f64) < n as f64 * 2f64.ln() / (n as f64).ln();
        assert!(!ok(3, 9) && ok(3, 10));
        assert!((11..59).all(|n| !ok(10, n)) && ok(10, 59));
    }

    #[test]
    fn hand_built_pair_violates() {
        let b = LacunaryBasis::from_indices(&f4(), &[3, 4]).unwrap();
        assert_eq!(verify_ineq_ak(&b).first_violation(), Some((1, 2)));
        let single = LacunaryBasis::from_indices(&f4(), &[3]).unwrap();
        assert!(verify_ineq_ak(&single).holds());
    }

    #[test]
    fn constant_valence_exhausts_cap() {
        let ops = (0..50).map(|_| ExactOperator::monomial(4, scalar::from_i64(1)).unwrap()).collect();
        let seq = OperatorSequence::table(1, ops).unwrap();
        assert!(matches!(select_indices(&seq, 2, 1, 1000), Err(Error::CapExhausted { .. })));
    }

    #[test]
    fn members_and_membership() {
        let b = LacunaryBasis::from_indices(&f4(), &[3, 10]).unwrap();
        let one = scalar::from_i64::<BigRational>(1);
        assert_eq!(m0_member(&b, std::slice::from_ref(&one)).unwrap(), ExactPoly::power(3));
        assert!(m0_member::<BigRational>(&b, &[]).unwrap().is_zero());
        let f = m0_member(&b, &[one.clone(), one.clone()]).unwrap();
        assert_eq!(f, &ExactPoly::power(3) + &ExactPoly::power(10));
        assert!(m0_member(&b, &[one.clone(), one.clone(), one.clone()]).is_err());
        assert!(decay_report(&f4(), &b, &ExactPoly::power(4), 1.0).is_err());
    }

    #[test]
    fn log_domain_measure_matches_exact_application() {
        let seq = OperatorSequence::from_tag("F3", &Default::default()).unwrap();
        let b = LacunaryBasis::from_indices(&seq, &[2, 5, 9, 14]).unwrap();
        let a: Vec<_> = [(1, 3), (-2, 7), (5, 1), (1, 1000)]
            .iter()
            .map(|&(p, q)| scalar::from_rational::<BigRational>(&BigRational::new(p.into(), q.into())))
            .collect();
        let f = m0_member(&b, &a).unwrap();
        for r in [0.5, 1.0, 3.0] {
            let rows = decay_report(&seq, &b, &f, r).unwrap();
            for row in &rows {
                let p: ExactOperator = seq.operator(row.n).unwrap();
                let exact = p.apply(&f).majorant_norm(r);
                let (x, y) = (exact.ln_or_neg_inf(), row.measured.ln_or_neg_inf());
                assert!((x == y) || (x - y).abs() < 1e-10 * (1.0 + x.abs()), "r={r} k={}: {x} vs {y}", row.k);
            }
        }
    }

    #[test]
    fn corrected_bound_holds_on_selected_bases() {
        for tag in ["F1", "F2", "F3", "F4"] {
            let seq = OperatorSequence::from_tag(tag, &Default::default()).unwrap();
            let b = select_indices(&seq, 3, 1, DEFAULT_INDEX_CAP).unwrap();
            assert!(verify_ineq_ak(&b).holds(), "{tag}");
            let a: Vec<Complex<f64>> = vec![Complex::new(0.3, -1.0), Complex::new(-2.0, 0.5), Complex::new(1e-3, 0.0)];
            let f = m0_member(&b, &a).unwrap();
            for r in [0.5, 1.0, 2.0] {
                for row in decay_report(&seq, &b, &f, r).unwrap() {
                    assert!(row.within_corrected_bound, "{tag} r={r} k={}", row.k);
                }
            }
        }
    }

    #[test]
    fn zero_function_decays_trivially() {
        let b = select_indices(&f4(), 3, 3, DEFAULT_INDEX_CAP).unwrap();
        let rows = decay_report(&f4(), &b, &ExactPoly::zero(0), 1.0).unwrap();
        assert!(rows.iter().all(|r| r.measured.is_zero() && r.bound.is_zero() && r.within_bound));
    }
}
