//! Evidence for the four hypotheses of the spaceability criterion:
//!
//! * (i) `T_n x -> 0` on polynomials (exact annihilation once the valence
//!   passes the degree),
//! * (ii) `S_n y -> 0` for the right inverses,
//! * (iii) `T_n S_n y -> y`,
//! * (iv) `T_n x -> 0` on the lacunary subspace `M_0`.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inverse::{build_f_nk, IdentityCheck, Route};
use crate::logmag::ln_factorial;
use crate::lacunary::{decay_report, m0_member, select_indices, DEFAULT_INDEX_CAP};
use crate::scalar::{self, Real};
use crate::sequences::{GrowthRule, OperatorSequence, Verdict};
use crate::series::{apply_to_exponential, PolynomialOperator, TaylorPolynomial};
use crate::{ExactOperator, ExactPoly};

/// True iff the valence of `P` exceeds the degree of `g`. A positive answer
/// is confirmed by applying `P(D)` and comparing with zero.
pub fn check_annihilation<T: Real>(p: &PolynomialOperator<T>, g: &TaylorPolynomial<T>) -> Result<bool> {
    let below = g.degree().is_none_or(|d| p.valence() > d);
    if below && !p.apply(g).is_zero() {
        return Err(Error::invariant("operator with valence above the degree did not annihilate"));
    }
    Ok(below)
}

#[derive(Clone, Debug)]
pub struct CriterionConfig {
    pub route: Route,
    pub n_range: RangeInclusive<u64>,
    /// Degrees `0..=max_degree` of the polynomial battery for (i).
    pub max_degree: usize,
    /// Monomials `z^0..z^k_max` for the polynomial route.
    pub k_max: usize,
    /// Frequencies for the exponential route.
    pub samples: Vec<Complex<f64>>,
    /// Radius for the norms in (ii) and (iii).
    pub r: f64,
    /// Extra truncation degree beyond `deg P_n` for the exponential route.
    pub truncation: usize,
    /// Number of lacunary indices selected for (iv).
    pub basis_count: usize,
    pub n_cap: u64,
    pub seed: u64,
    pub rule: GrowthRule,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig {
            route: Route::Polynomial,
            n_range: 1..=40,
            max_degree: 5,
            k_max: 3,
            samples: Vec::new(),
            r: 2.0,
            truncation: 80,
            basis_count: 4,
            n_cap: DEFAULT_INDEX_CAP,
            seed: 1,
            rule: GrowthRule::pointwise(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisRecord {
    pub hypothesis: &'static str,
    pub n: u64,
    /// Natural log of the recorded statistic, when it has one.
    pub statistic_log: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub hypothesis: &'static str,
    pub verdict: Verdict,
    pub records: Vec<HypothesisRecord>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub family: String,
    pub route: Route,
    pub hypotheses: Vec<HypothesisReport>,
    pub verdict: Verdict,
}

impl CriterionReport {
    pub fn hypothesis(&self, label: &str) -> Option<&HypothesisReport> {
        self.hypotheses.iter().find(|h| h.hypothesis == label)
    }

    /// One JSON object per (hypothesis, n), then one summary per hypothesis
    /// and an overall line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for h in &self.hypotheses {
            for rec in &h.records {
                out.push_str(&serde_json::to_string(rec).expect("record serializes"));
                out.push('\n');
            }
        }
        for h in &self.hypotheses {
            let line = serde_json::json!({"hypothesis": h.hypothesis, "verdict": h.verdict, "notes": h.notes});
            out.push_str(&line.to_string());
            out.push('\n');
        }
        let line = serde_json::json!({"family": self.family, "route": self.route, "verdict": self.verdict});
        out.push_str(&line.to_string());
        out.push('\n');
        out
    }
}

fn overall(verdicts: &[Verdict]) -> Verdict {
    if verdicts.iter().all(|v| *v == Verdict::Supports) {
        Verdict::Supports
    } else if verdicts.contains(&Verdict::Refutes) {
        Verdict::Refutes
    } else {
        Verdict::Inconclusive
    }
}

/// Random rational polynomials of each degree `0..=max_degree`.
fn battery(max_degree: usize, seed: u64) -> Vec<ExactPoly> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = |nonzero: bool| loop {
        let num: i64 = rng.gen_range(-9..=9);
        let den: i64 = rng.gen_range(1..=9);
        if !nonzero || num != 0 {
            return Complex::new(BigRational::new(BigInt::from(num), BigInt::from(den)), BigRational::zero());
        }
    };
    (0..=max_degree)
        .map(|d| TaylorPolynomial::new((0..=d).map(|i| q(i == d)).collect()))
        .collect()
}

fn exact_operator(seq: &OperatorSequence, n: u64) -> Result<ExactOperator> {
    seq.operator::<BigRational>(n)
}

fn hypothesis_i(seq: &OperatorSequence, cfg: &CriterionConfig) -> Result<HypothesisReport> {
    let polys = battery(cfg.max_degree, cfg.seed);
    let ns: Vec<u64> = cfg.n_range.clone().collect();
    let records = ns
        .par_iter()
        .map(|&n| {
            let p = exact_operator(seq, n)?;
            let mut killed = 0usize;
            for g in &polys {
                killed += check_annihilation(&p, g)? as usize;
            }
            Ok(HypothesisRecord {
                hypothesis: "(i)",
                n,
                statistic_log: None,
                pass: killed == polys.len(),
                detail: format!("valence {}; {killed}/{} battery polynomials annihilated exactly", p.valence(), polys.len()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let crossing = match records.iter().rposition(|r| !r.pass) {
        None => records.first().map(|r| r.n),
        Some(i) => records.get(i + 1).map(|r| r.n),
    };
    let (verdict, notes) = match crossing {
        Some(n) => (Verdict::Supports, vec![format!("crossing at n={n}")]),
        None => (Verdict::Inconclusive, vec!["valence never exceeds the battery degree".into()]),
    };
    Ok(HypothesisReport { hypothesis: "(i)", verdict, records, notes })
}

fn decay_verdict(rule: &GrowthRule, records: &[HypothesisRecord]) -> Verdict {
    let neg: Vec<(u64, f64)> = records.iter().map(|r| (r.n, -r.statistic_log.unwrap_or(f64::NEG_INFINITY))).collect();
    rule.classify(&neg).0
}

fn hypothesis_ii(seq: &OperatorSequence, cfg: &CriterionConfig) -> Result<HypothesisReport> {
    let ns: Vec<u64> = cfg.n_range.clone().collect();
    let records = ns
        .par_iter()
        .map(|&n| {
            let stat = match cfg.route {
                Route::Polynomial => {
                    let p: PolynomialOperator<f64> = seq.operator(n)?;
                    let mut worst = f64::NEG_INFINITY;
                    for k in 0..=cfg.k_max {
                        worst = worst.max(build_f_nk(&p, k)?.f.majorant_norm(cfg.r).ln_or_neg_inf());
                    }
                    worst
                }
                // ||e_w / P_n(w)||_r = e^{|w| r} / |P_n(w)|
                Route::Exponential => cfg
                    .samples
                    .iter()
                    .map(|w| Ok(w.norm() * cfg.r - seq.ln_abs_at(n, *w)?))
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max),
            };
            Ok(HypothesisRecord {
                hypothesis: "(ii)",
                n,
                statistic_log: Some(stat),
                pass: stat < 0.0,
                detail: format!("max log norm of S_n on test set at r={}", cfg.r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = decay_verdict(&cfg.rule, &records);
    Ok(HypothesisReport { hypothesis: "(ii)", verdict, records, notes: vec![] })
}

fn hypothesis_iii(seq: &OperatorSequence, cfg: &CriterionConfig) -> Result<HypothesisReport> {
    let ns: Vec<u64> = cfg.n_range.clone().collect();
    let records = ns
        .par_iter()
        .map(|&n| match cfg.route {
            Route::Polynomial => {
                let p = exact_operator(seq, n)?;
                for k in 0..=cfg.k_max {
                    if build_f_nk(&p, k)?.identity != IdentityCheck::Exact {
                        return Err(Error::invariant("exact identity not confirmed"));
                    }
                }
                Ok(HypothesisRecord {
                    hypothesis: "(iii)",
                    n,
                    statistic_log: None,
                    pass: true,
                    detail: format!("P_n(D) f_(n,k) = z^k exactly for k <= {}", cfg.k_max),
                })
            }
            Route::Exponential => {
                let p: PolynomialOperator<f64> = seq.operator(n)?;
                let big_n = cfg.truncation + p.degree();
                let mut pass = true;
                let mut worst = f64::NEG_INFINITY;
                for w in &cfg.samples {
                    let w = scalar::convert::<f64, f64>(w);
                    let rel = apply_to_exponential(&p, &w, big_n, cfg.r);
                    if scalar::is_zero(&rel.value) {
                        continue;
                    }
                    pass &= rel.holds();
                    let ln_v = scalar::ln_modulus(&rel.value);
                    worst = worst.max(rel.distance.ln_or_neg_inf() - ln_v);
                }
                Ok(HypothesisRecord {
                    hypothesis: "(iii)",
                    n,
                    statistic_log: Some(worst),
                    pass,
                    detail: format!("T_n S_n e_w - e_w within truncation tails, N={big_n}"),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = if records.iter().all(|r| r.pass) { Verdict::Supports } else { Verdict::Refutes };
    Ok(HypothesisReport { hypothesis: "(iii)", verdict, records, notes: vec![] })
}

fn hypothesis_iv(seq: &OperatorSequence, cfg: &CriterionConfig) -> Result<HypothesisReport> {
    let start = (*cfg.n_range.start()).max(seq.first_index());
    let basis = select_indices(seq, cfg.basis_count, start, cfg.n_cap).map_err(|e| match e {
        Error::CapExhausted { last_index, reason } => {
            Error::precondition(format!("lacunary selection impossible: valences must be unbounded (stopped at n={last_index}: {reason})"))
        }
        other => other,
    })?;
    // entire member of M_0: the diagonal term of step k is at most 4^-m(n_k)
    let a: Vec<Complex<BigRational>> = basis
        .entries
        .iter()
        .map(|e| {
            let ln = -(e.valence as f64) * 4f64.ln() - e.ln_a - ln_factorial(e.valence);
            scalar::from_rational(&scalar::rational_from_ln(ln, false))
        })
        .collect();
    let f = m0_member(&basis, &a)?;
    let rows = decay_report(seq, &basis, &f, 1.0)?;
    let nonincreasing = rows.windows(2).all(|w| w[1].measured <= w[0].measured);
    let records: Vec<HypothesisRecord> = rows
        .iter()
        .map(|row| HypothesisRecord {
            hypothesis: "(iv)",
            n: row.n,
            statistic_log: Some(row.measured.ln_or_neg_inf()),
            pass: row.within_corrected_bound,
            detail: format!("step {}: bound log {}", row.k, row.corrected_bound.ln_or_neg_inf()),
        })
        .collect();
    let verdict = if records.iter().all(|r| r.pass) && nonincreasing { Verdict::Supports } else { Verdict::Inconclusive };
    let notes = vec![format!("basis indices {:?}, a_j = 4^-m(n_j) / (A_j m(n_j)!), r = 1", basis.indices())];
    Ok(HypothesisReport { hypothesis: "(iv)", verdict, records, notes })
}

/// Runs the four hypothesis checks for one route.
pub fn verify_hypotheses(seq: &OperatorSequence, cfg: &CriterionConfig) -> Result<CriterionReport> {
    if cfg.route == Route::Exponential && cfg.samples.is_empty() {
        return Err(Error::precondition("exponential route needs a nonempty sample set"));
    }
    if cfg.n_range.is_empty() {
        return Err(Error::InvalidParameter("empty n range".into()));
    }
    let hypotheses = vec![hypothesis_i(seq, cfg)?, hypothesis_ii(seq, cfg)?, hypothesis_iii(seq, cfg)?, hypothesis_iv(seq, cfg)?];
    let verdict = overall(&hypotheses.iter().map(|h| h.verdict).collect::<Vec<_>>());
    Ok(CriterionReport { family: seq.tag().to_string(), route: cfg.route.clone(), hypotheses, verdict })
}
