//! Greedy construction of truncated universal vectors with certified
//! residuals, plus perturbation, augmentation and joint-family reports.
//!
//! At step `k` the least admissible index `n_k` is chosen such that
//!
//! * (a) `m(n_k)` exceeds the degree of every earlier correction, so
//!   `P_{n_k}(D)` annihilates them exactly;
//! * (b) the correction `h_k = S_{n_k} y_k` has `||h_k||_{r_k} < eps_k`;
//! * (c) `||P_{n_i}(D) h_k||_{r_i} < eps_k` for every earlier step `i`.
//!
//! Then `||P_{n_i}(D) x_K - y_i||_{r_i} <= sum_{j > i} eps_j`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inverse::inverse_for_polynomial;
use crate::logmag::LogMagnitude;
use crate::scalar::{self, Real};
use crate::sequences::{diagonal_rational, OperatorSequence};
use crate::series::{PolynomialOperator, TaylorPolynomial};
use crate::ExactPoly;

pub const DEFAULT_SYNTHESIS_CAP: u64 = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum TargetScheme {
    RationalDiagonal { zero_recurrent: bool },
    UserList(Vec<ExactPoly>),
}

/// `rho_0 = 0`, then `p/q, -p/q` for reduced pairs in diagonal order.
fn rational_at(i: usize) -> BigRational {
    if i == 0 {
        return BigRational::zero();
    }
    let mut seen = 0usize;
    let mut n = 1u64;
    loop {
        let (p, q) = diagonal_rational(n);
        n += 1;
        if p.gcd(&q) != 1 {
            continue;
        }
        seen += 2;
        if seen >= i {
            let v = BigRational::new(BigInt::from(p), BigInt::from(q));
            return if seen == i { -v } else { v };
        }
    }
}

/// Polynomials with rational coefficients: level `L` lists the coefficient
/// index tuples in `{0..L-1}^L` (first coordinate fastest) not already
/// listed at an earlier level.
struct DiagonalPolys {
    level: usize,
    cursor: Vec<usize>,
    rho: Vec<BigRational>,
}

impl DiagonalPolys {
    fn new() -> Self {
        DiagonalPolys { level: 0, cursor: Vec::new(), rho: Vec::new() }
    }

    fn rho(&mut self, i: usize) -> BigRational {
        while self.rho.len() <= i {
            let next = rational_at(self.rho.len());
            self.rho.push(next);
        }
        self.rho[i].clone()
    }

    fn advance(&mut self) -> bool {
        for c in self.cursor.iter_mut() {
            *c += 1;
            if *c < self.level {
                return true;
            }
            *c = 0;
        }
        false
    }

    fn is_new(&self) -> bool {
        let l = self.level;
        l == 1 || self.cursor.iter().any(|&c| c == l - 1) || self.cursor[l - 1] != 0
    }
}

impl Iterator for DiagonalPolys {
    type Item = ExactPoly;

    fn next(&mut self) -> Option<ExactPoly> {
        loop {
            if self.cursor.is_empty() || !self.advance() {
                self.level += 1;
                self.cursor = vec![0; self.level];
            }
            if self.is_new() {
                let idx = self.cursor.clone();
                let coeffs = idx.into_iter().map(|i| Complex::new(self.rho(i), BigRational::zero())).collect();
                return Some(TaylorPolynomial::new(coeffs).trimmed());
            }
        }
    }
}

/// Deterministic list of `count` targets. With `zero_recurrent`, every even
/// position (1-based) holds the zero polynomial.
pub fn enumerate_targets(scheme: &TargetScheme, count: usize) -> Vec<ExactPoly> {
    match scheme {
        TargetScheme::UserList(list) => list.iter().take(count).cloned().collect(),
        TargetScheme::RationalDiagonal { zero_recurrent: false } => DiagonalPolys::new().take(count).collect(),
        TargetScheme::RationalDiagonal { zero_recurrent: true } => {
            let mut polys = DiagonalPolys::new();
            (1..=count)
                .map(|k| if k % 2 == 0 { ExactPoly::zero(0) } else { polys.next().expect("infinite enumeration") })
                .collect()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisConfig {
    /// `r_k = radius_scale * k`.
    pub radius_scale: f64,
    /// `eps_k = eps_ratio^k`.
    pub eps_ratio: f64,
    pub n_start: u64,
    pub n_cap: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig { radius_scale: 1.0, eps_ratio: 0.5, n_start: 1, n_cap: DEFAULT_SYNTHESIS_CAP }
    }
}

impl SynthesisConfig {
    pub fn radius(&self, k: usize) -> f64 {
        self.radius_scale * k as f64
    }

    pub fn eps(&self, k: usize) -> LogMagnitude {
        LogMagnitude::from_ln(k as f64 * self.eps_ratio.ln())
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius_scale > 0.0) || !(self.eps_ratio > 0.0 && self.eps_ratio < 1.0) {
            return Err(Error::InvalidParameter("need radius_scale > 0 and 0 < eps_ratio < 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisStep<T: Real> {
    pub k: usize,
    pub n: u64,
    pub valence: u64,
    pub target: TaylorPolynomial<T>,
    pub radius: f64,
    pub eps: LogMagnitude,
    pub correction: TaylorPolynomial<T>,
    pub correction_norm: LogMagnitude,
    /// `||P_{n_i}(D) h_k||_{r_i}` for `i < k`.
    pub cross_terms: Vec<LogMagnitude>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisTrace<T: Real> {
    pub family: String,
    pub steps: Vec<SynthesisStep<T>>,
    /// `x_K = sum_k h_k`.
    pub x: TaylorPolynomial<T>,
    /// `||P_{n_i}(D) x_K - y_i||_{r_i}`, recomputed directly.
    pub residuals: Vec<LogMagnitude>,
}

fn poly_json<T: Real>(p: &TaylorPolynomial<T>) -> Vec<(usize, String)> {
    p.terms().map(|(i, c)| (i, scalar::format_complex(c))).collect()
}

#[derive(Serialize)]
struct StepRecord<'a> {
    k: usize,
    n: u64,
    valence: u64,
    radius: f64,
    eps: &'a LogMagnitude,
    target: Vec<(usize, String)>,
    correction: Vec<(usize, String)>,
    correction_norm: &'a LogMagnitude,
    cross_terms: &'a [LogMagnitude],
    residual: &'a LogMagnitude,
}

impl<T: Real> SynthesisTrace<T> {
    pub fn indices(&self) -> Vec<u64> {
        self.steps.iter().map(|s| s.n).collect()
    }

    /// Degree of `x_K`, which bounds the memory of later evaluations.
    pub fn degree(&self) -> Option<usize> {
        self.x.degree()
    }

    /// One JSON object per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (s, res) in self.steps.iter().zip(&self.residuals) {
            let rec = StepRecord {
                k: s.k,
                n: s.n,
                valence: s.valence,
                radius: s.radius,
                eps: &s.eps,
                target: poly_json(&s.target),
                correction: poly_json(&s.correction),
                correction_norm: &s.correction_norm,
                cross_terms: &s.cross_terms,
                residual: res,
            };
            out.push_str(&serde_json::to_string(&rec).expect("step serializes"));
            out.push('\n');
        }
        out
    }

    /// CSV `k,n,valence,radius,residual_log,limit_log`, the limit being
    /// `2^{1-k}` under the default schedule.
    pub fn residual_csv(&self) -> String {
        let mut out = String::from("k,n,valence,radius,residual_log,limit_log\n");
        for (s, r) in self.steps.iter().zip(&self.residuals) {
            let limit = LogMagnitude::pow2(1.0 - s.k as f64);
            let _ = writeln!(out, "{},{},{},{},{},{}", s.k, s.n, s.valence, s.radius, crate::sequences::fmt_ln(r.ln_or_neg_inf()), crate::sequences::fmt_ln(limit.ln_or_neg_inf()));
        }
        out
    }
}

fn residual<T: Real>(p: &PolynomialOperator<T>, x: &TaylorPolynomial<T>, y: &TaylorPolynomial<T>, r: f64) -> LogMagnitude {
    (&p.apply(x) - y).majorant_norm(r)
}

/// Recomputes `||P_{n_i}(D) x - y_i||_{r_i}` for every step from scratch.
pub fn recompute_residuals<T: Real>(seq: &OperatorSequence, trace: &SynthesisTrace<T>, x: &TaylorPolynomial<T>) -> Result<Vec<LogMagnitude>> {
    trace
        .steps
        .par_iter()
        .map(|s| Ok(residual(&seq.operator::<T>(s.n)?, x, &s.target, s.radius)))
        .collect()
}

/// Index candidates for the greedy rule.
enum Candidates<'a> {
    Range { start: u64, cap: u64 },
    /// `(n, radius)` pairs, increasing in `n`.
    List(&'a [(u64, f64)]),
}

struct Chosen<T: Real> {
    n: u64,
    radius: f64,
    op: PolynomialOperator<T>,
}

/// Builds one trace per target list on a shared index schedule.
fn greedy<T: Real>(
    seq: &OperatorSequence,
    targets: &[Vec<TaylorPolynomial<T>>],
    cfg: &SynthesisConfig,
    candidates: Candidates<'_>,
) -> Result<Vec<SynthesisTrace<T>>> {
    cfg.validate()?;
    let steps = targets.first().map_or(0, Vec::len);
    let mut chosen: Vec<Chosen<T>> = Vec::with_capacity(steps);
    let mut max_deg: Option<usize> = None;
    let mut traces: Vec<Vec<SynthesisStep<T>>> = vec![Vec::with_capacity(steps); targets.len()];
    for k in 1..=steps {
        let eps = cfg.eps(k);
        let prev = chosen.last().map_or(0, |c| c.n);
        let pool: Box<dyn Iterator<Item = (u64, f64)>> = match &candidates {
            Candidates::Range { start, cap } => {
                let r = cfg.radius(k);
                Box::new(((prev + 1).max(*start)..=*cap).map(move |n| (n, r)))
            }
            Candidates::List(list) => Box::new(list.iter().copied().filter(move |&(n, _)| n > prev)),
        };
        let mut last = (prev, "no candidate index left");
        let mut found = None;
        'scan: for (n, radius) in pool {
            if seq.last_index().is_some_and(|end| n > end) {
                break;
            }
            let (m, _) = seq.valence_degree(n)?;
            if max_deg.is_some_and(|d| m as usize <= d) {
                last = (n, "(a) valence above earlier corrections");
                continue;
            }
            let op: PolynomialOperator<T> = seq.operator(n)?;
            let mut step_data = Vec::with_capacity(targets.len());
            for list in targets {
                let target = list[k - 1].clone();
                let h = inverse_for_polynomial(&op, &target)?;
                let norm = h.majorant_norm(radius);
                if !(norm < eps) {
                    last = (n, "(b) correction norm below eps_k");
                    continue 'scan;
                }
                let mut cross = Vec::with_capacity(chosen.len());
                for c in &chosen {
                    let t = c.op.apply(&h).majorant_norm(c.radius);
                    if !(t < eps) {
                        last = (n, "(c) cross terms below eps_k");
                        continue 'scan;
                    }
                    cross.push(t);
                }
                step_data.push((target, h, norm, cross));
            }
            found = Some((n, radius, m, op, step_data));
            break;
        }
        let Some((n, radius, m, op, step_data)) = found else {
            return Err(Error::CapExhausted { last_index: last.0, reason: format!("step {k}: condition {}", last.1) });
        };
        for (trace, (target, h, norm, cross)) in traces.iter_mut().zip(step_data) {
            if let Some(d) = h.degree() {
                max_deg = Some(max_deg.map_or(d, |x| x.max(d)));
            }
            trace.push(SynthesisStep { k, n, valence: m, target, radius, eps, correction: h, correction_norm: norm, cross_terms: cross });
        }
        chosen.push(Chosen { n, radius, op });
    }
    traces
        .into_iter()
        .map(|steps| {
            let x = steps.iter().fold(TaylorPolynomial::zero(0), |acc, s| &acc + &s.correction).trimmed();
            let mut trace = SynthesisTrace { family: seq.tag().to_string(), steps, x, residuals: Vec::new() };
            trace.residuals = recompute_residuals(seq, &trace, &trace.x)?;
            Ok(trace)
        })
        .collect()
}

/// Greedy synthesis over `targets` with `r_k` and `eps_k` from `cfg`.
pub fn synthesize<T: Real>(seq: &OperatorSequence, targets: &[ExactPoly], cfg: &SynthesisConfig) -> Result<SynthesisTrace<T>> {
    let ys = targets.iter().map(|y| y.convert::<T>()).collect();
    let start = cfg.n_start.max(seq.first_index());
    Ok(greedy(seq, &[ys], cfg, Candidates::Range { start, cap: cfg.n_cap })?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbRow {
    pub k: usize,
    pub n: u64,
    pub valence: u64,
    /// `m(n_k) > deg g`.
    pub annihilated: bool,
    pub residual: LogMagnitude,
    pub base_residual: LogMagnitude,
    /// Literal equality of the two residuals.
    pub unchanged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbReport {
    pub rows: Vec<PerturbRow>,
    pub annihilation_steps: usize,
}

impl PerturbReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n,valence,annihilated,residual_log,base_residual_log,unchanged\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.k,
                r.n,
                r.valence,
                r.annihilated,
                crate::sequences::fmt_ln(r.residual.ln_or_neg_inf()),
                crate::sequences::fmt_ln(r.base_residual.ln_or_neg_inf()),
                r.unchanged
            );
        }
        if self.annihilation_steps == 0 {
            out.push_str("# no annihilation step: deg g >= every valence\n");
        }
        out
    }
}

/// Residual table of `x_K + g`.
pub fn perturb<T: Real>(seq: &OperatorSequence, trace: &SynthesisTrace<T>, g: &TaylorPolynomial<T>) -> Result<PerturbReport> {
    let xg = &trace.x + g;
    let residuals = recompute_residuals(seq, trace, &xg)?;
    let deg = g.degree();
    let rows: Vec<PerturbRow> = trace
        .steps
        .iter()
        .zip(residuals)
        .zip(&trace.residuals)
        .map(|((s, residual), &base)| PerturbRow {
            k: s.k,
            n: s.n,
            valence: s.valence,
            annihilated: deg.is_none_or(|d| s.valence as usize > d),
            residual,
            base_residual: base,
            unchanged: residual == base,
        })
        .collect();
    let annihilation_steps = rows.iter().filter(|r| r.annihilated).count();
    Ok(PerturbReport { rows, annihilation_steps })
}

/// Triangle-inequality check with a guard band for the log-domain norms
/// (wider in floating modes, where the polynomials themselves are rounded).
fn within<T: Real>(measured: LogMagnitude, tolerance: LogMagnitude) -> bool {
    let rel = if T::EXACT { 1e-12 } else { 1e-9 };
    let t = tolerance.ln_or_neg_inf();
    measured.is_zero() || measured.ln_or_neg_inf() <= t + rel * (1.0 + t.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AugmentRow {
    pub lambda: String,
    pub target: usize,
    /// Step of the second trace.
    pub step: usize,
    pub n: u64,
    /// Zero-target step of the base trace at the same index.
    pub base_step: usize,
    pub radius: f64,
    /// `||P_n(D)(v + lambda x_0) - y||_r`, computed directly.
    pub measured: LogMagnitude,
    /// `res_v + |lambda| res_base`.
    pub tolerance: LogMagnitude,
    /// `2^{2 - step}`.
    pub limit: LogMagnitude,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentReport<T: Real> {
    pub v: SynthesisTrace<T>,
    pub rows: Vec<AugmentRow>,
}

impl<T: Real> AugmentReport<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,target,step,n,base_step,radius,measured_log,tolerance_log,limit_log,holds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.lambda,
                r.target,
                r.step,
                r.n,
                r.base_step,
                r.radius,
                crate::sequences::fmt_ln(r.measured.ln_or_neg_inf()),
                crate::sequences::fmt_ln(r.tolerance.ln_or_neg_inf()),
                crate::sequences::fmt_ln(r.limit.ln_or_neg_inf()),
                r.holds
            );
        }
        out
    }
}

/// Builds a second trace `v` on the zero-target indices of `base` and
/// reports, for each `lambda` and extra target, the bound on
/// `P_n(D)(v + lambda x_0) - y` at the step assigned to that target.
pub fn augment<T: Real>(
    seq: &OperatorSequence,
    base: &SynthesisTrace<T>,
    extra_targets: &[ExactPoly],
    lambdas: &[BigRational],
    cfg: &SynthesisConfig,
) -> Result<AugmentReport<T>> {
    let zero_steps: Vec<&SynthesisStep<T>> = base.steps.iter().filter(|s| s.k % 2 == 0).collect();
    if zero_steps.is_empty() || zero_steps.iter().any(|s| !s.target.is_zero()) {
        return Err(Error::precondition("base trace must target zero at every even step"));
    }
    let pool: Vec<(u64, f64)> = zero_steps.iter().map(|s| (s.n, s.radius)).collect();
    let ys: Vec<TaylorPolynomial<T>> = extra_targets.iter().map(|y| y.convert::<T>()).collect();
    let v = greedy(seq, &[ys], cfg, Candidates::List(&pool))?.remove(0);
    let mut rows = Vec::new();
    for lambda in lambdas {
        let lam: Complex<T> = scalar::from_rational(lambda);
        let combo = &v.x + &base.x.scale(&lam);
        let lam_abs = scalar::modulus(&lam);
        let computed: Vec<Result<AugmentRow>> = v
            .steps
            .par_iter()
            .zip(&v.residuals)
            .map(|(s, &res_v)| {
                let b = base.steps.iter().position(|b| b.n == s.n).expect("index drawn from base");
                let op: PolynomialOperator<T> = seq.operator(s.n)?;
                let measured = residual(&op, &combo, &s.target, s.radius);
                let base_res = residual(&op, &base.x, &base.steps[b].target, s.radius);
                let tolerance = res_v.add(lam_abs * base_res);
                let limit = LogMagnitude::pow2(2.0 - s.k as f64);
                Ok(AugmentRow {
                    lambda: lambda.to_string(),
                    target: s.k - 1,
                    step: s.k,
                    n: s.n,
                    base_step: base.steps[b].k,
                    radius: s.radius,
                    measured,
                    tolerance,
                    limit,
                    holds: within::<T>(measured, tolerance) && tolerance <= limit,
                })
            })
            .collect();
        for row in computed {
            rows.push(row?);
        }
    }
    Ok(AugmentReport { v, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointRow {
    pub combo: usize,
    pub target: usize,
    pub step: usize,
    pub n: u64,
    /// Trace that carries `y / c_d` at this step.
    pub designated: usize,
    pub measured: LogMagnitude,
    /// `sum_j |c_j| res_j`.
    pub tolerance: LogMagnitude,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointReport<T: Real> {
    pub traces: Vec<SynthesisTrace<T>>,
    pub rows: Vec<JointRow>,
}

impl<T: Real> JointReport<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("combo,target,step,n,designated,measured_log,tolerance_log,holds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.combo,
                r.target,
                r.step,
                r.n,
                r.designated,
                crate::sequences::fmt_ln(r.measured.ln_or_neg_inf()),
                crate::sequences::fmt_ln(r.tolerance.ln_or_neg_inf()),
                r.holds
            );
        }
        out
    }
}

/// `J` traces on one schedule with a step per (combination, target). At
/// that step the first trace with a nonzero weight `c_d` aims at `y / c_d`
/// and every other trace aims at zero, so only one trace receives a
/// correction per step and the traces have disjoint supports.
pub fn joint_family<T: Real>(
    seq: &OperatorSequence,
    j: usize,
    targets: &[ExactPoly],
    combos: &[Vec<BigRational>],
    cfg: &SynthesisConfig,
) -> Result<JointReport<T>> {
    if j < 2 {
        return Err(Error::InvalidParameter("joint family needs J >= 2".into()));
    }
    let mut schedule = Vec::new();
    for (ci, c) in combos.iter().enumerate() {
        if c.len() != j {
            return Err(Error::InvalidParameter(format!("combination {ci} has {} weights for J = {j}", c.len())));
        }
        let d = c.iter().position(|x| !x.is_zero()).ok_or_else(|| Error::InvalidParameter(format!("combination {ci} is zero")))?;
        for ti in 0..targets.len() {
            schedule.push((ci, ti, d));
        }
    }
    let lists: Vec<Vec<TaylorPolynomial<T>>> = (0..j)
        .map(|trace| {
            schedule
                .iter()
                .map(|&(ci, ti, d)| {
                    if trace == d {
                        let inv = combos[ci][d].recip();
                        targets[ti].scale(&Complex::new(inv, BigRational::zero())).convert::<T>()
                    } else {
                        TaylorPolynomial::zero(0)
                    }
                })
                .collect()
        })
        .collect();
    let start = cfg.n_start.max(seq.first_index());
    let traces = greedy(seq, &lists, cfg, Candidates::Range { start, cap: cfg.n_cap })?;
    let rows = schedule
        .par_iter()
        .enumerate()
        .map(|(s, &(ci, ti, d))| {
            let step = &traces[0].steps[s];
            let op: PolynomialOperator<T> = seq.operator(step.n)?;
            let weights: Vec<Complex<T>> = combos[ci].iter().map(scalar::from_rational).collect();
            let combo = traces.iter().zip(&weights).fold(TaylorPolynomial::zero(0), |acc, (t, w)| &acc + &t.x.scale(w));
            let y: TaylorPolynomial<T> = targets[ti].convert();
            let measured = residual(&op, &combo, &y, step.radius);
            let tolerance: LogMagnitude = traces.iter().zip(&weights).map(|(t, w)| scalar::modulus(w) * t.residuals[s]).sum();
            Ok(JointRow { combo: ci, target: ti, step: s + 1, n: step.n, designated: d, measured, tolerance, holds: within::<T>(measured, tolerance) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointReport { traces, rows })
}

/// Parses a combination such as `1,-1/2` into rationals.
pub fn parse_combo(s: &str) -> Result<Vec<BigRational>> {
    s.split(',').map(|t| scalar::parse_rational(t.trim())).collect()
}
