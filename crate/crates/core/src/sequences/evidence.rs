use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logmag::LogMagnitude;

use super::{circle_min_log, OperatorSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Property {
    P,
    Q,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Supports,
    Refutes,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Supports => "supports",
            Verdict::Refutes => "refutes",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Finite-range surrogate for "tends to infinity" and "stays small".
///
/// A statistic *supports* divergence when its final value exceeds
/// `threshold_log` and the minima of four consecutive blocks covering the
/// last half of the range strictly increase (elementwise increase when the
/// half has fewer than four points). It is *refuted* when at least
/// `min_witnesses` points of the last half fall below
/// `floor_log - floor_slope_log * n`. Refutation takes precedence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthRule {
    pub threshold_log: f64,
    pub floor_log: f64,
    pub floor_slope_log: f64,
    pub min_witnesses: usize,
}

impl GrowthRule {
    /// Defaults for pointwise growth (P).
    pub fn pointwise() -> Self {
        GrowthRule { threshold_log: 20.0, floor_log: 0.0, floor_slope_log: 0.0, min_witnesses: 2 }
    }

    /// Defaults for the polynomially growing statistic of (Q).
    pub fn coefficient() -> Self {
        GrowthRule { threshold_log: 1.0, ..Self::pointwise() }
    }

    /// Defaults for circle minima (R): witnesses must fall below `2^{-n}`.
    pub fn circle() -> Self {
        GrowthRule { floor_slope_log: std::f64::consts::LN_2, ..Self::pointwise() }
    }

    pub fn default_for(property: Property) -> Self {
        match property {
            Property::P => Self::pointwise(),
            Property::Q => Self::coefficient(),
            Property::R => Self::circle(),
        }
    }

    fn floor_at(&self, n: u64) -> f64 {
        self.floor_log - self.floor_slope_log * n as f64
    }

    /// Strictly below the floor, with a relative guard band so that values
    /// equal to the floor up to rounding never count as witnesses.
    fn below_floor(&self, n: u64, v: f64) -> bool {
        let f = self.floor_at(n);
        v < f - 1e-12 * (1.0 + f.abs().max(if v.is_finite() { v.abs() } else { 0.0 }))
    }

    /// Verdict and refuting indices for a statistic series ordered by `n`.
    pub fn classify(&self, points: &[(u64, f64)]) -> (Verdict, Vec<u64>) {
        if points.is_empty() {
            return (Verdict::Inconclusive, vec![]);
        }
        let half = &points[points.len() / 2..];
        let below: Vec<u64> = half.iter().filter(|&&(n, v)| self.below_floor(n, v)).map(|&(n, _)| n).collect();
        if below.len() >= self.min_witnesses.max(1) {
            return (Verdict::Refutes, below);
        }
        let last = points[points.len() - 1].1;
        if last > self.threshold_log && increasing_blocks(half) {
            return (Verdict::Supports, vec![]);
        }
        (Verdict::Inconclusive, vec![])
    }
}

fn increasing_blocks(half: &[(u64, f64)]) -> bool {
    if half.len() < 2 {
        return false;
    }
    let blocks = 4.min(half.len());
    let minima: Vec<f64> = (0..blocks)
        .map(|b| {
            let lo = b * half.len() / blocks;
            let hi = (b + 1) * half.len() / blocks;
            half[lo..hi].iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
        })
        .collect();
    minima.windows(2).all(|w| w[1] > w[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatSeries {
    pub label: String,
    /// `(n, statistic)` ordered by `n`.
    pub points: Vec<(u64, LogMagnitude)>,
    pub verdict: Verdict,
}

impl StatSeries {
    fn new(label: String, points: Vec<(u64, LogMagnitude)>, rule: &GrowthRule) -> (Self, Vec<u64>) {
        let (verdict, below) = rule.classify(&ln_points(&points));
        (StatSeries { label, points, verdict }, below)
    }

    pub fn value(&self, n: u64) -> Option<LogMagnitude> {
        self.points.iter().find(|p| p.0 == n).map(|p| p.1)
    }
}

fn ln_points(points: &[(u64, LogMagnitude)]) -> Vec<(u64, f64)> {
    points.iter().map(|&(n, v)| (n, v.ln_or_neg_inf())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub series: String,
    pub n: u64,
    pub statistic_log: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvidenceReport {
    pub property: Property,
    pub n_range: (u64, u64),
    pub series: Vec<StatSeries>,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl EvidenceReport {
    pub fn series(&self, label: &str) -> Option<&StatSeries> {
        self.series.iter().find(|s| s.label == label)
    }

    /// CSV with columns `series,n,statistic_log,verdict_running`; the running
    /// verdict applies `rule` to the prefix ending at `n`.
    pub fn to_csv(&self, rule: &GrowthRule) -> String {
        let mut out = String::from("series,n,statistic_log,verdict_running\n");
        for s in &self.series {
            let pts = ln_points(&s.points);
            for i in 0..pts.len() {
                let (v, _) = rule.classify(&pts[..=i]);
                let _ = writeln!(out, "{},{},{},{}", s.label, pts[i].0, fmt_ln(pts[i].1), v.as_str());
            }
        }
        out
    }
}

pub(crate) fn fmt_ln(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:?}")
    }
}

fn range_points<F>(n_range: &RangeInclusive<u64>, f: F) -> Result<Vec<(u64, LogMagnitude)>>
where
    F: Fn(u64) -> Result<LogMagnitude> + Sync,
{
    let ns: Vec<u64> = n_range.clone().collect();
    ns.par_iter().map(|&n| f(n).map(|v| (n, v))).collect()
}

fn combine(
    property: Property,
    n_range: &RangeInclusive<u64>,
    series: Vec<(StatSeries, Vec<u64>)>,
    refute_only: &[usize],
    support_only: &[usize],
) -> EvidenceReport {
    let mut witnesses = vec![];
    for (i, (s, below)) in series.iter().enumerate() {
        if s.verdict == Verdict::Refutes && !support_only.contains(&i) {
            for &n in below {
                let v = s.value(n).map_or(f64::NEG_INFINITY, |v| v.ln_or_neg_inf());
                witnesses.push(Witness { series: s.label.clone(), n, statistic_log: v });
            }
        }
    }
    let supporting: Vec<&StatSeries> =
        series.iter().enumerate().filter(|(i, _)| !refute_only.contains(i)).map(|(_, s)| &s.0).collect();
    let verdict = if !witnesses.is_empty() {
        Verdict::Refutes
    } else if !supporting.is_empty() && supporting.iter().all(|s| s.verdict == Verdict::Supports) {
        Verdict::Supports
    } else {
        Verdict::Inconclusive
    };
    EvidenceReport {
        property,
        n_range: (*n_range.start(), *n_range.end()),
        series: series.into_iter().map(|(s, _)| s).collect(),
        verdict,
        witnesses,
        notes: vec![],
    }
}

fn check_range(seq: &OperatorSequence, n_range: &RangeInclusive<u64>) -> Result<()> {
    if n_range.is_empty() {
        return Err(Error::InvalidParameter("empty n range".into()));
    }
    seq.valence_degree(*n_range.start())?;
    seq.valence_degree(*n_range.end())?;
    Ok(())
}

/// Evidence for (P): `|P_n(z)| -> infinity` at every sample `z`.
pub fn check_property_p(
    seq: &OperatorSequence,
    samples: &[Complex<f64>],
    n_range: RangeInclusive<u64>,
    rule: &GrowthRule,
) -> Result<EvidenceReport> {
    if samples.is_empty() {
        return Err(Error::precondition("property (P) needs at least one sample point"));
    }
    check_range(seq, &n_range)?;
    let mut series = vec![];
    for z in samples {
        let pts = range_points(&n_range, |n| Ok(LogMagnitude::from_ln(seq.ln_abs_at(n, *z)?)))?;
        series.push(StatSeries::new(format!("z={}", fmt_c(*z)), pts, rule));
    }
    Ok(combine(Property::P, &n_range, series, &[], &[]))
}

fn fmt_c(z: Complex<f64>) -> String {
    if z.im == 0.0 {
        format!("{:?}", z.re)
    } else {
        format!("{:?}:{:?}", z.re, z.im)
    }
}

/// Evidence for (Q): for each `k <= k_max`, `m(n) |c_{m(n),n}|^{k/m(n)}`
/// diverges and `c_{k+m(n),n}` stays bounded by `e^{bound_cap_log}`.
pub fn check_property_q(
    seq: &OperatorSequence,
    k_max: u64,
    n_range: RangeInclusive<u64>,
    rule: &GrowthRule,
    bound_cap_log: f64,
) -> Result<EvidenceReport> {
    if k_max < 1 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    check_range(seq, &n_range)?;
    let bands = range_points_raw(&n_range, |n| {
        let (m, _) = seq.valence_degree(n)?;
        Ok((m, seq.band_log(n)?.into_iter().map(|c| c.0).collect::<Vec<f64>>()))
    })?;
    let mut series = vec![];
    let mut refute_only = vec![];
    let mut notes = vec![];
    for k in 1..=k_max {
        let growth: Vec<(u64, LogMagnitude)> = bands
            .iter()
            .map(|(n, (m, band))| {
                let v = if *m == 0 { f64::NEG_INFINITY } else { (*m as f64).ln() + k as f64 / *m as f64 * band[0] };
                (*n, LogMagnitude::from_ln(v))
            })
            .collect();
        series.push(StatSeries::new(format!("growth k={k}"), growth, rule));
        let bounded: Vec<(u64, LogMagnitude)> = bands
            .iter()
            .map(|(n, (_, band))| (*n, LogMagnitude::from_ln(band.get(k as usize).copied().unwrap_or(f64::NEG_INFINITY))))
            .collect();
        let exceed: Vec<u64> =
            bounded.iter().filter(|(_, v)| v.ln_or_neg_inf() > bound_cap_log).map(|(n, _)| *n).collect();
        let max = bounded.iter().map(|p| p.1).fold(LogMagnitude::ZERO, LogMagnitude::max);
        notes.push(format!("k={k}: max ln|c(k+m(n), n)| = {}", fmt_ln(max.ln_or_neg_inf())));
        refute_only.push(series.len());
        let verdict = if exceed.is_empty() { Verdict::Supports } else { Verdict::Refutes };
        series.push((StatSeries { label: format!("bounded k={k}"), points: bounded, verdict }, exceed));
    }
    let mut report = combine(Property::Q, &n_range, series, &refute_only, &[]);
    report.notes = notes;
    Ok(report)
}

fn range_points_raw<V, F>(n_range: &RangeInclusive<u64>, f: F) -> Result<Vec<(u64, V)>>
where
    V: Send,
    F: Fn(u64) -> Result<V> + Sync,
{
    let ns: Vec<u64> = n_range.clone().collect();
    ns.par_iter().map(|&n| f(n).map(|v| (n, v))).collect()
}

/// Evidence for (R): `min_{|z|=r} |P_n(z)| -> infinity`.
///
/// Support is judged on certified lower bounds from [`circle_min_log`];
/// refutation on upper bounds (the sampled minimum and `|P_n(r)|`).
pub fn check_property_r(
    seq: &OperatorSequence,
    r: f64,
    n_range: RangeInclusive<u64>,
    samples_per_circle: usize,
    rule: &GrowthRule,
) -> Result<EvidenceReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if samples_per_circle < 64 {
        return Err(Error::InvalidParameter("at least 64 samples per circle".into()));
    }
    check_range(seq, &n_range)?;
    let both = range_points_raw(&n_range, |n| {
        let (m, _) = seq.valence_degree(n)?;
        let cm = circle_min_log(m as usize, &seq.band_log(n)?, r, samples_per_circle);
        let at_r = LogMagnitude::from_ln(seq.ln_abs_at(n, Complex::new(r, 0.0))?);
        Ok((cm.lower, cm.sampled.min(at_r)))
    })?;
    let lower = both.iter().map(|(n, (l, _))| (*n, *l)).collect();
    let upper = both.iter().map(|(n, (_, u))| (*n, *u)).collect();
    let series = vec![
        StatSeries::new(format!("lower r={r:?}"), lower, rule),
        StatSeries::new(format!("upper r={r:?}"), upper, rule),
    ];
    Ok(combine(Property::R, &n_range, series, &[1], &[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_rule_cases() {
        let rule = GrowthRule::pointwise();
        let up: Vec<_> = (1..=40).map(|n| (n, n as f64)).collect();
        assert_eq!(rule.classify(&up).0, Verdict::Supports);
        let down: Vec<_> = (1..=40).map(|n| (n, -(n as f64))).collect();
        let (v, w) = rule.classify(&down);
        assert_eq!(v, Verdict::Refutes);
        assert_eq!(w.len(), 20);
        let flat: Vec<_> = (1..=40).map(|n| (n, 0.0)).collect();
        assert_eq!(rule.classify(&flat).0, Verdict::Inconclusive);
        // sawtooth with rising minima still supports
        let saw: Vec<_> = (1..=80).map(|n| (n, n as f64 + if n % 3 == 0 { -2.0 } else { 0.0 })).collect();
        assert_eq!(rule.classify(&saw).0, Verdict::Supports);
        assert_eq!(rule.classify(&[]).0, Verdict::Inconclusive);
    }

    #[test]
    fn csv_has_running_verdicts() {
        let seq = OperatorSequence::Monomial(super::super::CoefficientRule::Constant(num_rational::BigRational::from_integer(1.into())));
        let rep = check_property_p(&seq, &[Complex::new(2.0, 0.0)], 1..=5, &GrowthRule::pointwise()).unwrap();
        let csv = rep.to_csv(&GrowthRule::pointwise());
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("series,n,statistic_log,verdict_running\nz=2.0,1,"));
    }
}
