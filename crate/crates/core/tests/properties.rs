use std::collections::BTreeMap;

use hcops::sequences::{
    check_property_p, check_property_q, check_property_r, circle_min, GrowthRule, OperatorSequence, Verdict,
};
use hcops::FloatOperator;
use num_complex::Complex;

fn fam(tag: &str) -> OperatorSequence {
    OperatorSequence::from_tag(tag, &BTreeMap::new()).unwrap()
}

fn real(v: f64) -> Complex<f64> {
    Complex::new(v, 0.0)
}

#[test]
fn p_on_near_root_family_supports() {
    let rep = check_property_p(&fam("F3"), &[real(-2.0), real(-3.0), real(-5.0)], 1..=40, &GrowthRule::pointwise()).unwrap();
    assert_eq!(rep.verdict, Verdict::Supports);
    // |P_n(-x)| > x^n
    for (s, x) in rep.series.iter().zip([2.0f64, 3.0, 5.0]) {
        for &(n, v) in &s.points {
            assert!(v.ln_or_neg_inf() > n as f64 * x.ln());
        }
    }
}

#[test]
fn p_on_unit_monomials_supports_on_circle_of_radius_two() {
    let samples: Vec<_> = (0..8).map(|i| Complex::from_polar(2.0, i as f64)).collect();
    let rep = check_property_p(&fam("F4"), &samples, 1..=60, &GrowthRule::pointwise()).unwrap();
    assert_eq!(rep.verdict, Verdict::Supports);
}

#[test]
fn p_on_power_plus_shift_refutes_at_one_half() {
    let rep = check_property_p(&fam("F1"), &[real(0.5)], 1..=60, &GrowthRule::pointwise()).unwrap();
    assert_eq!(rep.verdict, Verdict::Refutes);
    assert!(!rep.witnesses.is_empty());
}

#[test]
fn q_verdicts() {
    let f2 = fam("F2");
    let rep = check_property_q(&f2, 3, 2..=200, &GrowthRule::coefficient(), 20.0).unwrap();
    assert_eq!(rep.verdict, Verdict::Supports, "{:?}", rep.notes);
    // statistic n^{1 - k / ln(n+1)}
    let s = rep.series("growth k=3").unwrap();
    for &(n, v) in &s.points {
        let nf = n as f64;
        let expect = (1.0 - 3.0 / (nf + 1.0).ln()) * nf.ln();
        assert!((v.ln_or_neg_inf() - expect).abs() < 1e-9);
    }

    let rep = check_property_q(&fam("F1"), 2, 1..=60, &GrowthRule::coefficient(), 20.0).unwrap();
    assert_eq!(rep.verdict, Verdict::Refutes);
    for w in &rep.witnesses {
        assert_eq!(w.series, "growth k=2");
        assert!((w.statistic_log + (w.n as f64).ln()).abs() < 1e-9);
    }

    let rep = check_property_q(&fam("F4"), 4, 1..=60, &GrowthRule::coefficient(), 20.0).unwrap();
    assert_eq!(rep.verdict, Verdict::Supports);
}

#[test]
fn r_verdicts() {
    let rep = check_property_r(&fam("F1"), 2.0, 1..=40, 256, &GrowthRule::circle()).unwrap();
    assert_eq!(rep.verdict, Verdict::Supports);
    let low = &rep.series[0];
    for &(n, v) in &low.points {
        let nf = n as f64;
        // 2^n (2 - n^{-n}) up to the sampling correction
        let exact = 2f64.powf(nf) * (2.0 - (-nf * nf.ln()).exp());
        let majorant = 2f64.powf(nf) * (2.0 + (-nf * nf.ln()).exp());
        let correction = std::f64::consts::PI / 256.0 * (nf + 1.0) * majorant;
        assert!(v.to_f64() <= exact * (1.0 + 1e-9));
        assert!(v.to_f64() >= (exact - correction).max(0.0) * (1.0 - 1e-9), "n={n}");
    }

    let damped = OperatorSequence::DampedPair { ln_base: 1.0, unit_c: false };
    let rep = check_property_r(&damped, 1.0, 2..=100, 256, &GrowthRule::circle()).unwrap();
    assert_eq!(rep.verdict, Verdict::Refutes);

    let rep = check_property_r(&fam("F4"), 1.0, 1..=40, 256, &GrowthRule::circle()).unwrap();
    assert_ne!(rep.verdict, Verdict::Supports);

    for r in [1.0, 2.0, 3.0] {
        let rep = check_property_r(&fam("F3"), r, 1..=600, 256, &GrowthRule::circle()).unwrap();
        assert_eq!(rep.verdict, Verdict::Refutes, "r={r}");
        for w in &rep.witnesses {
            assert!(w.statistic_log < -(w.n as f64) * 2f64.ln());
        }
    }
}

#[test]
fn circle_min_never_exceeds_its_samples() {
    for n in 1..30usize {
        let p: FloatOperator = fam("F3").operator(n as u64).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let m = circle_min(&p, r, 128);
            assert!(m.lower <= m.sampled);
        }
    }
}
