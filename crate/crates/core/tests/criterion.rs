use std::collections::BTreeMap;

use hcops::criterion::{check_annihilation, verify_hypotheses, CriterionConfig};
use hcops::inverse::Route;
use hcops::scalar::from_i64;
use hcops::sequences::{OperatorSequence, Verdict};
use hcops::{Error, ExactOperator, TaylorPolynomial};
use num_complex::Complex;
use num_rational::BigRational;

fn fam(tag: &str) -> OperatorSequence {
    OperatorSequence::from_tag(tag, &BTreeMap::new()).unwrap()
}

#[test]
fn valence_ten_kills_degree_nine() {
    let p = fam("F1").operator::<BigRational>(10).unwrap();
    let g = TaylorPolynomial::new((1..=10).map(from_i64).collect());
    assert_eq!(g.degree(), Some(9));
    assert!(check_annihilation(&p, &g).unwrap());
    assert!(p.apply(&g).is_zero());
}

#[test]
fn unit_monomials_on_polynomial_route() {
    let cfg = CriterionConfig { n_range: 1..=40, max_degree: 5, ..Default::default() };
    let rep = verify_hypotheses(&fam("F4"), &cfg).unwrap();
    for h in &rep.hypotheses {
        assert_eq!(h.verdict, Verdict::Supports, "{} {:?}", h.hypothesis, h.notes);
    }
    assert_eq!(rep.verdict, Verdict::Supports);
    assert_eq!(rep.hypothesis("(i)").unwrap().notes, vec!["crossing at n=6".to_string()]);
    let lines = rep.to_jsonl();
    assert_eq!(lines.lines().filter(|l| l.contains("\"(i)\"") && l.contains("\"n\"")).count(), 40);
}

#[test]
fn near_root_family_on_exponential_route() {
    let cfg = CriterionConfig {
        route: Route::Exponential,
        n_range: 1..=40,
        samples: vec![Complex::new(-2.0, 0.0), Complex::new(-3.0, 0.0), Complex::new(-5.0, 0.0)],
        r: 1.0,
        ..Default::default()
    };
    let rep = verify_hypotheses(&fam("F3"), &cfg).unwrap();
    assert_eq!(rep.hypothesis("(i)").unwrap().verdict, Verdict::Supports);
    assert_eq!(rep.hypothesis("(ii)").unwrap().verdict, Verdict::Supports);
    assert_eq!(rep.hypothesis("(iii)").unwrap().verdict, Verdict::Supports);
}

#[test]
fn exponential_route_needs_samples() {
    let cfg = CriterionConfig { route: Route::Exponential, ..Default::default() };
    assert!(matches!(verify_hypotheses(&fam("F3"), &cfg), Err(Error::Precondition(_))));
}

#[test]
fn constant_valence_table_is_rejected() {
    let ops: Vec<ExactOperator> = (1..=12).map(|i| ExactOperator::new(2, vec![from_i64(1), from_i64(i)]).unwrap()).collect();
    let seq = OperatorSequence::table(1, ops).unwrap();
    let cfg = CriterionConfig { n_range: 1..=12, ..Default::default() };
    assert!(matches!(verify_hypotheses(&seq, &cfg), Err(Error::Precondition(_))));
}

#[test]
fn enlarging_range_keeps_exact_hypotheses() {
    let seq = fam("F1");
    for hi in [20, 30] {
        let cfg = CriterionConfig { n_range: 1..=hi, ..Default::default() };
        let rep = verify_hypotheses(&seq, &cfg).unwrap();
        assert_eq!(rep.hypothesis("(i)").unwrap().verdict, Verdict::Supports);
        assert_eq!(rep.hypothesis("(iii)").unwrap().verdict, Verdict::Supports);
    }
}
