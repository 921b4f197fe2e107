use std::fs;
use std::path::Path;

use clap::Parser;
use hcops::cli::{main_with, run, Cli, RunConfig, RunOutput};
use hcops::series::io::{parse_coefficients, CoefficientFile};
use hcops::{ExactPoly, Error};
use num_rational::BigRational;

fn run_in(dir: &Path, args: &[&str]) -> Result<RunOutput, Error> {
    let mut v: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    v.push(format!("out={}", dir.display()));
    run(&RunConfig::from_parts(None, &v)?)
}

#[test]
fn check_properties_writes_csv_per_property() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["check-properties", "family=F1", "n_max=30"]).unwrap();
    assert!(out.summary.contains(&"(R) supports".to_string()), "{:?}", out.summary);
    for p in ["P", "Q", "R"] {
        let text = fs::read_to_string(dir.path().join(format!("properties_{p}.csv"))).unwrap();
        assert!(text.lines().count() > 30);
    }
}

#[test]
fn inverse_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["build-inverse", "family=F4", "n=6", "k=2"]).unwrap();
    assert_eq!(out.summary, vec!["identity: exact".to_string()]);
    let text = fs::read_to_string(dir.path().join("inverse_n6_k2.txt")).unwrap();
    let (file, meta) = parse_coefficients::<BigRational>(&text).unwrap();
    assert!(meta.iter().any(|m| m.contains("route=polynomial")));
    let CoefficientFile::Taylor(f) = file else { panic!("expected a Taylor block") };
    // D^6 f = z^2 forces f = 2 z^8 / 8!
    let want = ExactPoly::power(8).scale(&hcops::scalar::from_rational(&BigRational::new(1.into(), 20160.into())));
    assert_eq!(f.trimmed(), want);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    fs::write(&cfg_path, "# unicity run\ncommand = unicity\nset = linear\n\n").unwrap();
    let text = fs::read_to_string(&cfg_path).unwrap();
    let args = vec!["set=sqrt".to_string(), format!("--out={}", dir.path().display())];
    let cfg = RunConfig::from_parts(Some(&text), &args).unwrap();
    let out = run(&cfg).unwrap();
    assert!(out.summary[0].starts_with("chi = 2.0000"), "{:?}", out.summary);
}

#[test]
fn exit_codes() {
    let cli = Cli::parse_from(["hcops"]);
    assert_eq!(main_with(cli), 2);
    let cli = Cli::parse_from(["hcops", "unicity", "bogus=1"]);
    assert_eq!(main_with(cli), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = format!("out={}", dir.path().display());
    let cli = Cli::parse_from(["hcops", "synthesize", "family=F1", "mode=f64", "steps=3", "n_cap=60", &out]);
    assert_eq!(main_with(cli), 4);
}

#[test]
fn reruns_are_idempotent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        run_in(dir, &["joint", "family=F4"]).unwrap();
        run_in(dir, &["joint", "family=F4"]).unwrap();
    }
    for name in ["joint.csv", "joint_trace_1.jsonl", "joint_trace_2.jsonl"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}
