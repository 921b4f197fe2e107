//! Command-line front end: `key=value` configuration, subcommands and
//! report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;

use crate::criterion::{verify_hypotheses, CriterionConfig};
use crate::error::{Error, Result};
use crate::inverse::{build_f_nk, exp_inverse, fnk_decay, IdentityCheck, Route};
use crate::lacunary::{decay_csv, decay_report, m0_member, select_indices, verify_ineq_ak, DEFAULT_INDEX_CAP};
use crate::logmag::ln_factorial;
use crate::scalar::{self, Real};
use crate::sequences::{
    check_property_p, check_property_q, check_property_r, unicity_exponent, GrowthRule, OperatorSequence, PointSource,
    Property,
};
use crate::series::io::{parse_coefficients, write_taylor, CoefficientFile};
use crate::series::TaylorPolynomial;
use crate::synthesis::{
    augment, enumerate_targets, joint_family, parse_combo, perturb, synthesize, SynthesisConfig, TargetScheme,
    DEFAULT_SYNTHESIS_CAP,
};
use crate::ExactPoly;

#[derive(Parser, Debug)]
#[command(name = "hcops", version, about = "Checks and constructions for sequences of differential operators P_n(D)")]
pub struct Cli {
    /// Load `key=value` lines from a file; command-line entries override it
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Subcommand followed by `key=value` pairs (or `--key value` flags)
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    pub args: Vec<String>,
}

const COMMANDS: &[&str] = &[
    "check-properties",
    "unicity",
    "build-m0",
    "build-inverse",
    "verify-criterion",
    "synthesize",
    "perturb",
    "augment",
    "joint",
];

const FAMILY_KEYS: &[&str] = &["family", "log_base", "unit_c", "c", "geometric", "square_decay", "table", "table_first"];
const COMMON_KEYS: &[&str] = &["command", "out", "mode", "seed"];
const SYNTH_KEYS: &[&str] = &["targets", "steps", "radius_scale", "eps_ratio", "n_start", "n_cap"];

fn command_keys(command: &str) -> &'static [&'static str] {
    match command {
        "check-properties" => {
            &["property", "n_min", "n_max", "r", "radii", "points", "k_max", "samples", "threshold_log", "bound_cap_log"]
        }
        "unicity" => &["set", "exponent", "base", "moduli", "r_max", "samples_per_decade", "margin"],
        "build-m0" => &["count", "n_start", "n_cap", "r", "coefficients"],
        "build-inverse" => &["n", "k", "route", "w", "n_min", "n_max", "r", "threshold_log"],
        "verify-criterion" => &[
            "route",
            "n_min",
            "n_max",
            "max_degree",
            "k_max",
            "points",
            "r",
            "truncation",
            "basis_count",
            "n_cap",
            "threshold_log",
        ],
        "synthesize" => &[],
        "perturb" => &["g"],
        "augment" => &["extra", "lambdas"],
        "joint" => &["j", "combos"],
        _ => &[],
    }
}

/// Parsed configuration: a command plus validated `key=value` settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub values: BTreeMap<String, String>,
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    /// Builds a configuration from an optional file and command-line words.
    /// The first bare word is the command; `key=value`, `--key=value` and
    /// `--key value` set values.
    pub fn from_parts(file_text: Option<&str>, args: &[String]) -> Result<Self> {
        let mut values = match file_text {
            Some(t) => parse_config_text(t)?,
            None => BTreeMap::new(),
        };
        let mut command = values.remove("command");
        let mut it = args.iter().peekable();
        while let Some(arg) = it.next() {
            if let Some(flag) = arg.strip_prefix("--") {
                let (k, v) = match flag.split_once('=') {
                    Some((k, v)) => (k.to_string(), v.to_string()),
                    None => {
                        let v = it.next().ok_or_else(|| Error::Config(format!("flag --{flag} needs a value")))?;
                        (flag.to_string(), v.clone())
                    }
                };
                values.insert(k.replace('-', "_"), v);
            } else if let Some((k, v)) = arg.split_once('=') {
                if k == "command" {
                    command = Some(v.to_string());
                } else {
                    values.insert(k.to_string(), v.to_string());
                }
            } else if command.is_none() {
                command = Some(arg.clone());
            } else {
                return Err(Error::Config(format!("unexpected argument `{arg}`")));
            }
        }
        let command = command.ok_or_else(|| Error::Config("no command given".into()))?;
        if !COMMANDS.contains(&command.as_str()) {
            return Err(Error::Config(format!("unknown command `{command}`; expected one of {}", COMMANDS.join(", "))));
        }
        let specific = command_keys(&command);
        let synth = matches!(command.as_str(), "synthesize" | "perturb" | "augment" | "joint");
        for key in values.keys() {
            let k = key.as_str();
            let known = COMMON_KEYS.contains(&k)
                || FAMILY_KEYS.contains(&k)
                || specific.contains(&k)
                || (synth && SYNTH_KEYS.contains(&k));
            if !known {
                return Err(Error::Config(format!("unknown key `{key}` for {command}")));
            }
        }
        Ok(RunConfig { command, values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<V: std::str::FromStr>(&self, key: &str, default: V) -> Result<V> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("bad value for {key}: `{v}`"))),
        }
    }

    fn required<V: std::str::FromStr>(&self, key: &str) -> Result<V> {
        let v = self.get(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")))?;
        v.parse().map_err(|_| Error::Config(format!("bad value for {key}: `{v}`")))
    }

    fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out").unwrap_or("out"))
    }

    fn mode(&self) -> Result<&str> {
        match self.get("mode").unwrap_or("exact") {
            m @ ("exact" | "f64" | "f32") => Ok(m),
            other => Err(Error::Config(format!("mode must be exact, f64 or f32, got `{other}`"))),
        }
    }

    fn n_range(&self, lo: u64, hi: u64) -> Result<std::ops::RangeInclusive<u64>> {
        let lo = self.parsed("n_min", lo)?;
        let hi = self.parsed("n_max", hi)?;
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!("need 1 <= n_min <= n_max, got {lo}..{hi}")));
        }
        Ok(lo..=hi)
    }

    fn family(&self) -> Result<OperatorSequence> {
        let tag = self.get("family").ok_or_else(|| Error::Config("missing required key `family`".into()))?;
        if tag == "F5" {
            let path = self.get("table").ok_or_else(|| Error::Config("F5 needs table=<path>".into()))?;
            let first = self.parsed("table_first", 1u64)?;
            return OperatorSequence::table(first, read_table(Path::new(path))?);
        }
        let params: BTreeMap<String, String> = self
            .values
            .iter()
            .filter(|(k, _)| FAMILY_KEYS.contains(&k.as_str()) && !matches!(k.as_str(), "family" | "table" | "table_first"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        OperatorSequence::from_tag(tag, &params)
    }
}

/// Operators listed one after another in the coefficient file format.
fn read_table(path: &Path) -> Result<Vec<crate::ExactOperator>> {
    let text = fs::read_to_string(path)?;
    let mut blocks: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.trim_start().starts_with("#operator") || blocks.is_empty() {
            blocks.push(String::new());
        }
        let last = blocks.last_mut().expect("nonempty");
        last.push_str(line);
        last.push('\n');
    }
    blocks
        .iter()
        .filter(|b| !b.trim().is_empty())
        .map(|b| match parse_coefficients::<BigRational>(b)?.0 {
            CoefficientFile::Operator(p) => Ok(p),
            CoefficientFile::Taylor(_) => Err(Error::Config("table entries must be #operator blocks".into())),
        })
        .collect()
}

/// A polynomial written as its coefficient list `c0,c1,...` (complex entries
/// as `re:im`).
pub fn parse_poly(s: &str) -> Result<ExactPoly> {
    let coeffs = s.split(',').map(|t| scalar::parse_complex::<BigRational>(t.trim())).collect::<Result<Vec<_>>>()?;
    Ok(TaylorPolynomial::new(coeffs).trimmed())
}

fn parse_poly_list(s: &str) -> Result<Vec<ExactPoly>> {
    s.split(';').map(parse_poly).collect()
}

fn parse_points(s: &str) -> Result<Vec<Complex<f64>>> {
    s.split(',').map(|t| scalar::parse_complex::<f64>(t.trim())).collect()
}

/// Result of a run: files written and summary lines for the terminal.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl RunOutput {
    fn write(&mut self, dir: &Path, name: &str, content: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, content)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs one configured command.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    match cfg.command.as_str() {
        "check-properties" => check_properties(cfg, &mut out)?,
        "unicity" => unicity(cfg, &mut out)?,
        "build-m0" => build_m0(cfg, &mut out)?,
        "build-inverse" => dispatch_mode!(cfg, T => build_inverse::<T>(cfg, &mut out))?,
        "verify-criterion" => criterion(cfg, &mut out)?,
        "synthesize" => dispatch_mode!(cfg, T => run_synthesize::<T>(cfg, &mut out))?,
        "perturb" => dispatch_mode!(cfg, T => run_perturb::<T>(cfg, &mut out))?,
        "augment" => dispatch_mode!(cfg, T => run_augment::<T>(cfg, &mut out))?,
        "joint" => dispatch_mode!(cfg, T => run_joint::<T>(cfg, &mut out))?,
        other => return Err(Error::Config(format!("unknown command `{other}`"))),
    }
    Ok(out)
}

macro_rules! dispatch_mode {
    ($cfg:expr, $t:ident => $body:expr) => {
        match $cfg.mode()? {
            "exact" => {
                type $t = BigRational;
                $body
            }
            "f64" => {
                type $t = f64;
                $body
            }
            _ => {
                type $t = f32;
                $body
            }
        }
    };
}
use dispatch_mode;

fn rule_for(cfg: &RunConfig, property: Property) -> Result<GrowthRule> {
    let mut rule = GrowthRule::default_for(property);
    rule.threshold_log = cfg.parsed("threshold_log", rule.threshold_log)?;
    Ok(rule)
}

fn check_properties(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let seq = cfg.family()?;
    let range = cfg.n_range(1, 40)?;
    let dir = cfg.out_dir();
    let which = cfg.get("property").unwrap_or("all");
    let wants = |p: &str| which == "all" || which.split(',').any(|w| w.eq_ignore_ascii_case(p));
    if which != "all" && !which.split(',').all(|w| ["P", "Q", "R"].contains(&w.to_ascii_uppercase().as_str())) {
        return Err(Error::Config(format!("property must be P, Q, R or all, got `{which}`")));
    }
    let mut run_one = |label: &str, rep: crate::sequences::EvidenceReport, rule: &GrowthRule| -> Result<()> {
        out.write(&dir, &format!("properties_{label}.csv"), &rep.to_csv(rule))?;
        out.summary.push(format!("({label}) {}", rep.verdict.as_str()));
        Ok(())
    };
    if wants("P") {
        let points = parse_points(cfg.get("points").unwrap_or("-2,-3,-5"))?;
        let rule = rule_for(cfg, Property::P)?;
        run_one("P", check_property_p(&seq, &points, range.clone(), &rule)?, &rule)?;
    }
    if wants("Q") {
        let rule = rule_for(cfg, Property::Q)?;
        let k_max = cfg.parsed("k_max", 3u64)?;
        let cap = cfg.parsed("bound_cap_log", 50.0)?;
        run_one("Q", check_property_q(&seq, k_max, range.clone(), &rule, cap)?, &rule)?;
    }
    if wants("R") {
        let rule = rule_for(cfg, Property::R)?;
        let samples = cfg.parsed("samples", 256usize)?;
        let radii: Vec<f64> = match cfg.get("radii") {
            Some(list) => list
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("bad radius `{t}`"))))
                .collect::<Result<_>>()?,
            None => vec![cfg.parsed("r", 2.0)?],
        };
        if radii.len() == 1 {
            run_one("R", check_property_r(&seq, radii[0], range.clone(), samples, &rule)?, &rule)?;
        } else {
            for r in radii {
                let rep = check_property_r(&seq, r, range.clone(), samples, &rule)?;
                out.write(&dir, &format!("properties_R_r{r}.csv"), &rep.to_csv(&rule))?;
                out.summary.push(format!("(R) r={r} {}", rep.verdict.as_str()));
            }
        }
    }
    Ok(())
}

fn unicity(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let source = match cfg.get("set").unwrap_or("sqrt") {
        "sqrt" => PointSource::Power { exponent: 0.5 },
        "linear" => PointSource::Power { exponent: 1.0 },
        "power" => PointSource::Power { exponent: cfg.required("exponent")? },
        "geometric" => PointSource::Geometric { base: cfg.parsed("base", 2.0)? },
        "list" => {
            let moduli = cfg.get("moduli").ok_or_else(|| Error::Config("set=list needs moduli".into()))?;
            PointSource::List(
                moduli
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("bad modulus `{t}`"))))
                    .collect::<Result<_>>()?,
            )
        }
        other => return Err(Error::Config(format!("set must be sqrt, linear, power, geometric or list, got `{other}`"))),
    };
    let est = unicity_exponent(&source, cfg.parsed("r_max", 1e6)?, cfg.parsed("samples_per_decade", 20usize)?, cfg.parsed("margin", 0.05)?)?;
    let mut csv = String::from("r,count,slope\n");
    for ((r, c), s) in est.radii.iter().zip(&est.counts).zip(&est.slopes) {
        let _ = writeln!(csv, "{r:?},{c},{s:?}");
    }
    let _ = writeln!(csv, "# chi={:?} unicity_supported={}", est.chi, est.unicity_supported);
    out.write(&cfg.out_dir(), "unicity.csv", &csv)?;
    out.summary.push(format!("chi = {:.4} ({})", est.chi, if est.unicity_supported { "unicity supported" } else { "not supported" }));
    Ok(())
}

/// `a_j = 4^-m(n_j)` (`four`) or the entire choice `4^-m(n_j) / (A_j m(n_j)!)`.
fn m0_coefficients(basis: &crate::lacunary::LacunaryBasis, rule: &str) -> Result<Vec<Complex<BigRational>>> {
    basis
        .entries
        .iter()
        .map(|e| {
            let q = match rule {
                "four" => BigRational::new(BigInt::from(1), BigInt::from(4).pow(e.valence as u32)),
                "entire" => {
                    let ln = -(e.valence as f64) * 4f64.ln() - e.ln_a - ln_factorial(e.valence);
                    scalar::rational_from_ln(ln, false)
                }
                other => return Err(Error::Config(format!("coefficients must be four or entire, got `{other}`"))),
            };
            Ok(scalar::from_rational(&q))
        })
        .collect()
}

fn build_m0(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let seq = cfg.family()?;
    let count = cfg.parsed("count", 6usize)?;
    let start = cfg.parsed("n_start", seq.first_index())?;
    let basis = select_indices(&seq, count, start, cfg.parsed("n_cap", DEFAULT_INDEX_CAP)?)?;
    let dir = cfg.out_dir();
    out.write(&dir, "m0_basis.csv", &basis.to_csv())?;
    let audit = verify_ineq_ak(&basis);
    let mut csv = String::from("k,j,margin,holds\n");
    for p in &audit.pairs {
        let _ = writeln!(csv, "{},{},{:?},{}", p.k, p.j, p.margin, p.holds);
    }
    out.write(&dir, "m0_ineq.csv", &csv)?;
    let a = m0_coefficients(&basis, cfg.get("coefficients").unwrap_or("four"))?;
    let f = m0_member(&basis, &a)?;
    let rows = decay_report(&seq, &basis, &f, cfg.parsed("r", 1.0)?)?;
    out.write(&dir, "m0_decay.csv", &decay_csv(&rows))?;
    out.summary.push(format!("indices {:?}", basis.indices()));
    out.summary.push(format!("inequality (1) {}", if audit.holds() { "holds for every pair" } else { "violated" }));
    Ok(())
}

fn build_inverse<T: Real>(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let seq = cfg.family()?;
    let n: u64 = cfg.required("n")?;
    let p = seq.operator::<T>(n)?;
    let dir = cfg.out_dir();
    match cfg.get("route").unwrap_or("polynomial") {
        "polynomial" | "Q" => {
            let k: usize = cfg.required("k")?;
            let inv = build_f_nk(&p, k)?;
            let identity = match &inv.identity {
                IdentityCheck::Exact => "identity: exact".to_string(),
                IdentityCheck::Residual(r) => format!("identity: residual {}", r.to_f64()),
            };
            let meta = vec![format!("inverse n={n} k={k} route=polynomial family={}", seq.tag()), identity.clone()];
            out.write(&dir, &format!("inverse_n{n}_k{k}.txt"), &write_taylor(&inv.f, &meta))?;
            out.summary.push(identity);
        }
        "exponential" | "P" => {
            let w: Complex<T> = scalar::parse_complex(cfg.get("w").ok_or_else(|| Error::Config("route=exponential needs w".into()))?)?;
            let combo = exp_inverse(&p, &w);
            let scale = combo.terms().first().map_or("0".to_string(), |(c, _)| scalar::format_complex(c));
            let line = serde_json::json!({"n": n, "route": "exponential", "w": scalar::format_complex(&w), "scale": scale});
            out.write(&dir, &format!("inverse_n{n}_exp.json"), &format!("{line}\n"))?;
            out.summary.push(format!("scale 1/P(w) = {scale}"));
        }
        other => return Err(Error::Config(format!("route must be polynomial or exponential, got `{other}`"))),
    }
    if cfg.get("n_max").is_some() {
        let k = cfg.parsed("k", 0usize)?;
        let mut rule = GrowthRule::pointwise();
        rule.threshold_log = cfg.parsed("threshold_log", rule.threshold_log)?;
        let rep = fnk_decay(&seq, k, cfg.parsed("r", 2.0)?, cfg.n_range(1, 40)?, &rule)?;
        let mut csv = String::from("n,valence,norm_log,threshold_pass\n");
        for row in &rep.rows {
            let _ = writeln!(csv, "{},{},{:?},{}", row.n, row.valence, row.norm.ln_or_neg_inf(), row.threshold_pass);
        }
        let _ = writeln!(csv, "# verdict={}", rep.verdict.as_str());
        out.write(&dir, &format!("fnk_decay_k{k}.csv"), &csv)?;
        out.summary.push(format!("decay {}", rep.verdict.as_str()));
    }
    Ok(())
}

fn criterion(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let seq = cfg.family()?;
    let route = match cfg.get("route").unwrap_or("Q") {
        "Q" | "polynomial" => Route::Polynomial,
        "P" | "exponential" => Route::Exponential,
        other => return Err(Error::Config(format!("route must be P or Q, got `{other}`"))),
    };
    let defaults = CriterionConfig::default();
    let mut rule = defaults.rule;
    rule.threshold_log = cfg.parsed("threshold_log", rule.threshold_log)?;
    let samples = match (cfg.get("points"), &route) {
        (Some(p), _) => parse_points(p)?,
        (None, Route::Exponential) => parse_points("-2,-3,-5")?,
        (None, Route::Polynomial) => Vec::new(),
    };
    let c = CriterionConfig {
        route,
        n_range: cfg.n_range(1, 40)?,
        max_degree: cfg.parsed("max_degree", defaults.max_degree)?,
        k_max: cfg.parsed("k_max", defaults.k_max)?,
        samples,
        r: cfg.parsed("r", defaults.r)?,
        truncation: cfg.parsed("truncation", defaults.truncation)?,
        basis_count: cfg.parsed("basis_count", defaults.basis_count)?,
        n_cap: cfg.parsed("n_cap", defaults.n_cap)?,
        seed: cfg.parsed("seed", defaults.seed)?,
        rule,
    };
    let rep = verify_hypotheses(&seq, &c)?;
    out.write(&cfg.out_dir(), "criterion.jsonl", &rep.to_jsonl())?;
    for h in &rep.hypotheses {
        out.summary.push(format!("{} {}", h.hypothesis, h.verdict.as_str()));
    }
    out.summary.push(format!("overall {}", rep.verdict.as_str()));
    Ok(())
}

fn synthesis_config(cfg: &RunConfig, seq: &OperatorSequence) -> Result<SynthesisConfig> {
    Ok(SynthesisConfig {
        radius_scale: cfg.parsed("radius_scale", 1.0)?,
        eps_ratio: cfg.parsed("eps_ratio", 0.5)?,
        n_start: cfg.parsed("n_start", seq.first_index())?,
        n_cap: cfg.parsed("n_cap", DEFAULT_SYNTHESIS_CAP)?,
    })
}

fn targets(cfg: &RunConfig, default: &str) -> Result<Vec<ExactPoly>> {
    let steps = cfg.parsed("steps", 8usize)?;
    match cfg.get("targets").unwrap_or(default) {
        "diagonal" => Ok(enumerate_targets(&TargetScheme::RationalDiagonal { zero_recurrent: false }, steps)),
        "diagonal-zero" => Ok(enumerate_targets(&TargetScheme::RationalDiagonal { zero_recurrent: true }, steps)),
        list => parse_poly_list(list),
    }
}

fn run_synthesize<T: Real>(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let seq = cfg.family()?;
    let trace = synthesize::<T>(&seq, &targets(cfg, "diagonal")?, &synthesis_config(cfg, &seq)?)?;
    let dir = cfg.out_dir();
    out.write(&dir, "trace.jsonl", &trace.to_jsonl())?;
    out.write(&dir, "residuals.csv", &trace.residual_csv())?;
    let meta = vec![format!("synthesized x_K family={} indices={:?}", seq.tag(), trace.indices())];
    out.write(&dir, "x.txt", &write_taylor(&trace.x, &meta))?;
    out.summary.push(format!("indices {:?}", trace.indices()));
    out.summary.push(format!("degree of x_K: {}", trace.degree().map_or("-".into(), |d| d.to_string())));
    Ok(())
}

fn run_perturb<T: Real>(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let seq = cfg.family()?;
    let trace = synthesize::<T>(&seq, &targets(cfg, "diagonal")?, &synthesis_config(cfg, &seq)?)?;
    let g = parse_poly(cfg.get("g").ok_or_else(|| Error::Config("missing required key `g`".into()))?)?;
    let rep = perturb(&seq, &trace, &g.convert::<T>())?;
    let dir = cfg.out_dir();
    out.write(&dir, "trace.jsonl", &trace.to_jsonl())?;
    out.write(&dir, "perturb.csv", &rep.to_csv())?;
    let unchanged = rep.rows.iter().filter(|r| r.annihilated && r.unchanged).count();
    out.summary.push(format!("{unchanged} of {} annihilation steps unchanged", rep.annihilation_steps));
    Ok(())
}

fn run_augment<T: Real>(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let seq = cfg.family()?;
    let sc = synthesis_config(cfg, &seq)?;
    let base = synthesize::<T>(&seq, &targets(cfg, "diagonal-zero")?, &sc)?;
    let extra = parse_poly_list(cfg.get("extra").unwrap_or("1;0,1"))?;
    let lambdas = parse_combo(cfg.get("lambdas").unwrap_or("-1,1,2"))?;
    let rep = augment(&seq, &base, &extra, &lambdas, &sc)?;
    let dir = cfg.out_dir();
    out.write(&dir, "base_trace.jsonl", &base.to_jsonl())?;
    out.write(&dir, "v_trace.jsonl", &rep.v.to_jsonl())?;
    out.write(&dir, "augment.csv", &rep.to_csv())?;
    let held = rep.rows.iter().filter(|r| r.holds).count();
    out.summary.push(format!("{held} of {} augmentation bounds hold", rep.rows.len()));
    Ok(())
}

fn run_joint<T: Real>(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let seq = cfg.family()?;
    let j = cfg.parsed("j", 2usize)?;
    let combos = cfg
        .get("combos")
        .unwrap_or("1,0;0,1")
        .split(';')
        .map(parse_combo)
        .collect::<Result<Vec<_>>>()?;
    let ys = parse_poly_list(cfg.get("targets").unwrap_or("1"))?;
    let rep = joint_family::<T>(&seq, j, &ys, &combos, &synthesis_config(cfg, &seq)?)?;
    let dir = cfg.out_dir();
    for (i, t) in rep.traces.iter().enumerate() {
        out.write(&dir, &format!("joint_trace_{}.jsonl", i + 1), &t.to_jsonl())?;
    }
    out.write(&dir, "joint.csv", &rep.to_csv())?;
    let held = rep.rows.iter().filter(|r| r.holds).count();
    out.summary.push(format!("{held} of {} combination bounds hold", rep.rows.len()));
    Ok(())
}

/// Entry point shared by the binary: parses, runs and maps errors to exit
/// codes.
pub fn main_with(cli: Cli) -> i32 {
    let result = (|| {
        let text = match &cli.config {
            Some(p) => Some(fs::read_to_string(p)?),
            None => None,
        };
        let cfg = RunConfig::from_parts(text.as_deref(), &cli.args)?;
        run(&cfg)
    })();
    match result {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
