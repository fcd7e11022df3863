//! Command-line front end and the acceptance suite.

use crate::ckp::{
    algebra_relation_checks, bilinear_residue_check, c_lambda_closed, c_lambda_engine, c_parity_check, c_single_supermiwa,
    cauchy_littlewood_check, count_formula_check, diagonal_tau_check, formal_diagonal, heat_check, hirota_residual,
    oracle_equivalence, orthonormality_checks, pfaffian_correlator_checks, soliton_numeric_check, soliton_tau_check,
    super_correlator_checks, super_miwa_cl_check, tau_series, Check, Source,
};
use crate::error::CkpError;
use crate::fock::{ball_process_count, basis_ket, GroupElement};
use crate::matfun::{pf_hf_sides, verify_pf_hf_identity};
use crate::partitions::{enumerate_op, q_dimension_check, DistinctOddPartition, OddPartition, OpFilter};
use crate::ring::{parse_rational, q, qi, SuperPoly, Var, PARAM_A, Q};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;

#[derive(Parser, Debug)]
#[command(name = "ckp", version, about = "Exact computations and identity checks for the bosonic CKP hierarchy")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,
    /// Worker threads for independent verification items.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Engine,
    /// Hafnian closed form, at vanishing odd times.
    Closed,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print Ĉ_λ = d_λ C_λ and D_λ = d_λ².
    Clambda {
        #[arg(long, allow_hyphen_values = true)]
        partition: String,
        #[arg(long, value_enum, default_value_t = Mode::Engine)]
        mode: Mode,
    },
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Number of ball-process paths from one odd partition to another.
    CountPaths {
        #[arg(long, default_value = "")]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Coefficients ĝ_λ = D_λ⟨λ|g|0⟩ of the tau series, with D_λ.
    Tau {
        /// Group element, for example `diag:U1/2=1/3,U3/2=1/5` (values are the weights e^{-U}).
        #[arg(long)]
        g: String,
        /// Weight cap on |λ|/2.
        #[arg(long, default_value_t = 4)]
        cap: u32,
    },
    /// Nonzero components of the Fock-form bilinear identity.
    Hirota {
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 3)]
        cap: u32,
    },
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(subcommand)]
    pub suite: Suite,
}

#[derive(Subcommand, Debug)]
pub enum Suite {
    /// Cauchy-Littlewood identity to a joint weight.
    Cl {
        #[arg(long, default_value_t = 4)]
        cap: u32,
    },
    /// ⟨Ĉ_λ, Ĉ_μ⟩ = D_λ δ for |λ|, |μ| up to a bound.
    Orthonormality {
        #[arg(long, default_value_t = 9)]
        max_weight: u32,
    },
    /// Pfaffian-Hafnian identity at seeded random rational points.
    Pfhf {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 6])]
        orders: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One-soliton tau function.
    Soliton {
        #[arg(long, default_value = "1/2")]
        p: String,
        #[arg(long, default_value = "1/3")]
        q: String,
        #[arg(long, default_value = "1")]
        a: String,
        #[arg(long, default_value_t = 4)]
        cap: u32,
    },
    /// Fock-form bilinear identity and the wave-function residue.
    Hirota {
        /// Group elements; defaults to identity, heat, soliton and diagonal elements.
        #[arg(long, value_delimiter = ';')]
        g: Vec<String>,
        #[arg(long, default_value_t = 3)]
        cap: u32,
    },
    /// Ball-process counts three ways.
    Counts {
        #[arg(long, default_value_t = 10)]
        max_weight: u32,
    },
    /// q-dimension characters against state enumeration.
    Qdim {
        #[arg(long, default_value_t = 6)]
        cap: u32,
    },
    /// Super Miwa Cauchy-Littlewood product and single-point values.
    Supermiwa {
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, default_value_t = 2)]
        cap: i32,
    },
    /// Mode algebra relations on basis states.
    Algebra {
        #[arg(long, default_value_t = 5)]
        max_weight: u32,
        /// Largest half-integer mode index, for example 7/2.
        #[arg(long, default_value = "7/2")]
        max_mode: String,
    },
    /// The correlators D_k and the Pfaffian/Hafnian correlators.
    Correlator {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2u32, 4])]
        k: Vec<u32>,
        /// Ratio order.
        #[arg(long, default_value_t = 6)]
        cap: u32,
    },
    /// Every acceptance criterion.
    All {
        /// Overrides the weight caps of the Cauchy-Littlewood, soliton and Hirota criteria.
        #[arg(long)]
        cap: Option<u32>,
    },
}

/// A named list of checks.
#[derive(Clone, Debug)]
pub struct Report {
    pub suite: String,
    pub cap: Value,
    pub items: Vec<Check>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let items: Vec<Value> = self
            .items
            .iter()
            .map(|c| json!({"id": c.id, "status": if c.pass { "pass" } else { "fail" }, "detail": c.detail}))
            .collect();
        json!({"suite": self.suite, "items": items, "cap": self.cap})
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("suite {} (cap {})\n", self.suite, self.cap);
        for c in &self.items {
            out.push_str(&format!("{}  {}  {}\n", if c.pass { "PASS" } else { "FAIL" }, c.id, c.detail));
        }
        out
    }
}

/// One acceptance criterion with its constituent checks.
#[derive(Clone, Debug)]
pub struct Criterion {
    pub number: u32,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// First failing check, or a summary of the passing ones.
    pub fn summary(&self) -> String {
        match self.checks.iter().find(|c| !c.pass) {
            Some(c) => format!("{}: {}", c.id, c.detail),
            None if self.checks.len() == 1 => self.checks[0].id.clone(),
            None => format!("{} checks", self.checks.len()),
        }
    }
}

pub fn parse_partition(s: &str) -> Result<OddPartition, CkpError> {
    let mut parts: Vec<u32> = Vec::new();
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    if !t.trim().is_empty() {
        for tok in t.split(',') {
            parts.push(tok.trim().parse().map_err(|_| CkpError::Parse(format!("malformed partition '{s}'")))?);
        }
    }
    if parts.contains(&0) {
        return Err(CkpError::Parse(format!("malformed partition '{s}'")));
    }
    OddPartition::new(parts)
}

/// Parse a half-integer `m/2` into its doubled value.
fn parse_half(s: &str) -> Result<u32, CkpError> {
    let v = parse_rational(s)? * qi(2);
    if !v.is_integer() || v <= qi(0) || v.to_integer() % 2 == 0.into() {
        return Err(CkpError::Parse(format!("'{s}' is not a positive half-integer")));
    }
    u32::try_from(v.to_integer()).map_err(|_| CkpError::Parse(format!("'{s}' is too large")))
}

/// Group elements on the command line: `identity`, `heat:c`, `soliton:p,q,a`,
/// `diag:U1/2=v,U3/2=v,…` (weights `e^{−U}`), `quad:1/2x3/2=v,…`.
pub fn parse_group(s: &str) -> Result<GroupElement, CkpError> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind.trim() {
        "identity" => Ok(GroupElement::Identity),
        "heat" => Ok(GroupElement::heat(SuperPoly::constant(parse_rational(rest)?))),
        "soliton" => {
            let v: Vec<&str> = rest.split(',').collect();
            if v.len() != 3 {
                return Err(CkpError::Parse(format!("soliton needs p,q,a: '{rest}'")));
            }
            GroupElement::soliton(parse_rational(v[0])?, parse_rational(v[1])?, SuperPoly::constant(parse_rational(v[2])?))
        }
        "diag" => {
            let mut u = BTreeMap::new();
            for item in rest.split(',').filter(|x| !x.trim().is_empty()) {
                let (key, val) = item.split_once('=').ok_or_else(|| CkpError::Parse(format!("expected Uk=v in '{item}'")))?;
                let key = key.trim().strip_prefix('U').ok_or_else(|| CkpError::Parse(format!("expected Uk=v in '{item}'")))?;
                u.insert(parse_half(key)?, SuperPoly::constant(parse_rational(val)?));
            }
            Ok(GroupElement::DiagonalPair(u))
        }
        "quad" => {
            let mut a = BTreeMap::new();
            for item in rest.split(',').filter(|x| !x.trim().is_empty()) {
                let (key, val) = item.split_once('=').ok_or_else(|| CkpError::Parse(format!("expected nxm=v in '{item}'")))?;
                let (n, m) = key.split_once('x').ok_or_else(|| CkpError::Parse(format!("expected nxm=v in '{item}'")))?;
                let (n, m) = (parse_half(n)?, parse_half(m)?);
                let v = SuperPoly::constant(parse_rational(val)?);
                a.insert((n, m), v.clone());
                a.insert((m, n), v);
            }
            GroupElement::quadratic(a)
        }
        other => Err(CkpError::Parse(format!("unknown group element '{other}'"))),
    }
}

/// Distinct positive rationals with numerator ≤ 60 and denominator ≤ 12.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let z = q(rng.gen_range(1..=60), rng.gen_range(1..=12));
        if seen.insert(z.clone()) {
            out.push(z);
        }
    }
    out
}

pub fn pfhf_checks(orders: &[usize], trials: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &n in orders {
        for trial in 0..trials {
            let z = random_points(&mut rng, n);
            let id = format!("Pf = prefactor·Hf, order {n}, trial {trial}");
            out.push(match pf_hf_sides(&z) {
                Ok((l, r)) if l == r => Check::new(id, true, format!("both sides {l}")),
                Ok((l, r)) => Check::new(id, false, format!("{l} vs {r}")),
                Err(e) => Check::new(id, false, e.to_string()),
            });
        }
    }
    out
}

pub fn oracle_checks(max_weight: u32) -> Vec<Check> {
    let parts = enumerate_op(max_weight, OpFilter::All);
    let fails: Vec<Check> = parts.par_iter().map(oracle_equivalence).filter(|c| !c.pass).collect();
    if fails.is_empty() {
        vec![Check::new(format!("engine = Hafnian closed form, |λ|≤{max_weight}"), true, format!("{} partitions", parts.len()))]
    } else {
        fails
    }
}

pub fn example_checks() -> Vec<Check> {
    let one = SuperPoly::var(Var::t_odd(1));
    let c1 = c_lambda_engine(&OddPartition::new(vec![1]).unwrap());
    let c11 = c_lambda_engine(&OddPartition::new(vec![1, 1]).unwrap());
    let t1 = SuperPoly::var(Var::t(1));
    vec![
        Check::new(
            "C(1) = t(1/2), D = 1",
            c1.hat_c == one && c1.d == qi(1),
            format!("engine Ĉ = {}, D = {}", c1.hat_c, c1.d),
        ),
        Check::new("C(1,1) = t1/√2: Ĉ = t1, D = 2", c11.hat_c == t1 && c11.d == qi(2), format!("engine Ĉ = {}, D = {}", c11.hat_c, c11.d)),
    ]
}

pub fn parity_checks(max_weight: u32) -> Vec<Check> {
    let parts = enumerate_op(max_weight, OpFilter::All);
    let reports: Vec<_> = parts.par_iter().map(|l| (l.clone(), c_parity_check(l))).collect();
    let literal_bad: Vec<String> = reports.iter().filter(|(_, r)| !r.literal_holds).map(|(l, _)| l.to_string()).collect();
    let weight_bad: Vec<String> = reports.iter().filter(|(_, r)| !r.weight_holds).map(|(l, _)| l.to_string()).collect();
    vec![
        Check::new(
            format!("C(-t) = (-1)^((|λ|+ℓ)/2) C(t), |λ|≤{max_weight}"),
            literal_bad.is_empty(),
            if literal_bad.is_empty() { format!("{} partitions", parts.len()) } else { format!("fails for {}", literal_bad.join(" ")) },
        ),
        Check::new(
            format!("C(-t) = (-1)^(|λ|/2) C(t), |λ|≤{max_weight}"),
            weight_bad.is_empty(),
            if weight_bad.is_empty() { format!("{} partitions", parts.len()) } else { format!("fails for {}", weight_bad.join(" ")) },
        ),
    ]
}

pub fn count_checks(max_weight: u32) -> Vec<Check> {
    let mut out = Vec::new();
    for k in 1..=4usize {
        let l = OddPartition::new(vec![1; 2 * k]).unwrap();
        let r = count_formula_check(&l);
        let one = num_bigint::BigInt::from(1);
        out.push(Check::new(
            format!("N(0→{l}) = 1 three ways"),
            r.dp == one && r.brute == one && r.hafnian == qi(1),
            format!("DP {}, brute {}, Hafnian {}", r.dp, r.brute, r.hafnian),
        ));
    }
    let parts = enumerate_op(max_weight, OpFilter::EvenLength);
    let reports: Vec<_> = parts.par_iter().map(|l| (l.clone(), count_formula_check(l))).collect();
    let bad: Vec<String> = reports.iter().filter(|(_, r)| !r.counts_agree()).map(|(l, _)| l.to_string()).collect();
    out.push(Check::new(
        format!("DP = brute force = Hafnian count, even ℓ, |λ|≤{max_weight}"),
        bad.is_empty(),
        if bad.is_empty() { format!("{} partitions", parts.len()) } else { format!("fails for {}", bad.join(" ")) },
    ));
    let corrected: Vec<String> = reports.iter().filter(|(_, r)| !r.corrected_relation).map(|(l, _)| l.to_string()).collect();
    let printed = reports.iter().filter(|(_, r)| r.printed_relation).count();
    out.push(Check::new(
        "Ĉ(1,0,…) = (1/2)^(ℓ/2) ∏m_i! N / (|λ|/2)!",
        corrected.is_empty(),
        if corrected.is_empty() {
            format!("{} partitions; without ∏m_i! it holds for {printed}", reports.len())
        } else {
            format!("fails for {}", corrected.join(" "))
        },
    ));
    out
}

pub fn qdim_checks(cap: u32) -> Vec<Check> {
    vec![Check::new(format!("q-dimension characters to q^{cap}"), q_dimension_check(2 * cap as usize), "state enumeration and products")]
}

pub fn supermiwa_checks(k: u32, order: i32) -> Vec<Check> {
    let mut out = vec![super_miwa_cl_check(k, order, 0)];
    let mut printed_ok = 0;
    let parts = enumerate_op(7, OpFilter::All);
    let mut bad = Vec::new();
    for l in &parts {
        let r = c_single_supermiwa(l);
        if r.vertex != r.closed || r.via_times != r.closed {
            bad.push(l.to_string());
        }
        if r.vertex == r.printed {
            printed_ok += 1;
        }
    }
    out.push(Check::new(
        "single super Miwa point, |λ|≤7",
        bad.is_empty(),
        if bad.is_empty() {
            format!("vertex, times and closed form agree on {}; the (2ℓ-1)!! form holds for {printed_ok}", parts.len())
        } else {
            format!("fails for {}", bad.join(" "))
        },
    ));
    out
}

pub fn soliton_checks(p: &Q, qq: &Q, a: Option<&Q>, cap: u32) -> Result<Vec<Check>, CkpError> {
    let r = soliton_tau_check(p, qq, cap)?;
    let mut out = vec![r.closed, r.printed_at_zero, r.printed];
    if let Some(a) = a {
        out.push(soliton_numeric_check(p, qq, a, cap)?);
    }
    Ok(out)
}

pub fn heat_checks(order: u32) -> Vec<Check> {
    vec![heat_check(&qi(1), order), heat_check(&qi(2), order)]
}

/// Formal group elements used by the acceptance suite.
pub fn standard_groups() -> Vec<(String, GroupElement)> {
    let a = SuperPoly::var(Var::param(PARAM_A, 0));
    vec![
        ("identity".into(), GroupElement::Identity),
        ("exp(a phi_1/2^2)".into(), GroupElement::heat(a)),
        ("soliton(1/2,1/3,1)".into(), GroupElement::soliton(q(1, 2), q(1, 3), SuperPoly::one()).unwrap()),
        ("diagonal pair".into(), formal_diagonal(7).0),
    ]
}

pub fn hirota_checks(groups: &[(String, GroupElement)], cap: u32) -> Vec<Check> {
    let a1 = DistinctOddPartition::new(vec![1]).unwrap();
    let mut sources: Vec<(String, Source)> = groups.iter().map(|(n, g)| (n.clone(), Source::Group(g.clone()))).collect();
    sources.push(("ket (1,1), not a tau function".into(), Source::State(basis_ket(&OddPartition::new(vec![1, 1]).unwrap()).0)));
    let results: Vec<Vec<Check>> = sources
        .par_iter()
        .map(|(name, src)| {
            let residual = hirota_residual(src, 2 * cap as i64);
            let fock_zero = residual.is_empty();
            let mut v = Vec::new();
            if !matches!(src, Source::State(_)) {
                v.push(Check::new(
                    format!("Fock bilinear identity, {name}, weight {cap}"),
                    fock_zero,
                    if fock_zero { "all components vanish".to_string() } else { format!("nonzero {}", residual[0]) },
                ));
            }
            match bilinear_residue_check(&a1, &a1, src, cap) {
                Ok(c) => v.push(Check::new(
                    format!("residue form agrees, {name}"),
                    c.pass == fock_zero,
                    format!("residue {}, Fock form {}", if c.pass { "zero" } else { "nonzero" }, if fock_zero { "zero" } else { "nonzero" }),
                )),
                Err(e) => v.push(Check::new(format!("residue form, {name}"), false, e.to_string())),
            }
            v
        })
        .collect();
    results.into_iter().flatten().collect()
}

pub fn correlator_checks(ks: &[u32], cap: u32) -> Vec<Check> {
    let mut out: Vec<Check> = ks.par_iter().map(|&k| super_correlator_checks(k, 2 * cap as i64)).flatten().collect();
    out.extend(pfaffian_correlator_checks(2, 2 * cap as i64));
    out.extend(pfaffian_correlator_checks(4, 8.min(2 * cap as i64)));
    out
}

/// All acceptance criteria, evaluated in parallel and returned in order.
pub fn acceptance_criteria(cap: Option<u32>) -> Vec<Criterion> {
    type Job = Box<dyn Fn() -> Criterion + Send + Sync>;
    let cl_cap = cap.unwrap_or(4);
    let sol_cap = cap.unwrap_or(4);
    let hir_cap = cap.unwrap_or(3);
    let jobs: Vec<Job> = vec![
        Box::new(|| Criterion { number: 1, title: "Pfaffian-Hafnian identity", checks: pfhf_checks(&[2, 4, 6, 8], 5, 7) }),
        Box::new(|| Criterion { number: 2, title: "oracle equivalence", checks: oracle_checks(10) }),
        Box::new(|| Criterion { number: 3, title: "small examples", checks: example_checks() }),
        Box::new(|| Criterion { number: 4, title: "orthonormality", checks: orthonormality_checks(9, 80) }),
        Box::new(move || Criterion { number: 5, title: "Cauchy-Littlewood", checks: vec![cauchy_littlewood_check(2 * cl_cap as i64)] }),
        Box::new(|| Criterion {
            number: 6,
            title: "super Miwa Cauchy-Littlewood",
            checks: vec![super_miwa_cl_check(1, 3, 0), super_miwa_cl_check(2, 2, 0)],
        }),
        Box::new(|| Criterion { number: 7, title: "parity law", checks: parity_checks(9) }),
        Box::new(|| Criterion { number: 8, title: "ball-process counts", checks: count_checks(10) }),
        Box::new(move || {
            let mut checks = soliton_checks(&q(1, 2), &q(1, 3), Some(&qi(1)), sol_cap).unwrap_or_else(|e| vec![Check::new("soliton", false, e.to_string())]);
            checks.extend(heat_checks(6));
            Criterion { number: 9, title: "one-soliton and heat-kernel tau", checks }
        }),
        Box::new(move || Criterion { number: 10, title: "Hirota bilinear identity", checks: hirota_checks(&standard_groups(), hir_cap) }),
        Box::new(|| Criterion { number: 11, title: "algebra relations", checks: algebra_relation_checks(10, 7) }),
        Box::new(|| Criterion { number: 12, title: "q-dimension characters", checks: qdim_checks(6) }),
        Box::new(|| Criterion { number: 13, title: "diagonal tau series", checks: vec![diagonal_tau_check(8)] }),
        Box::new(|| Criterion { number: 14, title: "super correlator", checks: correlator_checks(&[2, 4], 6) }),
    ];
    jobs.par_iter().map(|j| j()).collect()
}

fn poly_json(p: &SuperPoly) -> Value {
    p.to_json()
}

fn usage(e: &CkpError) -> i32 {
    eprintln!("error: {e}");
    2
}

fn emit(format: Format, reports: &[Report]) -> i32 {
    match format {
        Format::Json => {
            let v: Vec<Value> = reports.iter().map(Report::to_json).collect();
            let out = if v.len() == 1 { v[0].clone() } else { Value::Array(v) };
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
        }
        Format::Table => {
            for r in reports {
                print!("{}", r.to_table());
            }
        }
    }
    if reports.iter().all(Report::pass) {
        0
    } else {
        1
    }
}

fn verify(format: Format, suite: Suite) -> Result<i32, CkpError> {
    let report = |suite: &str, cap: Value, items: Vec<Check>| Report { suite: suite.into(), cap, items };
    let reports = match suite {
        Suite::Cl { cap } => vec![report("cl", json!(cap), vec![cauchy_littlewood_check(2 * cap as i64)])],
        Suite::Orthonormality { max_weight } => vec![report("orthonormality", json!(max_weight), orthonormality_checks(max_weight, 80))],
        Suite::Pfhf { orders, trials, seed } => {
            if let Some(n) = orders.iter().find(|n| *n % 2 == 1 || **n > 20) {
                return Err(CkpError::Invalid(format!("order {n} must be even and at most 20")));
            }
            vec![report("pfhf", json!({"orders": orders, "trials": trials, "seed": seed}), pfhf_checks(&orders, trials, seed))]
        }
        Suite::Soliton { p, q: qq, a, cap } => {
            let (p, qq, a) = (parse_rational(&p)?, parse_rational(&qq)?, parse_rational(&a)?);
            vec![report("soliton", json!(cap), soliton_checks(&p, &qq, Some(&a), cap)?)]
        }
        Suite::Hirota { g, cap } => {
            let groups = if g.is_empty() {
                standard_groups()
            } else {
                g.iter().map(|s| parse_group(s).map(|e| (s.clone(), e))).collect::<Result<Vec<_>, _>>()?
            };
            vec![report("hirota", json!(cap), hirota_checks(&groups, cap))]
        }
        Suite::Counts { max_weight } => vec![report("counts", json!(max_weight), count_checks(max_weight))],
        Suite::Qdim { cap } => vec![report("qdim", json!(cap), qdim_checks(cap))],
        Suite::Supermiwa { k, cap } => {
            if k == 0 || cap < 0 {
                return Err(CkpError::Invalid("k ≥ 1 and cap ≥ 0 required".into()));
            }
            vec![report("supermiwa", json!({"k": k, "order": cap}), supermiwa_checks(k, cap))]
        }
        Suite::Algebra { max_weight, max_mode } => {
            let m = parse_half(&max_mode)? as i32;
            vec![report("algebra", json!({"max_weight": max_weight, "max_mode": max_mode}), algebra_relation_checks(2 * max_weight as i64, m))]
        }
        Suite::Correlator { k, cap } => {
            if k.iter().any(|&k| k < 2) {
                return Err(CkpError::Invalid("k ≥ 2 required".into()));
            }
            vec![report("correlator", json!(cap), correlator_checks(&k, cap))]
        }
        Suite::All { cap } => acceptance_criteria(cap)
            .into_iter()
            .map(|c| report(&format!("criterion {}: {}", c.number, c.title), json!(cap), c.checks))
            .collect(),
    };
    Ok(emit(format, &reports))
}

fn execute(cli: Cli) -> Result<i32, CkpError> {
    let format = cli.format;
    match cli.command {
        Command::Clambda { partition, mode } => {
            let l = parse_partition(&partition)?;
            let c = match mode {
                Mode::Engine => c_lambda_engine(&l),
                Mode::Closed => c_lambda_closed(&l),
            };
            match format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({"partition": l.to_string(), "hat_c": poly_json(&c.hat_c), "D": c.d.to_string()}))
                        .expect("serializable")
                ),
                Format::Table => println!("hatC = {}\nD = {}", c.hat_c, c.d),
            }
            Ok(0)
        }
        Command::Verify(v) => verify(format, v.suite),
        Command::CountPaths { from, to } => {
            let n = ball_process_count(&parse_partition(&from)?, &parse_partition(&to)?);
            match format {
                Format::Json => println!("{}", json!({"from": from, "to": to, "count": n.to_string()})),
                Format::Table => println!("{n}"),
            }
            Ok(0)
        }
        Command::Tau { g, cap } => {
            let s = tau_series(&parse_group(&g)?, 2 * cap as i64);
            match format {
                Format::Json => {
                    let mut m = serde_json::Map::new();
                    for (l, v, d) in s.coefficients.values() {
                        m.insert(l.to_string(), json!({"g_hat": poly_json(v), "D": d.to_string()}));
                    }
                    println!("{}", serde_json::to_string_pretty(&json!({"g": g, "cap": cap, "coefficients": m})).expect("serializable"));
                }
                Format::Table => {
                    for (l, v, d) in s.coefficients.values() {
                        println!("{l}  {v}  D = {d}");
                    }
                }
            }
            Ok(0)
        }
        Command::Hirota { g, cap } => {
            let residual = hirota_residual(&Source::Group(parse_group(&g)?), 2 * cap as i64);
            match format {
                Format::Json => println!("{}", json!({"g": g, "cap": cap, "residual": residual})),
                Format::Table => {
                    if residual.is_empty() {
                        println!("all components vanish to weight {cap}");
                    }
                    for r in &residual {
                        println!("{r}");
                    }
                }
            }
            Ok(if residual.is_empty() { 0 } else { 1 })
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let jobs = cli.jobs;
    let work = move || execute(cli).unwrap_or_else(|e| usage(&e));
    match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(work),
            Err(e) => usage(&CkpError::Invalid(e.to_string())),
        },
        None => work(),
    }
}

/// Whether every seeded Pfaffian-Hafnian trial holds.
pub fn pfhf_all_pass(orders: &[usize], trials: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    orders.iter().all(|&n| (0..trials).all(|_| verify_pf_hf_identity(&random_points(&mut rng, n)).unwrap_or(false)))
}
