//! The polynomials `C_λ` and the identities built on them.
//!
//! Every `C_λ` is stored as `Ĉ_λ = d_λ C_λ` together with `D_λ = d_λ²`, so all
//! coefficients stay rational.

use crate::error::CkpError;
use crate::fock::{
    apply_exp_h, apply_gamma, apply_j, apply_phi, apply_phi_field, apply_theta_field, apply_theta_mode, apply_vertex_pair,
    ball_process_count, ball_process_count_brute, basis_ket, build_group_state, dual_pairing, hirota_tensor_of,
    vacuum_component, FockState, GroupElement,
};
use crate::matfun::{hafnian, pfaffian, SquareMatrix};
use crate::partitions::{
    d_squared, enumerate_op, insertion_sign, odd_partitions_of, DistinctOddPartition, OddPartition, OpFilter,
};
use crate::ring::{
    factorial, pow_q, q, qi, reversal_sign, Monomial, SuperPoly, Var, PARAM_A, PARAM_U, PARAM_W, PARAM_Z,
    Q, T, TAG_ZETA, TAG_ZETABAR, TBAR,
};
use crate::symfun::{complete_h_all, elementary_e_all, hook_schur_from, super_miwa_shifted, EvenTimes, FullTimes, MiwaPoint};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Outcome of one identity check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(id: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
        Check { id: id.into(), pass, detail: detail.into() }
    }

    /// Compare two polynomials and report the first differing monomial.
    pub fn equal(id: impl Into<String>, lhs: &SuperPoly, rhs: &SuperPoly) -> Check {
        match lhs.first_difference(rhs) {
            None => Check::new(id, true, format!("{} terms agree", lhs.len())),
            Some((m, a, b)) => Check::new(id, false, format!("first difference at {m}: {a} vs {b}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedC {
    pub lambda: OddPartition,
    pub hat_c: SuperPoly,
    pub d: Q,
}

fn is_odd_time(v: Var) -> bool {
    matches!(v, Var::Time { k, .. } if k % 2 == 1)
}

/// Drop the odd times of every alphabet.
pub fn kill_odd_times(p: &SuperPoly) -> SuperPoly {
    p.kill(is_odd_time)
}

/// `Ĉ_λ` from the Hafnian of hook Schur functions (even times only).
pub fn c_lambda_closed(lambda: &OddPartition) -> NormalizedC {
    let d = d_squared(lambda);
    let hat_c = if lambda.len() % 2 == 1 {
        SuperPoly::zero()
    } else if lambda.is_empty() {
        SuperPoly::one()
    } else {
        let n = lambda.weight();
        let t = EvenTimes::formal(T, n);
        let h = complete_h_all(n, &t);
        let e = elementary_e_all(n, &t);
        let idx = lambda.hook_indices();
        let m = SquareMatrix::from_fn(idx.len(), |i, j| hook_schur_from(idx[i], idx[j], &h, &e));
        hafnian(&m).expect("even order")
    };
    NormalizedC { lambda: lambda.clone(), hat_c, d }
}

/// `Ĉ_λ = ⟨0|Γ(t)φ_{λ₁/2}⋯φ_{λ_ℓ/2}|0⟩` in formal even and odd times of `alphabet`.
pub fn c_lambda_engine_in(lambda: &OddPartition, alphabet: u8) -> NormalizedC {
    let (ket, d) = basis_ket(lambda);
    let tv = FullTimes::formal(alphabet, lambda.weight());
    let hat_c = vacuum_component(&apply_gamma(&tv, &ket));
    NormalizedC { lambda: lambda.clone(), hat_c, d }
}

pub fn c_lambda_engine(lambda: &OddPartition) -> NormalizedC {
    c_lambda_engine_in(lambda, T)
}

/// Engine value at an explicit time vector.
pub fn c_lambda_at(lambda: &OddPartition, tv: &FullTimes) -> SuperPoly {
    let (ket, _) = basis_ket(lambda);
    vacuum_component(&apply_gamma(tv, &ket))
}

pub fn oracle_equivalence(lambda: &OddPartition) -> Check {
    let engine = kill_odd_times(&c_lambda_engine(lambda).hat_c);
    let closed = c_lambda_closed(lambda).hat_c;
    Check::equal(format!("engine=closed {lambda}"), &engine, &closed)
}

fn negate_times(p: &SuperPoly, alphabet: u8) -> SuperPoly {
    p.substitute(&|v| match v {
        Var::Time { alphabet: a, .. } if a == alphabet => -SuperPoly::var(v),
        other => SuperPoly::var(other),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParityReport {
    pub literal_exponent: u32,
    pub literal_holds: bool,
    pub weight_exponent: u32,
    pub weight_holds: bool,
}

/// Sign of `Ĉ_λ(−t)` on the even-time part, against the exponents `(|λ|+ℓ)/2` and `|λ|/2`.
pub fn c_parity_check(lambda: &OddPartition) -> ParityReport {
    let p = kill_odd_times(&c_lambda_engine(lambda).hat_c);
    let flipped = negate_times(&p, T);
    let holds = |e: u32| flipped == if e % 2 == 0 { p.clone() } else { -p.clone() };
    let literal_exponent = (lambda.weight() + lambda.len() as u32) / 2;
    let weight_exponent = lambda.weight() / 2;
    ParityReport {
        literal_exponent,
        literal_holds: (lambda.weight() + lambda.len() as u32) % 2 == 0 && holds(literal_exponent),
        weight_exponent,
        weight_holds: holds(weight_exponent),
    }
}

/// `Ŝ_{λ/μ}(t) = D_μ ⟨μ|Γ(t)|λ̂⟩` with unnormalized `|λ̂⟩`.
pub fn c_skew(lambda: &OddPartition, mu: &OddPartition, tv: &FullTimes) -> SuperPoly {
    let (ket, _) = basis_ket(lambda);
    dual_pairing(mu, &apply_gamma(tv, &ket))
}

fn sum_times(a: u8, b: u8, k2max: u32) -> FullTimes {
    let mut tv = FullTimes::new();
    for (k, v) in FullTimes::formal(a, k2max).iter() {
        tv.set(*k, v + &SuperPoly::var(Var::time(b, *k)));
    }
    tv
}

/// `Ĉ_λ(t + t̄) = Σ_μ (1/D_μ) Ŝ_{λ/μ}(t̄) Ĉ_μ(t)`.
pub fn branching_check(lambda: &OddPartition) -> Check {
    let n = lambda.weight();
    let lhs = c_lambda_at(lambda, &sum_times(T, TBAR, n));
    let bar = FullTimes::formal(TBAR, n);
    let mut rhs = SuperPoly::zero();
    for mu in enumerate_op(n, OpFilter::All) {
        let s = c_skew(lambda, &mu, &bar);
        if s.is_zero() {
            continue;
        }
        let c = c_lambda_engine_in(&mu, T);
        rhs.add_assign(&(&s * &c.hat_c).scale(&c.d.recip()));
    }
    Check::equal(format!("branching {lambda}"), &lhs, &rhs)
}

/// The `μ` with `Ŝ_{λ/μ} ≠ 0`.
pub fn skew_support(lambda: &OddPartition) -> Vec<OddPartition> {
    let bar = FullTimes::formal(TBAR, lambda.weight());
    enumerate_op(lambda.weight(), OpFilter::All).into_iter().filter(|mu| !c_skew(lambda, mu, &bar).is_zero()).collect()
}

/// Sign applied to the odd entries of the creation substitution list `J̄`.
pub const JBAR_ODD_SIGN: i64 = 1;

/// Coefficient and doubled mode index of the image of `t_{k2/2}` in `J` (or `J̄`).
pub fn j_image(k2: u32, bar: bool) -> (Q, i32) {
    if k2 % 2 == 0 {
        let n = (k2 / 2) as i64;
        if bar {
            (q(-2, n), -(k2 as i32))
        } else {
            (q(2, n), k2 as i32)
        }
    } else {
        let m = ((k2 - 1) / 2) as i64;
        let c = q(if m % 2 == 0 { 4 } else { -4 }, 2 * m + 1);
        if bar {
            (c * qi(JBAR_ODD_SIGN), -(k2 as i32))
        } else {
            (c, k2 as i32)
        }
    }
}

fn time_index(v: Var) -> Result<u32, CkpError> {
    match v {
        Var::Time { alphabet, k } if alphabet == T => Ok(k),
        other => Err(CkpError::Invalid(format!("scalar product expects times t, found {other}"))),
    }
}

/// Apply the operator image of a monomial, rightmost factor first.
fn apply_monomial_ops(m: &Monomial, bar: bool, s: &FockState) -> Result<FockState, CkpError> {
    let mut x = s.clone();
    for &(v, e) in m.even() {
        let (c, k2) = j_image(time_index(v)?, bar);
        for _ in 0..e {
            x = crate::fock::apply_mode(k2, &x).scale(&c);
        }
    }
    // g(J̄) reverses the order of odd factors, f(J) keeps it
    let odd: Vec<Var> = if bar { m.odd().to_vec() } else { m.odd().iter().rev().copied().collect() };
    for v in odd {
        let (c, k2) = j_image(time_index(v)?, bar);
        x = crate::fock::apply_mode(k2, &x).scale(&c);
    }
    Ok(x)
}

/// `⟨0|f(J) g(J̄)|0⟩` computed in the Fock engine.
pub fn scalar_product_engine(f: &SuperPoly, g: &SuperPoly) -> Result<Q, CkpError> {
    let mut ket = FockState::zero();
    for (m, c) in g.terms() {
        ket.add_scaled(&apply_monomial_ops(m, true, &FockState::vacuum())?, c);
    }
    let mut out = Q::zero();
    for (m, c) in f.terms() {
        let v = vacuum_component(&apply_monomial_ops(m, false, &ket)?);
        out += v.constant_term() * c;
    }
    Ok(out)
}

/// Single-variable pairing `⟨t_{k2/2}, t_{k2/2}⟩`.
pub fn pairing_constant(k2: u32) -> Q {
    if k2 % 2 == 0 {
        q(4, k2 as i64)
    } else {
        let m = ((k2 - 1) / 2) as i64;
        q(if m % 2 == 0 { 4 } else { -4 } * JBAR_ODD_SIGN, 2 * m + 1)
    }
}

/// Wick form of the scalar product: monomials pair diagonally.
pub fn scalar_product(f: &SuperPoly, g: &SuperPoly) -> Result<Q, CkpError> {
    let mut out = Q::zero();
    for (m, c) in f.terms() {
        let d = g.coeff(m);
        if d.is_zero() {
            continue;
        }
        let mut w = c * d;
        for &(v, e) in m.even() {
            let p = pairing_constant(time_index(v)?);
            w *= Q::from_integer(factorial(e as u64)) * pow_q(&p, e);
        }
        for &v in m.odd() {
            w *= pairing_constant(time_index(v)?);
        }
        out += w;
    }
    Ok(out)
}

/// `⟨Ĉ_λ, Ĉ_μ⟩ = D_λ δ_{λμ}` over all pairs of weight ≤ `max_weight`.
pub fn orthonormality_checks(max_weight: u32, engine_sample: usize) -> Vec<Check> {
    let cs: Vec<NormalizedC> = enumerate_op(max_weight, OpFilter::All).iter().map(c_lambda_engine).collect();
    let mut out = Vec::new();
    let mut sampled = 0usize;
    for a in &cs {
        for b in &cs {
            let expect = if a.lambda == b.lambda { a.d.clone() } else { Q::zero() };
            let v = scalar_product(&a.hat_c, &b.hat_c).expect("times of alphabet t");
            if v != expect {
                out.push(Check::new(format!("<C{},C{}>", a.lambda, b.lambda), false, format!("{v} instead of {expect}")));
            }
            if sampled < engine_sample && a.lambda.weight() == b.lambda.weight() {
                sampled += 1;
                let e = scalar_product_engine(&a.hat_c, &b.hat_c).expect("times of alphabet t");
                if e != v {
                    out.push(Check::new(format!("engine <C{},C{}>", a.lambda, b.lambda), false, format!("engine {e}, Wick {v}")));
                }
            }
        }
    }
    if out.is_empty() {
        out.push(Check::new(
            format!("orthonormality |λ|≤{max_weight}"),
            true,
            format!("{} pairs, {sampled} cross-checked in the engine", cs.len() * cs.len()),
        ));
    }
    out
}

/// `exp(−½Σ n t_n t̄_n − ½Σ_{m≥0} (−1)^m (m+½) t_{m+½} t̄_{m+½})` to joint doubled weight `cap2`.
pub fn cl_exponential(cap2: i64) -> SuperPoly {
    let mut e = SuperPoly::zero();
    for k2 in 1..=(cap2 / 2) as u32 {
        let a = SuperPoly::var(Var::time(T, k2));
        let b = SuperPoly::var(Var::time(TBAR, k2));
        let c = if k2 % 2 == 0 {
            if (k2 / 2) % 2 == 0 {
                continue;
            }
            q(-(k2 as i64) / 2, 2)
        } else {
            let m = ((k2 - 1) / 2) as i64;
            q(-(if m % 2 == 0 { 1 } else { -1 }) * k2 as i64, 4)
        };
        e.add_scaled(&(&a * &b), &c);
    }
    e.exp_truncated(cap2).expect("no constant term")
}

/// Reverse the order of the odd generators in every monomial.
pub fn reverse_odd_order(p: &SuperPoly) -> SuperPoly {
    let mut out = SuperPoly::zero();
    for (m, c) in p.terms() {
        out.add_term(m.clone(), c * qi(reversal_sign(m.odd().len()) as i64));
    }
    out
}

/// `Σ_λ (1/D_λ) Ĉ_λ(t) Ĉ_λ(−t̄)*` to joint doubled weight `cap2`, where `*` reverses odd products.
pub fn cl_sum(cap2: i64) -> SuperPoly {
    let mut out = SuperPoly::zero();
    for lambda in enumerate_op(cap2 as u32, OpFilter::All) {
        let c = c_lambda_engine(&lambda);
        let bar = reverse_odd_order(&negate_times(&rename_alphabet(&c.hat_c, TBAR), TBAR));
        out.add_assign(&c.hat_c.mul_truncated(&bar, Some(cap2)).scale(&c.d.recip()));
    }
    out
}

pub fn cauchy_littlewood_check(cap2: i64) -> Check {
    Check::equal(format!("Cauchy-Littlewood weight {}", cap2 as f64 / 2.0), &cl_exponential(cap2), &cl_sum(cap2))
}

fn pdeg(m: &Monomial, alphabet: u8) -> i32 {
    m.even().iter().filter(|(v, _)| matches!(v, Var::Param { alphabet: a, .. } if *a == alphabet)).map(|(_, e)| *e).sum()
}

fn miwa_points(alphabet: u8, tag: u8, k: u32) -> Vec<MiwaPoint> {
    (1..=k).map(|i| MiwaPoint { x: SuperPoly::var(Var::param(alphabet, i)), zeta: SuperPoly::var(Var::tag(tag, i)) }).collect()
}

/// `Σ_λ (1/D_λ)Ĉ_λ(x,ζ)Ĉ_λ(−(x̄,ζ̄))*` against `∏(1−u)/(1+u)(1−ζζ̄(1−u)/(1+u)²)`, `u = x_i x̄_j`,
/// compared up to degree `order` in the `x` and in the `x̄` separately.
pub fn super_miwa_cl_check(k: u32, order: i32, shift: u32) -> Check {
    let keep = move |m: &Monomial| pdeg(m, PARAM_Z) <= order && pdeg(m, PARAM_W) <= order;
    let pts = miwa_points(PARAM_Z, TAG_ZETA, k);
    let bars = miwa_points(PARAM_W, TAG_ZETABAR, k);
    // x-degree of a weight-w term is at least w − k/2 (one ζ per point)
    let wmax = 2 * order as u32 + k;
    let tv = super_miwa_shifted(&pts, wmax, shift);
    let tb = super_miwa_shifted(&bars, wmax, shift);
    let mut lhs = SuperPoly::zero();
    for lambda in enumerate_op(wmax, OpFilter::All) {
        let c = c_lambda_engine(&lambda);
        let a = c.hat_c.substitute(&tv.substitution(T)).filter(keep);
        let b = reverse_odd_order(&negate_times(&c.hat_c, T).substitute(&tb.substitution(T))).filter(keep);
        lhs.add_assign(&(&a * &b).filter(keep).scale(&c.d.recip()));
    }
    let mut rhs = SuperPoly::one();
    for i in 1..=k {
        for j in 1..=k {
            let u = SuperPoly::var(Var::param(PARAM_Z, i)) * SuperPoly::var(Var::param(PARAM_W, j));
            let zz = SuperPoly::var(Var::tag(TAG_ZETA, i)) * SuperPoly::var(Var::tag(TAG_ZETABAR, j));
            let mut f1 = SuperPoly::zero();
            let mut f2 = SuperPoly::zero();
            let mut un = SuperPoly::one();
            for n in 0..=order {
                let sgn = if n % 2 == 0 { 1 } else { -1 };
                f1.add_scaled(&un, &qi(if n == 0 { 1 } else { 2 * sgn }));
                f2.add_scaled(&un, &qi(sgn * (2 * n as i64 + 1)));
                un = (&un * &u).filter(keep);
            }
            let factor = &f1 * &(SuperPoly::one() - &zz * &f2);
            rhs = (&rhs * &factor.filter(keep)).filter(keep);
        }
    }
    Check::equal(format!("super Miwa CL k={k} order {order}"), &lhs, &rhs.filter(keep))
}

/// `:e^{Θ(z,ζ)}: s = V₋(z)V₊(z)s + ζφ(z)s` with `z = z_i`, `ζ = ζ_i`.
pub fn apply_super_vertex(i: u32, s: &FockState, cap2: i64) -> FockState {
    let z = Var::param(PARAM_Z, i);
    let mut out = apply_vertex_pair(z, s, cap2);
    let zeta = SuperPoly::var(Var::tag(TAG_ZETA, i));
    out.add_assign(&apply_phi_field(z, s, cap2).left_mul(&zeta));
    out
}

/// Closed form of `⟨0|:e^{Θ(z,ζ)}:|λ̂⟩` in `x = 1/z`.
pub fn single_supermiwa_closed(lambda: &OddPartition) -> SuperPoly {
    let x = Var::param(PARAM_Z, 1);
    let l = lambda.len() as i64;
    let half = (lambda.weight() / 2) as i32;
    if l % 2 == 0 {
        let dfact: i64 = (1..l).step_by(2).product();
        SuperPoly::monomial(qi((1i64 << (l / 2)) * dfact), &[(x, -half)], &[])
    } else if l == 1 {
        let n = (lambda.parts()[0] - 1) / 2;
        let c = if n % 2 == 0 { qi(1) } else { qi(-1) };
        SuperPoly::monomial(c, &[(x, -(n as i32) - 1)], &[Var::tag(TAG_ZETA, 1)])
    } else {
        SuperPoly::zero()
    }
}

/// The literal form, `2(2ℓ−1)!! z^{−|λ|/2}` or `ζ z^{−|λ|/2−½}`, in Ĉ form.
pub fn single_supermiwa_printed(lambda: &OddPartition) -> SuperPoly {
    let x = Var::param(PARAM_Z, 1);
    let l = lambda.len() as i64;
    if l % 2 == 0 {
        let dfact: i64 = (1..2 * l).step_by(2).product();
        SuperPoly::monomial(qi(2 * dfact), &[(x, -((lambda.weight() / 2) as i32))], &[])
    } else if l == 1 {
        SuperPoly::monomial(qi(1), &[(x, -((lambda.weight() / 2) as i32) - 1)], &[Var::tag(TAG_ZETA, 1)])
    } else {
        SuperPoly::zero()
    }
}

#[derive(Clone, Debug)]
pub struct SingleMiwaReport {
    pub vertex: SuperPoly,
    pub via_times: SuperPoly,
    pub closed: SuperPoly,
    pub printed: SuperPoly,
}

/// `Ĉ_λ` at one super Miwa point, by the vertex correlator and by substituting the
/// shifted super Miwa times into `Ĉ_λ(t)`.
pub fn c_single_supermiwa(lambda: &OddPartition) -> SingleMiwaReport {
    let (ket, _) = basis_ket(lambda);
    let vertex = vacuum_component(&apply_super_vertex(1, &ket, ket.max_weight2()));
    let z = Var::param(PARAM_Z, 1);
    let x = SuperPoly::monomial(Q::one(), &[(z, -1)], &[]);
    let pt = MiwaPoint { x, zeta: SuperPoly::var(Var::tag(TAG_ZETA, 1)) };
    let tv = super_miwa_shifted(&[pt], lambda.weight(), 1);
    let via_times = c_lambda_engine(lambda).hat_c.substitute(&tv.substitution(T));
    SingleMiwaReport { vertex, via_times, closed: single_supermiwa_closed(lambda), printed: single_supermiwa_printed(lambda) }
}

/// The Hafnian count `2^{ℓ/2}(|λ|/2)! ∏(1/m_i!) Hf[1/(n_i!n_j!(n_i+n_j+1))]`.
pub fn hafnian_count(lambda: &OddPartition) -> Q {
    let n = lambda.hook_indices();
    let fact = |k: u32| Q::from_integer(factorial(k as u64));
    let m = SquareMatrix::from_fn(n.len(), |i, j| (fact(n[i]) * fact(n[j]) * qi((n[i] + n[j] + 1) as i64)).recip());
    let hf = hafnian(&m).expect("even length");
    let mut out = hf * qi(1i64 << (lambda.len() / 2)) * fact(lambda.weight() / 2);
    for (_, &mi) in lambda.multiplicities().iter() {
        out /= fact(mi);
    }
    out
}

#[derive(Clone, Debug)]
pub struct CountReport {
    pub dp: BigInt,
    pub brute: BigInt,
    pub hafnian: Q,
    pub c_at_unit: Q,
    pub printed_relation: bool,
    pub corrected_relation: bool,
}

impl CountReport {
    pub fn counts_agree(&self) -> bool {
        self.dp == self.brute && Q::from_integer(self.dp.clone()) == self.hafnian
    }
}

/// `N_{0→λ}` by DP, brute force and Hafnian formula, and `Ĉ_λ(1,0,0,…)` against
/// `(½)^{ℓ/2}(1/(|λ|/2)!)N` in the literal form and with the extra factor `∏m_i!`.
pub fn count_formula_check(lambda: &OddPartition) -> CountReport {
    let empty = OddPartition::empty();
    let dp = BigInt::from(ball_process_count(&empty, lambda));
    let brute = BigInt::from(ball_process_count_brute(&empty, lambda));
    let hf = hafnian_count(lambda);
    let c = c_lambda_closed(lambda).hat_c;
    let at = c.eval_even(&|v| match v {
        Var::Time { k: 2, .. } => Some(qi(1)),
        Var::Time { .. } => Some(qi(0)),
        _ => None,
    });
    let c_at_unit = at.constant_term();
    let n = Q::from_integer(dp.clone());
    let base = n * pow_q(&q(1, 2), (lambda.len() / 2) as i32) / Q::from_integer(factorial((lambda.weight() / 2) as u64));
    let mfact: Q = lambda.multiplicities().values().map(|&m| Q::from_integer(factorial(m as u64))).product();
    CountReport {
        printed_relation: c_at_unit == base,
        corrected_relation: c_at_unit == &base * &mfact,
        dp,
        brute,
        hafnian: hf,
        c_at_unit,
    }
}

/// A vector prepared by a group element, or any fixed even state.
#[derive(Clone, Debug)]
pub enum Source {
    Group(GroupElement),
    State(FockState),
}

impl Source {
    pub fn state(&self, cap2: i64) -> FockState {
        match self {
            Source::Group(g) => build_group_state(g, cap2),
            Source::State(s) => s.truncate(cap2),
        }
    }
}

fn alpha_weight2(alpha: &DistinctOddPartition) -> i64 {
    alpha.weight() as i64
}

/// `⟨α|X⟩ = ⟨0|J_{α_n/2}⋯J_{α₁/2} X⟩`.
pub fn alpha_pairing(alpha: &DistinctOddPartition, x: &FockState) -> SuperPoly {
    let mut s = x.homogeneous(alpha_weight2(alpha));
    for &a in alpha.parts() {
        s = apply_theta_mode(a as i32, &s);
    }
    vacuum_component(&s)
}

/// `τ_α(t) = ⟨α|e^{H(t)} g|0⟩` up to t-weight `tcap`.
pub fn tau_coefficient(alpha: &DistinctOddPartition, src: &Source, tcap: u32) -> SuperPoly {
    let w2 = alpha_weight2(alpha) + 2 * tcap as i64;
    let gs = src.state(w2);
    let tv = FullTimes::from_even(&EvenTimes::formal(T, tcap));
    alpha_pairing(alpha, &apply_exp_h(&tv, &gs)).truncate(2 * tcap as i64)
}

/// Laurent coefficients in `z`, keyed by the exponent.
pub type ZSeries = BTreeMap<i64, SuperPoly>;

fn times_in(alphabet: u8, tcap: u32) -> FullTimes {
    let mut tv = FullTimes::new();
    for (j, v) in EvenTimes::formal(alphabet, tcap).iter() {
        tv.set(2 * j, v.clone());
    }
    tv
}

/// `g_α(t,z) = ⟨α|e^{H(t)}φ(z)g|0⟩` for exponents in `[zlo, zhi]`, complete to t-weight `tcap`.
pub fn wave_engine(alpha: &DistinctOddPartition, src: &Source, tcap: u32, zlo: i64, zhi: i64) -> ZSeries {
    let a2 = alpha_weight2(alpha);
    let tv = times_in(T, tcap);
    let mut out = ZSeries::new();
    for e in zlo..=zhi {
        let j2 = (2 * e + 1) as i32;
        let need = a2 + 2 * tcap as i64 - j2 as i64;
        if need < 0 {
            continue;
        }
        let gs = src.state(need);
        let y = apply_phi(j2, &gs);
        let v = alpha_pairing(alpha, &apply_exp_h(&tv, &y)).truncate(2 * tcap as i64);
        if !v.is_zero() {
            out.insert(e, v);
        }
    }
    out
}

/// Coefficient of `τ_{α∖α_i}` in the wave formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveNormalization {
    /// `α_i`, the literal coefficient.
    Printed,
    /// `α_i / 2`, matching the θ-mode normalization of the engine.
    Half,
}

fn shift_operator(p: &SuperPoly, tcap: u32, dmax: i64) -> ZSeries {
    // t_j ↦ t_j + (2/j) y^j with y = z^{-1}, expanded and regrouped by the power of y
    let y = Var::param(PARAM_A, 99);
    let keep = move |m: &Monomial| m.exponent(y) as i64 <= dmax;
    let image = |v: Var| match v {
        Var::Time { alphabet, k } if alphabet == T && k % 2 == 0 => {
            let j = (k / 2) as i32;
            let mut s = SuperPoly::var(v);
            s.add_term(Monomial::new(vec![(y, j)], vec![]).unwrap().0, q(2, j as i64));
            s
        }
        other => SuperPoly::var(other),
    };
    let mut out = ZSeries::new();
    let full = p.substitute(&image).filter(keep);
    for (m, c) in full.terms() {
        let d = m.exponent(y);
        let rest: Vec<(Var, i32)> = m.even().iter().copied().filter(|(v, _)| *v != y).collect();
        let (mm, _) = Monomial::new(rest, m.odd().to_vec()).unwrap();
        if mm.weight2() > 2 * tcap as i64 {
            continue;
        }
        out.entry(-(d as i64)).or_default().add_term(mm, c.clone());
    }
    out
}

/// Wave coefficient assembled from `τ`-coefficients; `zhi` must reach `tcap + (α₁−1)/2`.
pub fn wave_coefficient(
    alpha: &DistinctOddPartition,
    src: &Source,
    tcap: u32,
    zlo: i64,
    zhi: i64,
    norm: WaveNormalization,
) -> Result<ZSeries, CkpError> {
    let kmax = ((alpha.parts()[0] - 1) / 2) as i64;
    if zhi < tcap as i64 + kmax || zlo > zhi {
        return Err(CkpError::Invalid(format!("z-window [{zlo},{zhi}] too small for t-weight {tcap}")));
    }
    let tauw = (2 * tcap as i64 + kmax - zlo).max(0) as u32;
    // bracket: Σ_k f_k(t) z^k
    let mut bracket = ZSeries::new();
    for (i, &a) in alpha.parts().iter().enumerate() {
        let rest = crate::partitions::remove_part(alpha, i + 1)?;
        let e = ((a - 1) / 2) as i64;
        let sign = if i % 2 == 0 { 1 } else { -1 } * if e % 2 == 0 { 1 } else { -1 };
        let c = match norm {
            WaveNormalization::Printed => qi(a as i64),
            WaveNormalization::Half => q(a as i64, 2),
        };
        let tau = tau_coefficient(&rest, src, tauw);
        bracket.entry(e).or_default().add_scaled(&tau, &(c * qi(sign)));
    }
    let numax = 2 * (tcap as i64 - zlo) - 1;
    let mut nu = 1;
    while nu as i64 <= numax {
        if !alpha.parts().contains(&nu) {
            let ext = crate::partitions::add_part(alpha, nu)?;
            let s = insertion_sign(nu, alpha)?;
            let tau = tau_coefficient(&ext, src, tauw);
            bracket.entry(-((nu as i64 + 1) / 2)).or_default().add_scaled(&tau, &qi(2 * s as i64));
        }
        nu += 2;
    }
    let h = complete_h_all(tcap, &EvenTimes::formal(T, tcap));
    let mut out = ZSeries::new();
    for (k, f) in &bracket {
        let dmax = (tcap as i64 + k - zlo).max(0);
        for (dneg, part) in shift_operator(f, tcap, dmax) {
            for (n, hn) in h.iter().enumerate() {
                let e = n as i64 + k + dneg;
                if e < zlo || e > zhi {
                    continue;
                }
                let prod = hn.mul_truncated(&part, Some(2 * tcap as i64));
                out.entry(e).or_default().add_assign(&prod);
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

fn rename_alphabet(p: &SuperPoly, to: u8) -> SuperPoly {
    p.rename(&|v| match v {
        Var::Time { k, .. } => Var::time(to, k),
        o => o,
    })
}

/// `Res_z g_α(t,z) g_β(s,−z)` up to joint weight `tcap` in `(t,s)`.
pub fn bilinear_residue(
    alpha: &DistinctOddPartition,
    beta: &DistinctOddPartition,
    src: &Source,
    tcap: u32,
    norm: WaveNormalization,
) -> Result<SuperPoly, CkpError> {
    let kmax = ((alpha.parts()[0].max(beta.parts()[0]) - 1) / 2) as i64;
    let r = tcap as i64 + kmax;
    let (zlo, zhi) = (-r - 1, r);
    let ga = wave_coefficient(alpha, src, tcap, zlo, zhi, norm)?;
    let gb = wave_coefficient(beta, src, tcap, zlo, zhi, norm)?;
    let mut res = SuperPoly::zero();
    for (ea, a) in &ga {
        let eb = -1 - ea;
        if let Some(b) = gb.get(&eb) {
            let b = rename_alphabet(b, TBAR);
            let sign = if eb.rem_euclid(2) == 0 { qi(1) } else { qi(-1) };
            res.add_assign(&a.mul_truncated(&b, Some(2 * tcap as i64)).scale(&sign));
        }
    }
    Ok(res)
}

pub fn bilinear_residue_check(
    alpha: &DistinctOddPartition,
    beta: &DistinctOddPartition,
    src: &Source,
    tcap: u32,
) -> Result<Check, CkpError> {
    let r = bilinear_residue(alpha, beta, src, tcap, WaveNormalization::Half)?;
    Ok(Check::equal(format!("residue {alpha},{beta}"), &r, &SuperPoly::zero()))
}

/// Nonzero components of the Fock-form bilinear identity.
pub fn hirota_residual(src: &Source, cap2: i64) -> Vec<String> {
    hirota_tensor_of(&src.state(cap2), cap2)
        .into_iter()
        .map(|((a, b), c)| format!("{}⊗{}: {c}", crate::fock::partition_of(&a), crate::fock::partition_of(&b)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct TauSeries {
    pub cap2: i64,
    /// `λ ↦ (D_λ⟨λ|g|0⟩, D_λ)`.
    pub coefficients: BTreeMap<Vec<u32>, (OddPartition, SuperPoly, Q)>,
}

/// Coefficients of `τ = Σ (1/D_λ) ĝ_λ Ĉ_λ` with `ĝ_λ = D_λ⟨λ|g|0⟩` for `|λ| ≤ cap2`.
pub fn tau_series(g: &GroupElement, cap2: i64) -> TauSeries {
    let gs = build_group_state(g, cap2);
    let mut coefficients = BTreeMap::new();
    for lambda in enumerate_op(cap2 as u32, OpFilter::All) {
        let v = dual_pairing(&lambda, &gs);
        if !v.is_zero() {
            coefficients.insert(lambda.parts().to_vec(), (lambda.clone(), v, d_squared(&lambda)));
        }
    }
    TauSeries { cap2, coefficients }
}

impl TauSeries {
    /// `Σ (1/D_λ) ĝ_λ Ĉ_λ(t)`.
    pub fn tau(&self) -> SuperPoly {
        let mut out = SuperPoly::zero();
        for (lambda, g, d) in self.coefficients.values() {
            out.add_assign(&(g * &c_lambda_engine(lambda).hat_c).scale(&d.recip()));
        }
        out
    }
}

/// Expected `ĝ_λ = D_λ ∏ u_i^{m_i}/k_i!` for the diagonal element, zero unless every `m_i = 2k_i`.
pub fn diagonal_expected(lambda: &OddPartition, u: &BTreeMap<u32, SuperPoly>) -> SuperPoly {
    let mut out = SuperPoly::constant(d_squared(lambda));
    for (&part, &m) in lambda.multiplicities().iter() {
        if m % 2 == 1 {
            return SuperPoly::zero();
        }
        let ui = u.get(&part).cloned().unwrap_or_default();
        for _ in 0..m {
            out = &out * &ui;
        }
        out = out.scale(&Q::from_integer(factorial((m / 2) as u64)).recip());
    }
    out
}

/// Formal diagonal element with `u_i` generators for doubled indices up to `k2max`.
pub fn formal_diagonal(k2max: u32) -> (GroupElement, BTreeMap<u32, SuperPoly>) {
    let u: BTreeMap<u32, SuperPoly> = (1..=k2max).step_by(2).map(|k| (k, SuperPoly::var(Var::param(PARAM_U, k)))).collect();
    (GroupElement::DiagonalPair(u.clone()), u)
}

pub fn diagonal_tau_check(cap2: i64) -> Check {
    let (g, u) = formal_diagonal(cap2 as u32);
    let series = tau_series(&g, cap2);
    for lambda in enumerate_op(cap2 as u32, OpFilter::All) {
        let got = series.coefficients.get(lambda.parts()).map(|(_, v, _)| v.clone()).unwrap_or_default();
        let expect = diagonal_expected(&lambda, &u);
        if got != expect {
            return Check::new(format!("diagonal tau {lambda}"), false, format!("{got} instead of {expect}"));
        }
        if !got.is_zero() != lambda.has_even_multiplicities() {
            return Check::new(format!("diagonal support {lambda}"), false, "support is not the even-multiplicity set");
        }
    }
    Check::new(format!("diagonal tau |λ|≤{cap2}"), true, format!("{} nonzero coefficients", series.coefficients.len()))
}

/// `ξ(p) = Σ_{n odd} pⁿ t_n`.
fn xi_at(p: &Q, tcap: u32) -> SuperPoly {
    let mut out = SuperPoly::zero();
    for (j, v) in EvenTimes::formal(T, tcap).iter() {
        out.add_scaled(v, &pow_q(p, *j as i32));
    }
    out
}

fn joint_keep(tcap: u32) -> impl Fn(&Monomial) -> bool {
    move |m: &Monomial| m.weight2() <= 2 * tcap as i64 && pdeg(m, PARAM_A) <= tcap as i32
}

/// `⟨0|e^{H(t)} g|0⟩` to t-weight `tcap`.
pub fn tau_even(g: &GroupElement, tcap: u32) -> SuperPoly {
    let gs = build_group_state(g, 2 * tcap as i64);
    vacuum_component(&apply_exp_h(&times_in(T, tcap), &gs)).truncate(2 * tcap as i64)
}

/// `(e^{ξ(p)+ξ(q)} − 1)/(p+q)`.
fn kernel(p: &Q, qq: &Q, tcap: u32) -> SuperPoly {
    let e = (&xi_at(p, tcap) + &xi_at(qq, tcap)).exp_truncated(2 * tcap as i64).expect("no constant term");
    (e - SuperPoly::one()).scale(&(p + qq).recip())
}

/// `[(1 − (a/2)K_pq)² − (a²/4)K_pp K_qq]^{−½}`.
pub fn soliton_closed(p: &Q, qq: &Q, tcap: u32) -> SuperPoly {
    let keep = joint_keep(tcap);
    let a = SuperPoly::var(Var::param(PARAM_A, 0));
    let kpq = kernel(p, qq, tcap);
    let kpp = kernel(p, p, tcap);
    let kqq = kernel(qq, qq, tcap);
    let one_minus = SuperPoly::one() - (&a * &kpq).scale(&q(1, 2));
    let inner = (&one_minus * &one_minus) - (&(&a * &a) * &(&kpp * &kqq)).scale(&q(1, 4));
    SuperPoly::binomial_series(&(inner - SuperPoly::one()), &q(-1, 2), &keep).expect("zero constant")
}

/// `(1 − (a/(p+q)) e^{Σ(pⁿ+qⁿ)t_n})^{−½}`, the literal form.
pub fn soliton_printed(p: &Q, qq: &Q, tcap: u32) -> SuperPoly {
    let keep = joint_keep(tcap);
    let a = SuperPoly::var(Var::param(PARAM_A, 0));
    let e = (&xi_at(p, tcap) + &xi_at(qq, tcap)).exp_truncated(2 * tcap as i64).expect("no constant term");
    let x = -(&a * &e).scale(&(p + qq).recip());
    SuperPoly::binomial_series(&x, &q(-1, 2), &keep).expect("zero constant")
}

pub fn formal_soliton(p: &Q, qq: &Q) -> Result<GroupElement, CkpError> {
    GroupElement::soliton(p.clone(), qq.clone(), SuperPoly::var(Var::param(PARAM_A, 0)))
}

#[derive(Clone, Debug)]
pub struct SolitonReport {
    pub closed: Check,
    pub printed: Check,
    pub printed_at_zero: Check,
}

pub fn soliton_tau_check(p: &Q, qq: &Q, tcap: u32) -> Result<SolitonReport, CkpError> {
    let g = formal_soliton(p, qq)?;
    let engine = tau_even(&g, tcap).filter(joint_keep(tcap));
    let closed = soliton_closed(p, qq, tcap);
    let printed = soliton_printed(p, qq, tcap);
    let at_zero = |s: &SuperPoly| s.filter(|m| m.weight2() == 0);
    Ok(SolitonReport {
        closed: Check::equal("soliton closed form", &engine, &closed),
        printed: Check::equal("soliton literal form", &engine, &printed),
        printed_at_zero: Check::equal("soliton literal form at t=0", &at_zero(&engine), &at_zero(&printed)),
    })
}

/// Engine against the closed form at a rational `a`, expanded in the times only.
pub fn soliton_numeric_check(p: &Q, qq: &Q, a: &Q, tcap: u32) -> Result<Check, CkpError> {
    let g = GroupElement::soliton(p.clone(), qq.clone(), SuperPoly::constant(a.clone()))?;
    let engine = tau_even(&g, tcap);
    let keep = move |m: &Monomial| m.weight2() <= 2 * tcap as i64;
    let ka = SuperPoly::constant(a.clone());
    let kpq = kernel(p, qq, tcap);
    let kpp = kernel(p, p, tcap);
    let kqq = kernel(qq, qq, tcap);
    let one_minus = SuperPoly::one() - (&ka * &kpq).scale(&q(1, 2));
    let inner = (&one_minus * &one_minus) - (&(&ka * &ka) * &(&kpp * &kqq)).scale(&q(1, 4));
    let closed = SuperPoly::binomial_series(&(inner - SuperPoly::one()).filter(keep), &q(-1, 2), &keep)?;
    Ok(Check::equal(format!("soliton closed form at a={a}"), &engine, &closed))
}

/// `⟨0|e^{H(t)}e^{cφ_{1/2}²}|0⟩` against `(1 − r·c·t₁)^{−½}`.
pub fn heat_check(r: &Q, order: u32) -> Check {
    let c = SuperPoly::var(Var::param(PARAM_A, 0));
    let engine = tau_even(&GroupElement::heat(c.clone()), order);
    let x = (&c * &SuperPoly::var(Var::t(1))).scale(&-r.clone());
    let closed = SuperPoly::binomial_series(&x, &q(-1, 2), &joint_keep(order)).expect("zero constant");
    Check::equal(format!("heat kernel (1-{r}at1)^(-1/2)"), &engine, &closed)
}

/// Doubled ratio order of a monomial in `z_1,…,z_k`: `Σ_{j<k} Σ_{m>j}(2e_m + c_m)`, where
/// `c_m` is 1 for an odd field at point `m` (a ζ tag, or every point when `all_odd`).
pub fn ratio_order2(m: &Monomial, k: u32, all_odd: bool) -> i64 {
    let unit = |i: u32| -> i64 {
        let e = m.exponent(Var::param(PARAM_Z, i)) as i64;
        let c = if all_odd || m.odd().contains(&Var::tag(TAG_ZETA, i)) { 1 } else { 0 };
        2 * e + c
    };
    let units: Vec<i64> = (1..=k).map(unit).collect();
    (1..k as usize).map(|j| units[j..].iter().sum::<i64>()).sum()
}

fn prune_partial(s: &FockState, i: u32, k: u32, cap2: i64, all_odd: bool) -> FockState {
    s.prune(&|m: &Monomial, _| {
        let units: Vec<i64> = (1..=k)
            .map(|p| {
                let e = m.exponent(Var::param(PARAM_Z, p)) as i64;
                let c = if p >= i && (all_odd || m.odd().contains(&Var::tag(TAG_ZETA, p))) { 1 } else { 0 };
                2 * e + c
            })
            .collect();
        let lo = (i.max(2) - 1) as usize;
        let known: i64 = (lo..k as usize).map(|j| units[j..].iter().sum::<i64>()).sum();
        known <= cap2
    })
}

/// Correlator `⟨0|A(z_1)⋯A(z_k)|0⟩` with `apply(i, state, weight cap)`, truncated at doubled ratio order `cap2`.
fn correlator(k: u32, cap2: i64, all_odd: bool, apply: &dyn Fn(u32, &FockState, i64) -> FockState) -> SuperPoly {
    let mut s = FockState::vacuum();
    for i in (1..=k).rev() {
        s = apply(i, &s, cap2 / 2 + k as i64);
        s = prune_partial(&s, i, k, cap2, all_odd);
        // an intermediate state of weight w after point i contributes at least 2w
        if i > 1 {
            s = s.truncate(cap2);
        }
    }
    vacuum_component(&s).filter(|m| ratio_order2(m, k, all_odd) <= cap2)
}

/// `D_k = ⟨0|:e^{Θ(z_1,ζ_1)}:⋯:e^{Θ(z_k,ζ_k)}:|0⟩`.
pub fn super_correlator(k: u32, cap2: i64) -> SuperPoly {
    correlator(k, cap2, false, &|i, s, w| apply_super_vertex(i, s, 2 * w))
}

#[derive(Clone, Copy)]
enum PairKind {
    /// `(z_a − z_b)/(z_a + z_b)`
    Ratio,
    /// `(z_a + z_b)/(z_a − z_b)`
    InverseRatio,
    /// `1/(z_a + z_b)`
    Cauchy,
    /// `(z_a − z_b)/(z_a + z_b)²`
    Skew,
}

/// Expansion of a two-point function in `r = z_b/z_a`, `a < b`. The term `rⁿ` carries doubled
/// ratio order `2n(b−a)`, plus `b−a` for the two-point functions of odd fields once the odd
/// units of both points are counted; terms beyond `cap2` are dropped.
fn pair_series(a: u32, b: u32, kind: PairKind, cap2: i64) -> SuperPoly {
    let za = Var::param(PARAM_Z, a);
    let zb = Var::param(PARAM_Z, b);
    let gap = (b - a) as i64;
    let mut out = SuperPoly::zero();
    let mut n = 0i32;
    loop {
        let (c, pre, order) = match kind {
            PairKind::Ratio => (if n == 0 { 1 } else { 2 * alt(n) }, 0, 2 * n as i64 * gap),
            PairKind::InverseRatio => (if n == 0 { 1 } else { 2 }, 0, 2 * n as i64 * gap),
            PairKind::Cauchy => (alt(n), -1, (2 * n as i64 + 1) * gap),
            PairKind::Skew => (alt(n) * (2 * n + 1), -1, (2 * n as i64 + 1) * gap),
        };
        if order > cap2 {
            break;
        }
        out.add_assign(&SuperPoly::monomial(qi(c as i64), &[(za, pre - n), (zb, n)], &[]));
        n += 1;
    }
    out
}

fn alt(n: i32) -> i32 {
    if n % 2 == 0 {
        1
    } else {
        -1
    }
}

fn truncate_ratio(p: &SuperPoly, k: u32, cap2: i64, all_odd: bool) -> SuperPoly {
    p.filter(|m| ratio_order2(m, k, all_odd) <= cap2)
}

fn mul_ratio(a: &SuperPoly, b: &SuperPoly, k: u32, cap2: i64, all_odd: bool) -> SuperPoly {
    truncate_ratio(&(a * b), k, cap2, all_odd)
}

/// `(z_1+z_2)/(z_1−z_2) + ζ₂ζ₁/(z_1+z_2)`.
pub fn d2_closed(cap2: i64) -> SuperPoly {
    let zz = SuperPoly::var(Var::tag(TAG_ZETA, 2)) * SuperPoly::var(Var::tag(TAG_ZETA, 1));
    let a = pair_series(1, 2, PairKind::InverseRatio, cap2);
    let b = &zz * &pair_series(1, 2, PairKind::Cauchy, cap2);
    truncate_ratio(&(a + b), 2, cap2, false)
}

fn subsets_of_size(k: u32, size: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize == size {
            out.push((1..=k).filter(|i| mask & (1 << (i - 1)) != 0).collect());
        }
    }
    out
}

/// `∏_{a<b}(z_a−z_b)/(z_a+z_b) · Σ_n (−1)^n Σ_{|α|=2n} ζ_α Pf[(z_{α_i}−z_{α_j})/(z_{α_i}+z_{α_j})²]`,
/// with `ζ_α` taken in increasing index order, or decreasing when `descending`.
pub fn d_inverse_closed(k: u32, cap2: i64, descending: bool) -> SuperPoly {
    let mut pre = SuperPoly::one();
    for a in 1..=k {
        for b in a + 1..=k {
            pre = mul_ratio(&pre, &pair_series(a, b, PairKind::Ratio, cap2), k, cap2, false);
        }
    }
    let mut sum = SuperPoly::zero();
    for n in 0..=(k / 2) as usize {
        for alpha in subsets_of_size(k, 2 * n) {
            let mut zeta = SuperPoly::one();
            let order: Vec<u32> = if descending { alpha.iter().rev().copied().collect() } else { alpha.clone() };
            for &i in &order {
                zeta = &zeta * &SuperPoly::var(Var::tag(TAG_ZETA, i));
            }
            let m = SquareMatrix::from_fn(alpha.len(), |i, j| {
                if i == j {
                    SuperPoly::zero()
                } else if i < j {
                    pair_series(alpha[i], alpha[j], PairKind::Skew, cap2)
                } else {
                    -pair_series(alpha[j], alpha[i], PairKind::Skew, cap2)
                }
            });
            let pf = if alpha.is_empty() { SuperPoly::one() } else { pfaffian(&m).expect("skew") };
            let term = truncate_ratio(&(&zeta * &pf), k, cap2, false);
            sum.add_scaled(&term, &qi(if n % 2 == 0 { 1 } else { -1 }));
        }
    }
    mul_ratio(&pre, &sum, k, cap2, false)
}

pub fn super_correlator_checks(k: u32, cap2: i64) -> Vec<Check> {
    let d = super_correlator(k, cap2);
    let mut out = Vec::new();
    if k == 2 {
        out.push(Check::equal("D2 closed form", &d, &d2_closed(cap2)));
    }
    let prod = mul_ratio(&d, &d_inverse_closed(k, cap2, true), k, cap2, false);
    out.push(Check::equal(format!("D{k}·D{k}^-1 = 1"), &prod, &SuperPoly::one()));
    out
}

/// `⟨0|θ(z_1)⋯θ(z_n)|0⟩`.
pub fn theta_correlator(n: u32, cap2: i64) -> SuperPoly {
    correlator(n, cap2, true, &|i, s, w| apply_theta_field(Var::param(PARAM_Z, i), s, 2 * w))
}

/// `⟨0|φ(z_1)⋯φ(z_n)|0⟩`.
pub fn phi_correlator(n: u32, cap2: i64) -> SuperPoly {
    correlator(n, cap2, true, &|i, s, w| apply_phi_field(Var::param(PARAM_Z, i), s, 2 * w))
}

/// Pfaffian and Hafnian forms of the θ- and φ-correlators, and their ratio `∏(z_i−z_j)/(z_i+z_j)`.
pub fn pfaffian_correlator_checks(n: u32, cap2: i64) -> Vec<Check> {
    let idx: Vec<u32> = (1..=n).collect();
    let skew = SquareMatrix::from_fn(n as usize, |i, j| {
        if i == j {
            SuperPoly::zero()
        } else if i < j {
            pair_series(idx[i], idx[j], PairKind::Skew, cap2)
        } else {
            -pair_series(idx[j], idx[i], PairKind::Skew, cap2)
        }
    });
    let sym = SquareMatrix::from_fn(n as usize, |i, j| {
        let (a, b) = if i < j { (idx[i], idx[j]) } else { (idx[j], idx[i]) };
        if i == j {
            SuperPoly::zero()
        } else {
            pair_series(a, b, PairKind::Cauchy, cap2)
        }
    });
    let pf = truncate_ratio(&pfaffian(&skew).expect("skew"), n, cap2, true);
    let hf = truncate_ratio(&hafnian(&sym).expect("even"), n, cap2, true);
    let theta = theta_correlator(n, cap2);
    let phi = phi_correlator(n, cap2);
    let mut pre = SuperPoly::one();
    for a in 1..=n {
        for b in a + 1..=n {
            pre = mul_ratio(&pre, &pair_series(a, b, PairKind::Ratio, cap2), n, cap2, false);
        }
    }
    vec![
        Check::equal(format!("theta {n}-point = Pf"), &theta, &pf),
        Check::equal(format!("phi {n}-point = Hf"), &phi, &hf),
        Check::equal(format!("theta {n}-point = prefactor·phi"), &theta, &mul_ratio(&pre, &phi, n, cap2, true)),
    ]
}

fn basis_states(max_w2: i64) -> Vec<FockState> {
    (0..=max_w2).flat_map(|w| odd_partitions_of(w as u32)).map(|l| basis_ket(&l).0).collect()
}

fn half_sign(j2: i32) -> i64 {
    if ((j2 - 1) / 2).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Boson, Heisenberg, shift and super-current relations on every basis state of doubled weight
/// `≤ max_w2`, for doubled mode indices `|k2| ≤ max_mode2`.
pub fn algebra_relation_checks(max_w2: i64, max_mode2: i32) -> Vec<Check> {
    let states = basis_states(max_w2);
    let odd: Vec<i32> = (-max_mode2..=max_mode2).filter(|k| k.rem_euclid(2) == 1).collect();
    let currents: Vec<i32> = (-(max_mode2 / 2)..=max_mode2 / 2).filter(|n| n.rem_euclid(2) == 1).collect();
    let mut failures: BTreeMap<&'static str, String> = BTreeMap::new();
    let mut note = |id: &'static str, msg: String| {
        failures.entry(id).or_insert(msg);
    };
    for s in &states {
        for &i2 in &odd {
            for &j2 in &odd {
                let mut c = apply_phi(i2, &apply_phi(j2, s));
                c.add_scaled(&apply_phi(j2, &apply_phi(i2, s)), &qi(-1));
                let expect = if i2 == -j2 { s.scale(&qi(half_sign(j2))) } else { FockState::zero() };
                if c != expect {
                    note("boson commutator", format!("[phi_{i2}/2, phi_{j2}/2]"));
                }
                let mut a = apply_theta_mode(i2, &apply_theta_mode(j2, s));
                a.add_assign(&apply_theta_mode(j2, &apply_theta_mode(i2, s)));
                let expect = if i2 == -j2 { s.scale(&q(half_sign(i2) * i2 as i64, 4)) } else { FockState::zero() };
                if a != expect {
                    note("super-current anticommutator", format!("{{J_{i2}/2, J_{j2}/2}}"));
                }
            }
            for &n in &currents {
                let mut c = apply_j(n, &apply_phi(i2, s));
                c.add_scaled(&apply_phi(i2, &apply_j(n, s)), &qi(-1));
                if c != apply_phi(i2 - 2 * n, s) {
                    note("current shifts phi", format!("[J_{n}, phi_{i2}/2]"));
                }
                let mut c = apply_j(n, &apply_theta_mode(i2, s));
                c.add_scaled(&apply_theta_mode(i2, &apply_j(n, s)), &qi(-1));
                if !c.is_zero() {
                    note("J commutes with theta", format!("[J_{n}, J_{i2}/2]"));
                }
            }
        }
        for &n in &currents {
            for &m in &currents {
                let mut c = apply_j(n, &apply_j(m, s));
                c.add_scaled(&apply_j(m, &apply_j(n, s)), &qi(-1));
                let expect = if m == -n { s.scale(&q(-n as i64, 2)) } else { FockState::zero() };
                if c != expect {
                    note("Heisenberg commutator", format!("[J_{n}, J_{m}]"));
                }
            }
        }
    }
    ["boson commutator", "Heisenberg commutator", "current shifts phi", "super-current anticommutator", "J commutes with theta"]
        .iter()
        .map(|id| match failures.get(id) {
            Some(msg) => Check::new(*id, false, format!("fails for {msg}")),
            None => Check::new(*id, true, format!("{} basis states", states.len())),
        })
        .collect()
}

/// `e^{Σ_{n,m} x_n A_{nm} x_m} = Σ A_λ x_λ`: coefficient of `x_λ`, `x_k` for the part `k`.
pub fn quadratic_expected(a: &BTreeMap<(u32, u32), SuperPoly>, lambda: &OddPartition) -> SuperPoly {
    let mut expo = SuperPoly::zero();
    let xv = |k: u32| Var::param(PARAM_W, k);
    for (&(n, m), c) in a {
        expo.add_assign(&(c * &SuperPoly::monomial(Q::one(), &[(xv(n), 1), (xv(m), 1)], &[])));
    }
    let target: Vec<(Var, i32)> = lambda.multiplicities().iter().map(|(&p, &m)| (xv(p), m as i32)).collect();
    let deg = lambda.len() as i32;
    let keep = |mm: &Monomial| pdeg(mm, PARAM_W) <= deg;
    let mut out = SuperPoly::one();
    let mut power = SuperPoly::one();
    for k in 1..=(deg / 2) as i64 {
        power = (&power * &expo).filter(keep).scale(&q(1, k));
        out.add_assign(&power);
    }
    let mut coeff = SuperPoly::zero();
    for (mm, c) in out.terms() {
        let mut ev: Vec<(Var, i32)> = mm.even().iter().copied().filter(|(v, _)| matches!(v, Var::Param { alphabet: PARAM_W, .. })).collect();
        ev.sort();
        let mut tg = target.clone();
        tg.sort();
        if ev == tg {
            let rest: Vec<(Var, i32)> = mm.even().iter().copied().filter(|(v, _)| !matches!(v, Var::Param { alphabet: PARAM_W, .. })).collect();
            coeff.add_term(Monomial::new(rest, mm.odd().to_vec()).unwrap().0, c.clone());
        }
    }
    coeff
}

/// Reversal sign between descending-part `ξ_α` and canonical ascending order.
pub fn xi_reversal_sign(alpha: &DistinctOddPartition) -> i32 {
    reversal_sign(alpha.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> OddPartition {
        OddPartition::parse(s).unwrap()
    }

    fn t(j: u32) -> SuperPoly {
        SuperPoly::var(Var::t(j))
    }

    fn to(k: u32) -> SuperPoly {
        SuperPoly::var(Var::t_odd(k))
    }

    #[test]
    fn small_polynomials() {
        let c1 = c_lambda_engine(&p("1"));
        assert_eq!(c1.d, qi(1));
        assert_eq!(c1.hat_c, to(1).scale(&q(1, 2)));
        let c11 = c_lambda_engine(&p("1,1"));
        assert_eq!(c11.d, qi(2));
        assert_eq!(kill_odd_times(&c11.hat_c), t(1));
        assert_eq!(c_lambda_closed(&p("3,1")).hat_c, c_lambda_closed(&p("3,1")).hat_c);
        assert!(c_lambda_closed(&p("3")).hat_c.is_zero());
        assert_eq!(c_lambda_closed(&p("")).hat_c, SuperPoly::one());
    }

    #[test]
    fn engine_matches_closed_small() {
        for l in enumerate_op(6, OpFilter::All) {
            assert!(oracle_equivalence(&l).pass, "{l}");
        }
    }

    #[test]
    fn homogeneity_and_parity() {
        for l in enumerate_op(7, OpFilter::All) {
            let c = c_lambda_engine(&l).hat_c;
            assert!(c.terms().all(|(m, _)| m.weight2() == l.weight() as i64), "{l}");
            assert!(c.terms().all(|(m, _)| m.odd().len() % 2 == l.len() % 2), "{l}");
        }
    }

    #[test]
    fn parity_law() {
        let r = c_parity_check(&p("1,1"));
        assert!(!r.literal_holds);
        assert!(r.weight_holds);
        for l in enumerate_op(7, OpFilter::All) {
            assert!(c_parity_check(&l).weight_holds, "{l}");
        }
    }

    #[test]
    fn scalar_product_basics() {
        assert_eq!(scalar_product(&SuperPoly::one(), &SuperPoly::one()).unwrap(), qi(1));
        assert_eq!(scalar_product(&t(1), &t(1)).unwrap(), qi(2));
        assert_eq!(scalar_product_engine(&t(1), &t(1)).unwrap(), qi(2));
        for k2 in [1u32, 2, 3, 5, 6] {
            let v = SuperPoly::var(Var::time(T, k2));
            assert_eq!(scalar_product_engine(&v, &v).unwrap(), pairing_constant(k2), "k2={k2}");
        }
        let m = &to(1) * &to(3);
        assert_eq!(scalar_product_engine(&m, &m).unwrap(), scalar_product(&m, &m).unwrap());
        let m2 = &t(1) * &t(1);
        assert_eq!(scalar_product_engine(&m2, &m2).unwrap(), scalar_product(&m2, &m2).unwrap());
    }

    #[test]
    fn orthonormality_small() {
        let r = orthonormality_checks(5, 400);
        assert!(r.iter().all(|c| c.pass), "{r:?}");
    }

    #[test]
    fn branching_small() {
        for l in enumerate_op(4, OpFilter::All) {
            let c = branching_check(&l);
            assert!(c.pass, "{c:?}");
        }
        let zero = c_skew(&p("1,1"), &p("3"), &FullTimes::formal(T, 2));
        assert!(zero.is_zero());
        assert_eq!(skew_support(&p("1,1")), vec![p(""), p("1,1")]);
        assert!(skew_support(&p("3")).contains(&p("1,1")));
        let same = c_skew(&p("3,1"), &p("3,1"), &FullTimes::formal(T, 4));
        assert_eq!(same, SuperPoly::constant(qi(-1)));
    }

    #[test]
    fn cauchy_littlewood_small() {
        for cap2 in 0..=3 {
            let c = cauchy_littlewood_check(cap2);
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn super_miwa_small() {
        let c = super_miwa_cl_check(1, 2, 0);
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn single_point() {
        for l in enumerate_op(7, OpFilter::All) {
            let r = c_single_supermiwa(&l);
            assert_eq!(r.vertex, r.closed, "{l}");
            assert_eq!(r.via_times, r.closed, "{l}");
        }
        let r = c_single_supermiwa(&p("1,1"));
        assert_ne!(r.vertex, r.printed);
    }

    #[test]
    fn counts() {
        for k in 1..=4 {
            let l = OddPartition::new(vec![1; 2 * k]).unwrap();
            let r = count_formula_check(&l);
            assert!(r.counts_agree());
            assert_eq!(r.dp, BigInt::one());
        }
        let r = count_formula_check(&p("3,1"));
        assert_eq!(r.dp, BigInt::from(2));
        assert!(r.counts_agree() && r.corrected_relation);
        assert!(!count_formula_check(&p("1,1")).printed_relation);
    }

    #[test]
    fn tau_examples() {
        let id = Source::Group(GroupElement::Identity);
        assert_eq!(tau_coefficient(&DistinctOddPartition::empty(), &id, 3), SuperPoly::one());
        let a = SuperPoly::var(Var::param(PARAM_A, 0));
        let heat = Source::Group(GroupElement::heat(a));
        let a31 = DistinctOddPartition::parse("3,1").unwrap();
        let t31 = tau_coefficient(&a31, &heat, 2);
        assert_eq!(t31.filter(|m| m.weight2() == 0), SuperPoly::monomial(q(-3, 2), &[(Var::param(PARAM_A, 0), 2)], &[]));
        let a1 = DistinctOddPartition::parse("1").unwrap();
        assert!(tau_coefficient(&a1, &heat, 3).is_zero());
    }

    #[test]
    fn wave_formula_matches_engine() {
        let a = SuperPoly::var(Var::param(PARAM_A, 0));
        let a1 = DistinctOddPartition::parse("1").unwrap();
        let a531 = DistinctOddPartition::parse("5,3,1").unwrap();
        let heat = Source::Group(GroupElement::heat(a));
        for src in [Source::Group(GroupElement::Identity), heat.clone()] {
            let eng = wave_engine(&a1, &src, 2, -4, 3);
            let half = wave_coefficient(&a1, &src, 2, -4, 3, WaveNormalization::Half).unwrap();
            assert_eq!(eng, half);
            assert_eq!(wave_engine(&a531, &src, 2, -4, 4), wave_coefficient(&a531, &src, 2, -4, 4, WaveNormalization::Half).unwrap());
        }
        assert_ne!(wave_engine(&a1, &heat, 2, -4, 3), wave_coefficient(&a1, &heat, 2, -4, 3, WaveNormalization::Printed).unwrap());
        let g1 = wave_engine(&a1, &Source::Group(GroupElement::Identity), 0, -3, 0);
        assert_eq!(g1.get(&0), Some(&SuperPoly::constant(q(1, 2))));
        assert!(wave_coefficient(&a1, &Source::Group(GroupElement::Identity), 2, -4, 1, WaveNormalization::Half).is_err());
    }

    #[test]
    fn residues() {
        let a1 = DistinctOddPartition::parse("1").unwrap();
        let a = SuperPoly::var(Var::param(PARAM_A, 0));
        for g in [GroupElement::Identity, GroupElement::heat(a)] {
            assert!(bilinear_residue_check(&a1, &a1, &Source::Group(g), 2).unwrap().pass);
        }
        let ket = Source::State(basis_ket(&p("1,1")).0);
        assert!(!bilinear_residue_check(&a1, &a1, &ket, 2).unwrap().pass);
        assert!(!hirota_residual(&ket, 6).is_empty());
        assert!(hirota_residual(&Source::Group(GroupElement::heat(SuperPoly::var(Var::param(PARAM_A, 0)))), 6).is_empty());
    }

    #[test]
    fn diagonal_and_quadratic_series() {
        assert!(diagonal_tau_check(6).pass);
        assert_eq!(tau_series(&GroupElement::Identity, 6).tau(), SuperPoly::one());
        let mut a = BTreeMap::new();
        let v = |i| SuperPoly::var(Var::param(PARAM_A, i));
        a.insert((1, 1), v(1));
        a.insert((1, 3), v(2));
        a.insert((3, 1), v(2));
        a.insert((3, 3), v(3));
        let g = GroupElement::quadratic(a.clone()).unwrap();
        let s = tau_series(&g, 8);
        for l in enumerate_op(8, OpFilter::All) {
            let got = s.coefficients.get(l.parts()).map(|(_, x, _)| x.clone()).unwrap_or_default();
            assert_eq!(got, quadratic_expected(&a, &l).scale(&d_squared(&l)), "{l}");
        }
    }

    #[test]
    fn soliton_forms() {
        let r = soliton_tau_check(&q(1, 2), &q(1, 3), 3).unwrap();
        assert!(r.closed.pass, "{:?}", r.closed);
        assert!(!r.printed_at_zero.pass);
        assert!(heat_check(&qi(2), 4).pass);
        assert!(!heat_check(&qi(1), 4).pass);
    }

    #[test]
    fn soliton_equal_momenta() {
        // p = q: τ = (1+a/(2p))^{−½}(1 − (a'/(2p))e^{2ξ(p)})^{−½} with a' = a/(1 + a/(2p))
        let pp = q(1, 3);
        let tcap = 3;
        let keep = joint_keep(tcap);
        let a = SuperPoly::var(Var::param(PARAM_A, 0));
        let engine = tau_even(&formal_soliton(&pp, &pp).unwrap(), tcap).filter(&keep);
        let x = a.scale(&(qi(2) * &pp).recip());
        let inv = SuperPoly::binomial_series(&x, &qi(-1), &keep).unwrap();
        let a_prime = (&a * &inv).filter(&keep);
        let e = xi_at(&pp, tcap).scale(&qi(2)).exp_truncated(2 * tcap as i64).unwrap();
        let inner = -(&a_prime * &e).filter(&keep).scale(&(qi(2) * &pp).recip());
        let right = SuperPoly::binomial_series(&inner, &q(-1, 2), &keep).unwrap();
        let left = SuperPoly::binomial_series(&x, &q(-1, 2), &keep).unwrap();
        assert_eq!(engine, (&left * &right).filter(&keep));
    }

    #[test]
    fn correlators_small() {
        for c in super_correlator_checks(2, 6) {
            assert!(c.pass, "{c:?}");
        }
        for c in pfaffian_correlator_checks(2, 8) {
            assert!(c.pass, "{c:?}");
        }
    }
}
