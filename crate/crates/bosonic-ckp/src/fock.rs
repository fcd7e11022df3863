//! Polynomial realization of the free-boson Fock space and its operators.
//!
//! A state is a polynomial in `z_{1/2}, z_{3/2}, …` with coefficients in [`SuperPoly`];
//! `φ_{m+½}` multiplies by `z_{m+½}` and `φ_{−m−½}` acts as `(−1)^m ∂/∂z_{m+½}`.
//! Mode operators are Grassmann odd: they pass coefficients with the parity sign.

use crate::error::CkpError;
use crate::partitions::{d_squared, OddPartition};
use crate::ring::{q, qi, Monomial, SuperPoly, Var, Q};
use crate::symfun::FullTimes;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashMap};

/// Exponents of `z_{1/2}, z_{3/2}, …` with trailing zeros trimmed.
pub type ZMono = Vec<u32>;

pub fn zmono_weight2(m: &ZMono) -> i64 {
    m.iter().enumerate().map(|(i, &e)| (2 * i as i64 + 1) * e as i64).sum()
}

pub fn zmono_of(lambda: &OddPartition) -> ZMono {
    let mut m: ZMono = Vec::new();
    for &p in lambda.parts() {
        let i = ((p - 1) / 2) as usize;
        if m.len() <= i {
            m.resize(i + 1, 0);
        }
        m[i] += 1;
    }
    m
}

pub fn partition_of(m: &ZMono) -> OddPartition {
    let mut parts = Vec::new();
    for (i, &e) in m.iter().enumerate().rev() {
        parts.extend(std::iter::repeat(2 * i as u32 + 1).take(e as usize));
    }
    OddPartition::new(parts).expect("odd parts")
}

fn trim(m: &mut ZMono) {
    while m.last() == Some(&0) {
        m.pop();
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockState {
    terms: BTreeMap<ZMono, SuperPoly>,
}

impl FockState {
    pub fn zero() -> FockState {
        FockState::default()
    }

    pub fn vacuum() -> FockState {
        FockState::monomial(Vec::new(), SuperPoly::one())
    }

    pub fn monomial(m: ZMono, c: SuperPoly) -> FockState {
        let mut s = FockState::zero();
        s.add_term(m, c);
        s
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ZMono, &SuperPoly)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, mut m: ZMono, c: SuperPoly) {
        if c.is_zero() {
            return;
        }
        trim(&mut m);
        match self.terms.get_mut(&m) {
            Some(e) => {
                e.add_assign(&c);
                if e.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add_assign(&mut self, other: &FockState) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, other: &FockState, c: &Q) {
        if c.is_zero() {
            return;
        }
        for (m, d) in &other.terms {
            self.add_term(m.clone(), d.scale(c));
        }
    }

    pub fn scale(&self, c: &Q) -> FockState {
        let mut out = FockState::zero();
        out.add_scaled(self, c);
        out
    }

    /// Multiply every coefficient on the left by `c`.
    pub fn left_mul(&self, c: &SuperPoly) -> FockState {
        let mut out = FockState::zero();
        for (m, d) in &self.terms {
            out.add_term(m.clone(), c * d);
        }
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(&SuperPoly) -> SuperPoly) -> FockState {
        let mut out = FockState::zero();
        for (m, d) in &self.terms {
            out.add_term(m.clone(), f(d));
        }
        out
    }

    pub fn coeff(&self, m: &ZMono) -> SuperPoly {
        let mut key = m.clone();
        trim(&mut key);
        self.terms.get(&key).cloned().unwrap_or_default()
    }

    pub fn max_weight2(&self) -> i64 {
        self.terms.keys().map(zmono_weight2).max().unwrap_or(0)
    }

    pub fn truncate(&self, cap2: i64) -> FockState {
        FockState { terms: self.terms.iter().filter(|(m, _)| zmono_weight2(m) <= cap2).map(|(m, c)| (m.clone(), c.clone())).collect() }
    }

    /// Keep coefficient monomials accepted by `keep(monomial, fock doubled weight)`.
    pub fn prune(&self, keep: &dyn Fn(&Monomial, i64) -> bool) -> FockState {
        let mut out = FockState::zero();
        for (m, c) in &self.terms {
            let w = zmono_weight2(m);
            out.add_term(m.clone(), c.filter(|mm| keep(mm, w)));
        }
        out
    }

    pub fn homogeneous(&self, w2: i64) -> FockState {
        FockState { terms: self.terms.iter().filter(|(m, _)| zmono_weight2(m) == w2).map(|(m, c)| (m.clone(), c.clone())).collect() }
    }

    /// Product of two creation polynomials; coefficients are multiplied left to right.
    pub fn mul(&self, other: &FockState, cap2: i64) -> FockState {
        let mut out = FockState::zero();
        for (ma, ca) in &self.terms {
            let wa = zmono_weight2(ma);
            for (mb, cb) in &other.terms {
                if wa + zmono_weight2(mb) > cap2 {
                    continue;
                }
                let n = ma.len().max(mb.len());
                let m: ZMono = (0..n).map(|i| ma.get(i).copied().unwrap_or(0) + mb.get(i).copied().unwrap_or(0)).collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    fn involution(&self) -> FockState {
        if self.terms.values().all(|c| c.is_grassmann_even()) {
            return self.clone();
        }
        self.map_coeffs(|c| c.involution())
    }

    pub fn first_nonzero(&self) -> Option<(ZMono, SuperPoly)> {
        self.terms.iter().next().map(|(m, c)| (m.clone(), c.clone()))
    }
}

/// `⟨0|s⟩`: the coefficient of the constant monomial.
pub fn vacuum_component(s: &FockState) -> SuperPoly {
    s.coeff(&Vec::new())
}

/// `φ_{j}` with doubled signed odd index `j2`.
pub fn apply_phi(j2: i32, s: &FockState) -> FockState {
    assert!(j2 % 2 != 0, "mode index must be a half-integer");
    let mut out = FockState::zero();
    let m = ((j2.unsigned_abs() - 1) / 2) as usize;
    for (mono, c) in s.involution().terms {
        let mut mono = mono;
        if j2 > 0 {
            if mono.len() <= m {
                mono.resize(m + 1, 0);
            }
            mono[m] += 1;
            out.add_term(mono, c);
        } else {
            let e = mono.get(m).copied().unwrap_or(0);
            if e == 0 {
                continue;
            }
            mono[m] -= 1;
            let sign = if m % 2 == 0 { 1 } else { -1 };
            out.add_term(mono, c.scale(&qi(sign * e as i64)));
        }
    }
    out
}

/// Normally ordered current `J_n = ½ Σ_j (−1)^{j+½} :φ_j φ_{−j−n}:`; zero for even `n`.
pub fn apply_j(n: i32, s: &FockState) -> FockState {
    if n % 2 == 0 || s.is_zero() {
        return FockState::zero();
    }
    let w2 = s.max_weight2() as i32;
    if 2 * n > w2 {
        return FockState::zero();
    }
    let mut out = FockState::zero();
    let bound = w2 + 2 * n.abs() + 1;
    let mut j2 = -bound;
    while j2 <= bound {
        if j2 % 2 == 0 {
            j2 += 1;
            continue;
        }
        let p2 = -j2 - 2 * n;
        let (first, second) = if j2 >= p2 { (p2, j2) } else { (j2, p2) };
        if first < 0 && -first > w2 {
            j2 += 2;
            continue;
        }
        let inner = apply_phi(first, s);
        if !inner.is_zero() {
            let outer = apply_phi(second, &inner);
            let sign = if ((j2 + 1) / 2).rem_euclid(2) == 0 { 1 } else { -1 };
            out.add_scaled(&outer, &q(sign, 2));
        }
        j2 += 2;
    }
    out
}

/// Coefficients `A_r` of `z^{−r}` in `V₊(z)^{±1} s`, for `r = 0..=weight`.
pub fn vplus_components(s: &FockState, inverse: bool) -> Vec<FockState> {
    let rmax = (s.max_weight2() / 2) as usize;
    let c = if inverse { -1 } else { 1 };
    let mut a = vec![s.clone()];
    for r in 1..=rmax {
        let mut acc = FockState::zero();
        for k in (1..=r).step_by(2) {
            acc.add_assign(&apply_j(k as i32, &a[r - k]));
        }
        a.push(acc.scale(&q(2 * c, r as i64)));
    }
    a
}

/// Coefficients `B_m` of `z^m` in `V₋(z)^{±1} s`, for `m = 0..=mmax`.
pub fn vminus_components(s: &FockState, inverse: bool, mmax: usize) -> Vec<FockState> {
    let c = if inverse { 1 } else { -1 };
    let mut b = vec![s.clone()];
    for m in 1..=mmax {
        let mut acc = FockState::zero();
        for k in (1..=m).step_by(2) {
            acc.add_assign(&apply_j(-(k as i32), &b[m - k]));
        }
        b.push(acc.scale(&q(2 * c, m as i64)));
    }
    b
}

/// `V_±(z)^{±1} s` as a Laurent series in `z` (integer exponents as keys), with the
/// weight-raising side truncated at `cap2`.
pub fn apply_v(plus: bool, inverse: bool, s: &FockState, cap2: i64) -> BTreeMap<i64, FockState> {
    let mut out = BTreeMap::new();
    if plus {
        for (r, a) in vplus_components(s, inverse).into_iter().enumerate() {
            if !a.is_zero() {
                out.insert(-(r as i64), a);
            }
        }
    } else {
        let min_w2 = s.terms().map(|(m, _)| zmono_weight2(m)).min().unwrap_or(0);
        let mmax = ((cap2 - min_w2).max(0) / 2) as usize;
        for (m, b) in vminus_components(s, inverse, mmax).into_iter().enumerate() {
            let b = b.truncate(cap2);
            if !b.is_zero() {
                out.insert(m as i64, b);
            }
        }
    }
    out
}

/// Half-integer current mode `J_i` (doubled index `i2`), the coefficient of
/// `z^{−i−½}` in `½ V₋(z)^{−1} φ(z) V₊(z)^{−1}`.
pub fn apply_theta_mode(i2: i32, s: &FockState) -> FockState {
    assert!(i2 % 2 != 0, "theta mode index must be a half-integer");
    if s.is_zero() {
        return FockState::zero();
    }
    let w2 = s.max_weight2();
    if i2 as i64 > w2 {
        return FockState::zero();
    }
    let target = (-(i2 as i64) - 1) / 2;
    let a = vplus_components(s, true);
    let mut grouped: BTreeMap<usize, FockState> = BTreeMap::new();
    for (r, ar) in a.iter().enumerate() {
        if ar.is_zero() {
            continue;
        }
        let r = r as i64;
        let lo = -(w2 - 2 * r);
        let hi = 2 * (target + r) + 1;
        let mut j2 = lo;
        while j2 <= hi {
            if j2.rem_euclid(2) == 1 {
                let m = target + r - (j2 - 1) / 2;
                debug_assert!(m >= 0);
                let y = apply_phi(j2 as i32, ar);
                if !y.is_zero() {
                    grouped.entry(m as usize).or_default().add_assign(&y);
                }
            }
            j2 += 1;
        }
    }
    let mut out = FockState::zero();
    for (m, y) in grouped {
        let b = vminus_components(&y, true, m);
        out.add_assign(&b[m]);
    }
    out.scale(&q(1, 2))
}

/// Any current mode with doubled index: odd `k2` gives a theta mode, even `k2` the
/// Heisenberg mode `J_{k2/2}`.
pub fn apply_mode(k2: i32, s: &FockState) -> FockState {
    if k2 % 2 == 0 {
        apply_j(k2 / 2, s)
    } else {
        apply_theta_mode(k2, s)
    }
}

fn exp_action(s: &FockState, step: &dyn Fn(&FockState) -> FockState) -> FockState {
    let mut out = s.clone();
    let mut term = s.clone();
    let mut k = 1i64;
    loop {
        term = step(&term).scale(&q(1, k));
        if term.is_zero() {
            break;
        }
        out.add_assign(&term);
        k += 1;
    }
    out
}

/// `e^{H(t)} s` with `H = Σ t_n J_n` over the even part of `tv`.
pub fn apply_exp_h(tv: &FullTimes, s: &FockState) -> FockState {
    let pairs: Vec<(i32, SuperPoly)> = tv.iter().filter(|(k, _)| *k % 2 == 0).map(|(k, v)| ((*k / 2) as i32, v.clone())).collect();
    exp_action(s, &|x: &FockState| {
        let w2 = x.max_weight2();
        let mut acc = FockState::zero();
        for (n, t) in &pairs {
            if 2 * *n as i64 > w2 {
                continue;
            }
            acc.add_assign(&apply_j(*n, x).left_mul(t));
        }
        acc
    })
}

/// `e^{χ(t)} s` with `χ = Σ t_i J_i` over the odd part of `tv`, summed in increasing mode index.
pub fn apply_exp_chi(tv: &FullTimes, s: &FockState) -> FockState {
    let pairs: Vec<(i32, SuperPoly)> = tv.iter().filter(|(k, _)| *k % 2 == 1).map(|(k, v)| (*k as i32, v.clone())).collect();
    exp_action(s, &|x: &FockState| {
        let w2 = x.max_weight2();
        let mut acc = FockState::zero();
        for (i2, t) in &pairs {
            if *i2 as i64 > w2 {
                continue;
            }
            acc.add_assign(&apply_theta_mode(*i2, x).left_mul(t));
        }
        acc
    })
}

/// `Γ(t) s = e^{H(t)} e^{χ(t)} s`.
pub fn apply_gamma(tv: &FullTimes, s: &FockState) -> FockState {
    apply_exp_h(tv, &apply_exp_chi(tv, s))
}

/// The unnormalized product state `φ_{λ₁/2}⋯φ_{λ_k/2}|0⟩` and `D_λ`.
pub fn basis_ket(lambda: &OddPartition) -> (FockState, Q) {
    (FockState::monomial(zmono_of(lambda), SuperPoly::one()), d_squared(lambda))
}

/// Unnormalized pairing `D_λ · ⟨λ|…` : the `z^λ` coefficient times `D_λ`, with
/// coefficients pulled in front of the bra.
pub fn dual_pairing(lambda: &OddPartition, s: &FockState) -> SuperPoly {
    s.coeff(&zmono_of(lambda)).scale(&d_squared(lambda))
}

/// `⟨0|φ_{−λ_k/2}⋯φ_{−λ₁/2} s⟩` computed by the derivative realization, with the
/// operators' parity signs on the coefficients.
pub fn dual_pairing_by_operators(lambda: &OddPartition, s: &FockState) -> SuperPoly {
    let mut x = s.clone();
    for &p in lambda.parts() {
        x = apply_phi(-(p as i32), &x);
    }
    vacuum_component(&x)
}

/// Formal-variable field expansions. The result carries powers of the even parameter
/// `zvar` in its coefficients.
pub fn apply_phi_field(zvar: Var, s: &FockState, cap2: i64) -> FockState {
    let w2 = s.max_weight2();
    let mut out = FockState::zero();
    let mut j2 = -w2;
    while j2 <= cap2 - 0 {
        if j2.rem_euclid(2) == 1 {
            let y = apply_phi(j2 as i32, s).truncate(cap2);
            if !y.is_zero() {
                let e = ((j2 - 1) / 2) as i32;
                out.add_assign(&y.map_coeffs(|c| c.shift_even(zvar, e)));
            }
        }
        j2 += 1;
    }
    out
}

/// `θ(z) s = 2 Σ_i J_i s z^{−i−½}`, truncated at output weight `cap2`.
pub fn apply_theta_field(zvar: Var, s: &FockState, cap2: i64) -> FockState {
    let w2 = s.max_weight2();
    let mut out = FockState::zero();
    let mut i2 = -(cap2);
    while i2 <= w2 {
        if i2.rem_euclid(2) == 1 {
            let y = apply_theta_mode(i2 as i32, s).truncate(cap2);
            if !y.is_zero() {
                let e = ((-i2 - 1) / 2) as i32;
                out.add_assign(&y.map_coeffs(|c| c.shift_even(zvar, e).scale(&qi(2))));
            }
        }
        i2 += 1;
    }
    out
}

/// `V₋(z)V₊(z) s`, truncated at weight `cap2`.
pub fn apply_vertex_pair(zvar: Var, s: &FockState, cap2: i64) -> FockState {
    let mut out = FockState::zero();
    for (r, a) in vplus_components(s, false).into_iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (e, b) in apply_v(false, false, &a, cap2) {
            let shift = (e - r as i64) as i32;
            out.add_assign(&b.map_coeffs(|c| c.shift_even(zvar, shift)));
        }
    }
    out
}

/// Group elements of the form `exp(quadratic form in creation modes)`.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement {
    Identity,
    /// `exp Σ A_{nm} φ_{n/2} φ_{m/2}` over doubled odd indices.
    Quadratic(BTreeMap<(u32, u32), SuperPoly>),
    /// `exp((a/2) φ₊(p) φ₊(q))` with the creation part of `φ(p)φ(q)`.
    Soliton { p: Q, q: Q, a: SuperPoly },
    /// `exp Σ_i w_i φ_i²` with `w_i = e^{−2U_i}`, given as `u_i = e^{−U_i}` per doubled index.
    DiagonalPair(BTreeMap<u32, SuperPoly>),
}

impl GroupElement {
    pub fn quadratic(a: BTreeMap<(u32, u32), SuperPoly>) -> Result<GroupElement, CkpError> {
        for (&(n, m), v) in &a {
            if n % 2 == 0 || m % 2 == 0 {
                return Err(CkpError::Invalid(format!("quadratic index ({n},{m}) must be odd")));
            }
            if a.get(&(m, n)).cloned().unwrap_or_default() != *v {
                return Err(CkpError::Invalid("quadratic coefficient map must be symmetric".into()));
            }
        }
        Ok(GroupElement::Quadratic(a))
    }

    pub fn soliton(p: Q, q: Q, a: SuperPoly) -> Result<GroupElement, CkpError> {
        if (&p + &q).is_zero() {
            return Err(CkpError::Invalid("soliton requires p + q ≠ 0".into()));
        }
        Ok(GroupElement::Soliton { p, q, a })
    }

    /// `exp(c φ_{1/2}²)`.
    pub fn heat(c: SuperPoly) -> GroupElement {
        let mut a = BTreeMap::new();
        a.insert((1, 1), c);
        GroupElement::Quadratic(a)
    }

    /// The exponent as a creation polynomial truncated at `cap2`.
    pub fn exponent(&self, cap2: i64) -> FockState {
        let mut out = FockState::zero();
        let unit = |i: usize, j: usize| -> ZMono {
            let mut m = vec![0u32; i.max(j) + 1];
            m[i] += 1;
            m[j] += 1;
            m
        };
        match self {
            GroupElement::Identity => {}
            GroupElement::Quadratic(a) => {
                for (&(n, m), c) in a {
                    if (n + m) as i64 <= cap2 {
                        out.add_term(unit((n as usize - 1) / 2, (m as usize - 1) / 2), c.clone());
                    }
                }
            }
            GroupElement::Soliton { p, q: qq, a } => {
                let half = a.scale(&q(1, 2));
                let maxm = (cap2 / 2).max(0) as usize;
                for i in 0..=maxm {
                    for j in 0..=maxm {
                        if (2 * i + 1 + 2 * j + 1) as i64 > cap2 {
                            continue;
                        }
                        let c = crate::ring::pow_q(p, i as i32) * crate::ring::pow_q(qq, j as i32);
                        out.add_term(unit(i, j), half.scale(&c));
                    }
                }
            }
            GroupElement::DiagonalPair(u) => {
                for (&k, ui) in u {
                    if 2 * k as i64 <= cap2 {
                        let i = (k as usize - 1) / 2;
                        out.add_term(unit(i, i), ui * ui);
                    }
                }
            }
        }
        out
    }
}

/// `g|0⟩` truncated to weight `cap2`.
pub fn build_group_state(g: &GroupElement, cap2: i64) -> FockState {
    let x = g.exponent(cap2);
    let mut out = FockState::vacuum();
    let mut term = FockState::vacuum();
    let mut k = 1i64;
    loop {
        term = term.mul(&x, cap2).scale(&q(1, k));
        if term.is_zero() {
            break;
        }
        out.add_assign(&term);
        k += 1;
    }
    out
}

/// Components of `Σ_k (−1)^{k+½} φ_k g|0⟩ ⊗ φ_{−k} g|0⟩` of combined weight ≤ `cap2`; all
/// must vanish for a solution of the bilinear identity.
pub fn hirota_tensor(g: &GroupElement, cap2: i64) -> BTreeMap<(ZMono, ZMono), SuperPoly> {
    hirota_tensor_of(&build_group_state(g, cap2), cap2)
}

/// The same tensor for an arbitrary even state in place of `g|0⟩`.
pub fn hirota_tensor_of(gs: &FockState, cap2: i64) -> BTreeMap<(ZMono, ZMono), SuperPoly> {
    let gs = gs.truncate(cap2 + 1);
    let mut out: BTreeMap<(ZMono, ZMono), SuperPoly> = BTreeMap::new();
    let kmax = cap2 + 1;
    let mut k2 = -kmax;
    while k2 <= kmax {
        if k2.rem_euclid(2) == 1 {
            let left = apply_phi(k2 as i32, &gs);
            let right = apply_phi(-k2 as i32, &gs);
            let sign = if ((k2 + 1) / 2).rem_euclid(2) == 0 { qi(1) } else { qi(-1) };
            for (ml, cl) in left.terms() {
                let wl = zmono_weight2(ml);
                for (mr, cr) in right.terms() {
                    if wl + zmono_weight2(mr) > cap2 {
                        continue;
                    }
                    let c = (cl * cr).scale(&sign);
                    let e = out.entry((ml.clone(), mr.clone())).or_default();
                    e.add_assign(&c);
                }
            }
        }
        k2 += 1;
    }
    out.retain(|_, c| !c.is_zero());
    out
}

pub fn hirota_check(g: &GroupElement, cap2: i64) -> Vec<((ZMono, ZMono), SuperPoly)> {
    hirota_tensor(g, cap2).into_iter().collect()
}

/// Ball-process configurations: multiplicities per basket `i` (part `2i+1`).
type Config = Vec<u32>;

fn config_of(p: &OddPartition) -> Config {
    zmono_of(p)
}

/// `N_{μ→λ}` by dynamic programming over configurations.
pub fn ball_process_count(mu: &OddPartition, lambda: &OddPartition) -> BigUint {
    let (wm, wl) = (mu.weight(), lambda.weight());
    if wl < wm || (wl - wm) % 2 == 1 {
        return BigUint::zero();
    }
    let steps = (wl - wm) / 2;
    let mut layer: HashMap<Config, BigUint> = HashMap::new();
    layer.insert(config_of(mu), BigUint::one());
    for _ in 0..steps {
        let mut next: HashMap<Config, BigUint> = HashMap::new();
        for (c, n) in &layer {
            let mut a = c.clone();
            if a.is_empty() {
                a.push(0);
            }
            a[0] += 2;
            *next.entry(a).or_default() += n;
            for i in 0..c.len() {
                if c[i] == 0 {
                    continue;
                }
                let mut b = c.clone();
                b[i] -= 1;
                if b.len() <= i + 1 {
                    b.resize(i + 2, 0);
                }
                b[i + 1] += 1;
                trim(&mut b);
                *next.entry(b).or_default() += n * BigUint::from(c[i]);
            }
        }
        layer = next;
    }
    layer.remove(&config_of(lambda)).unwrap_or_default()
}

/// `N_{μ→λ}` by enumerating every event sequence with distinguishable balls.
pub fn ball_process_count_brute(mu: &OddPartition, lambda: &OddPartition) -> BigUint {
    fn rec(balls: &mut Vec<u32>, steps: u32, target: &OddPartition) -> BigUint {
        if steps == 0 {
            let mut parts: Vec<u32> = balls.iter().map(|&b| 2 * b + 1).collect();
            parts.sort_unstable_by(|a, b| b.cmp(a));
            return if parts == target.parts() { BigUint::one() } else { BigUint::zero() };
        }
        let mut total = BigUint::zero();
        balls.push(0);
        balls.push(0);
        total += rec(balls, steps - 1, target);
        balls.pop();
        balls.pop();
        for i in 0..balls.len() {
            balls[i] += 1;
            total += rec(balls, steps - 1, target);
            balls[i] -= 1;
        }
        total
    }
    let (wm, wl) = (mu.weight(), lambda.weight());
    if wl < wm || (wl - wm) % 2 == 1 {
        return BigUint::zero();
    }
    let mut balls: Vec<u32> = mu.parts().iter().map(|p| (p - 1) / 2).collect();
    rec(&mut balls, (wl - wm) / 2, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{enumerate_op, OpFilter};
    use crate::ring::{Var, PARAM_A};

    fn basis_states(max_w2: i64) -> Vec<FockState> {
        let mut out = Vec::new();
        for w in 0..=max_w2 {
            for l in crate::partitions::odd_partitions_of(w as u32) {
                out.push(basis_ket(&l).0);
            }
        }
        out
    }

    fn p(s: &str) -> OddPartition {
        OddPartition::parse(s).unwrap()
    }

    fn zs(m: &[u32]) -> FockState {
        FockState::monomial(m.to_vec(), SuperPoly::one())
    }

    #[test]
    fn phi_examples() {
        assert!(apply_phi(-1, &FockState::vacuum()).is_zero());
        assert_eq!(apply_phi(1, &FockState::vacuum()), zs(&[1]));
    }

    #[test]
    fn boson_relations() {
        for s in basis_states(10) {
            for i2 in (-9..=9).step_by(2) {
                for j2 in (-9..=9).step_by(2) {
                    let mut lhs = apply_phi(i2, &apply_phi(j2, &s));
                    lhs.add_scaled(&apply_phi(j2, &apply_phi(i2, &s)), &qi(-1));
                    let expect = if i2 == -j2 {
                        let sign = if ((j2 - 1) / 2).rem_euclid(2) == 0 { 1 } else { -1 };
                        s.scale(&qi(sign))
                    } else {
                        FockState::zero()
                    };
                    assert_eq!(lhs, expect, "phi_{i2}/2, phi_{j2}/2");
                }
            }
        }
    }

    #[test]
    fn current_examples() {
        assert!(apply_j(1, &FockState::vacuum()).is_zero());
        assert!(apply_j(2, &zs(&[2])).is_zero());
        // J_{-1} lowers z_{3/2} into z_{5/2} through −φ_{5/2}φ_{−3/2}, with φ_{−3/2} = −∂
        let s = zs(&[2, 1]);
        let out = apply_j(-1, &s);
        assert_eq!(out.coeff(&vec![4, 1]), SuperPoly::constant(q(-1, 2)));
        assert_eq!(out.coeff(&vec![1, 2]), SuperPoly::constant(qi(2)));
        assert_eq!(out.coeff(&vec![2, 0, 1]), SuperPoly::constant(qi(1)));
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn heisenberg_relations() {
        for s in basis_states(10) {
            for n in (-7..=7).step_by(2) {
                for m in (-7..=7).step_by(2) {
                    let mut lhs = apply_j(n, &apply_j(m, &s));
                    lhs.add_scaled(&apply_j(m, &apply_j(n, &s)), &qi(-1));
                    let expect = if m == -n { s.scale(&q(-n as i64, 2)) } else { FockState::zero() };
                    assert_eq!(lhs, expect, "J_{n}, J_{m}");
                }
            }
        }
    }

    #[test]
    fn current_shifts_phi() {
        for s in basis_states(8) {
            for n in (-5..=5).step_by(2) {
                for k2 in (-7..=7).step_by(2) {
                    let mut lhs = apply_j(n, &apply_phi(k2, &s));
                    lhs.add_scaled(&apply_phi(k2, &apply_j(n, &s)), &qi(-1));
                    let expect = apply_phi(k2 - 2 * n, &s);
                    assert_eq!(lhs, expect, "[J_{n}, phi_{k2}/2]");
                }
            }
        }
    }

    #[test]
    fn theta_mode_basics() {
        assert!(apply_theta_mode(1, &FockState::vacuum()).is_zero());
        assert_eq!(apply_theta_mode(-1, &FockState::vacuum()), zs(&[1]).scale(&q(1, 2)));
        let (k, _) = basis_ket(&p("1"));
        assert_eq!(vacuum_component(&apply_theta_mode(1, &k)), SuperPoly::constant(q(1, 2)));
    }

    #[test]
    fn supercurrent_relations() {
        for s in basis_states(10) {
            for j2 in (-7..=7).step_by(2) {
                for k2 in (-7..=7).step_by(2) {
                    let mut lhs = apply_theta_mode(j2, &apply_theta_mode(k2, &s));
                    lhs.add_assign(&apply_theta_mode(k2, &apply_theta_mode(j2, &s)));
                    let expect = if j2 == -k2 {
                        let sign = if ((j2 - 1) / 2).rem_euclid(2) == 0 { 1 } else { -1 };
                        s.scale(&q(sign * j2 as i64, 4))
                    } else {
                        FockState::zero()
                    };
                    assert_eq!(lhs, expect, "{{J_{j2}/2, J_{k2}/2}}");
                }
                for n in (-3..=3).step_by(2) {
                    let mut c = apply_j(n, &apply_theta_mode(j2, &s));
                    c.add_scaled(&apply_theta_mode(j2, &apply_j(n, &s)), &qi(-1));
                    assert!(c.is_zero(), "[J_{n}, J_{j2}/2]");
                }
            }
        }
    }

    #[test]
    fn modes_shift_weight() {
        for s in basis_states(10) {
            let w = s.max_weight2();
            for k2 in -7..=7 {
                let out = apply_mode(k2, &s);
                assert!(out.terms().all(|(m, _)| zmono_weight2(m) == w - k2 as i64));
            }
            for k2 in (-7..=7).step_by(2) {
                assert!(apply_phi(k2, &s).terms().all(|(m, _)| zmono_weight2(m) == w + k2 as i64));
            }
        }
    }

    #[test]
    fn vminus_first_order() {
        let b = vminus_components(&FockState::vacuum(), true, 1);
        assert_eq!(b[1], apply_j(-1, &FockState::vacuum()).scale(&qi(2)));
        let v = apply_v(true, false, &FockState::vacuum(), 4);
        assert_eq!(v.len(), 1);
        assert_eq!(v[&0], FockState::vacuum());
    }

    #[test]
    fn ball_counts() {
        assert_eq!(ball_process_count(&p(""), &p("1,1")), BigUint::one());
        for k in 1..=4 {
            let l = OddPartition::new(vec![1; 2 * k]).unwrap();
            assert_eq!(ball_process_count(&p(""), &l), BigUint::one());
        }
        assert_eq!(ball_process_count(&p(""), &p("3,1")), BigUint::from(2u32));
        assert_eq!(ball_process_count(&p(""), &p("3")), BigUint::zero());
        for l in enumerate_op(10, OpFilter::All) {
            assert_eq!(ball_process_count(&p(""), &l), ball_process_count_brute(&p(""), &l), "{l}");
            assert_eq!(ball_process_count(&p("1"), &l), ball_process_count_brute(&p("1"), &l), "{l}");
        }
    }

    #[test]
    fn group_states() {
        let a = SuperPoly::var(Var::param(PARAM_A, 0));
        let g = build_group_state(&GroupElement::heat(a.clone()), 4);
        assert_eq!(g.truncate(2), FockState::vacuum().add_term_chain(vec![2], a.clone()));
        assert_eq!(build_group_state(&GroupElement::Quadratic(BTreeMap::new()), 6), FockState::vacuum());
        assert!(GroupElement::soliton(q(1, 2), q(-1, 2), a).is_err());
    }

    impl FockState {
        fn add_term_chain(mut self, m: ZMono, c: SuperPoly) -> FockState {
            self.add_term(m, c);
            self
        }
    }

    #[test]
    fn dual_pairing_examples() {
        let (k1, d1) = basis_ket(&p("1"));
        assert_eq!(d1, qi(1));
        assert_eq!(dual_pairing(&p("1"), &k1), SuperPoly::one());
        let (k11, d11) = basis_ket(&p("1,1"));
        assert_eq!(d11, qi(2));
        assert_eq!(dual_pairing(&p("1,1"), &k11), SuperPoly::constant(qi(2)));
        let (k31, d31) = basis_ket(&p("3,1"));
        assert_eq!(d31, qi(-1));
        assert_eq!(k31, zs(&[1, 1]));
        for l in enumerate_op(9, OpFilter::All) {
            let (kl, dl) = basis_ket(&l);
            for m in crate::partitions::odd_partitions_of(l.weight()) {
                let v = dual_pairing(&m, &kl);
                let w = dual_pairing_by_operators(&m, &kl);
                assert_eq!(v, w);
                if m == l {
                    assert_eq!(v, SuperPoly::constant(dl.clone()));
                } else {
                    assert!(v.is_zero());
                }
            }
        }
    }
}
