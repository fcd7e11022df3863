//! Complete and elementary symmetric functions in the times, hook Schur functions,
//! and the (super) Miwa substitutions.

use crate::error::CkpError;
use crate::ring::{q, qi, SuperPoly, Var, Q};
use num_traits::Zero;
use std::collections::BTreeMap;

/// Times indexed by `j` for `t_j`; only odd `j` occur in this theory, but the symmetric
/// function recursions accept any alphabet.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvenTimes {
    t: BTreeMap<u32, SuperPoly>,
}

impl EvenTimes {
    pub fn new() -> Self {
        Self::default()
    }

    /// Formal generators `t_1, t_3, …, t_jmax` of the given alphabet.
    pub fn formal(alphabet: u8, jmax: u32) -> Self {
        let mut t = BTreeMap::new();
        for j in (1..=jmax).step_by(2) {
            t.insert(j, SuperPoly::var(Var::time(alphabet, 2 * j)));
        }
        EvenTimes { t }
    }

    pub fn set(&mut self, j: u32, v: SuperPoly) {
        if v.is_zero() {
            self.t.remove(&j);
        } else {
            self.t.insert(j, v);
        }
    }

    pub fn get(&self, j: u32) -> SuperPoly {
        self.t.get(&j).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &SuperPoly)> {
        self.t.iter()
    }
}

/// Full super time vector keyed by doubled index: even `k` is `t_{k/2}`, odd `k` the odd time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FullTimes {
    t: BTreeMap<u32, SuperPoly>,
}

impl FullTimes {
    pub fn new() -> Self {
        Self::default()
    }

    /// Formal generators of one alphabet with doubled index up to `k2max`.
    pub fn formal(alphabet: u8, k2max: u32) -> Self {
        let mut t = BTreeMap::new();
        for k in 1..=k2max {
            if k % 2 == 1 || (k / 2) % 2 == 1 {
                t.insert(k, SuperPoly::var(Var::time(alphabet, k)));
            }
        }
        FullTimes { t }
    }

    pub fn from_even(e: &EvenTimes) -> Self {
        FullTimes { t: e.t.iter().map(|(j, v)| (2 * j, v.clone())).collect() }
    }

    pub fn set(&mut self, k2: u32, v: SuperPoly) {
        if v.is_zero() {
            self.t.remove(&k2);
        } else {
            self.t.insert(k2, v);
        }
    }

    pub fn get(&self, k2: u32) -> SuperPoly {
        self.t.get(&k2).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &SuperPoly)> {
        self.t.iter()
    }

    pub fn even_part(&self) -> EvenTimes {
        EvenTimes { t: self.t.iter().filter(|(k, _)| *k % 2 == 0).map(|(k, v)| (k / 2, v.clone())).collect() }
    }

    pub fn max_index2(&self) -> u32 {
        self.t.keys().copied().max().unwrap_or(0)
    }

    /// The substitution `t_{k/2} ↦ self[k]` for generators of `alphabet`.
    pub fn substitution(&self, alphabet: u8) -> impl Fn(Var) -> SuperPoly + '_ {
        move |v| match v {
            Var::Time { alphabet: a, k } if a == alphabet => self.get(k),
            other => SuperPoly::var(other),
        }
    }
}

/// `h_n` from `exp(Σ t_k z^k) = Σ h_n z^n`, via `n h_n = Σ k t_k h_{n−k}`.
pub fn complete_h_all(nmax: u32, t: &EvenTimes) -> Vec<SuperPoly> {
    let mut h = vec![SuperPoly::one()];
    for n in 1..=nmax {
        let mut acc = SuperPoly::zero();
        for (&k, tk) in t.iter() {
            if k > n {
                break;
            }
            acc.add_assign(&(tk * &h[(n - k) as usize]).scale(&qi(k as i64)));
        }
        h.push(acc.scale(&q(1, n as i64)));
    }
    h
}

pub fn complete_h(n: u32, t: &EvenTimes) -> SuperPoly {
    complete_h_all(n, t).pop().unwrap()
}

/// `e_n` from `exp(−Σ t_k (−z)^k) = Σ e_n z^n`.
pub fn elementary_e_all(nmax: u32, t: &EvenTimes) -> Vec<SuperPoly> {
    let mut e = vec![SuperPoly::one()];
    for n in 1..=nmax {
        let mut acc = SuperPoly::zero();
        for (&k, tk) in t.iter() {
            if k > n {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc.add_assign(&(tk * &e[(n - k) as usize]).scale(&qi(sign * k as i64)));
        }
        e.push(acc.scale(&q(1, n as i64)));
    }
    e
}

pub fn elementary_e(n: u32, t: &EvenTimes) -> SuperPoly {
    elementary_e_all(n, t).pop().unwrap()
}

/// `s_{(n₁|n₂)} = Σ_{i=0}^{n₂} (−1)^i h_{n₁+1+i} e_{n₂−i}`.
pub fn hook_schur(n1: u32, n2: u32, t: &EvenTimes) -> SuperPoly {
    let h = complete_h_all(n1 + n2 + 1, t);
    let e = elementary_e_all(n2, t);
    hook_schur_from(n1, n2, &h, &e)
}

pub fn hook_schur_from(n1: u32, n2: u32, h: &[SuperPoly], e: &[SuperPoly]) -> SuperPoly {
    let mut acc = SuperPoly::zero();
    for i in 0..=n2 {
        let term = &h[(n1 + 1 + i) as usize] * &e[(n2 - i) as usize];
        acc.add_scaled(&term, &qi(if i % 2 == 0 { 1 } else { -1 }));
    }
    acc
}

/// `t_n = (2/n) Σ x_i^n` for odd `n ≤ n_max`.
pub fn miwa_even(x: &[SuperPoly], n_max: u32) -> EvenTimes {
    let mut t = EvenTimes::new();
    for n in (1..=n_max).step_by(2) {
        let mut acc = SuperPoly::zero();
        for xi in x {
            let mut p = SuperPoly::one();
            for _ in 0..n {
                p = &p * xi;
            }
            acc.add_assign(&p);
        }
        t.set(n, acc.scale(&q(2, n as i64)));
    }
    t
}

/// A super Miwa point, stored through `x = 1/z` and its odd tag.
#[derive(Clone, Debug)]
pub struct MiwaPoint {
    pub x: SuperPoly,
    pub zeta: SuperPoly,
}

impl MiwaPoint {
    pub fn rational(z: &Q, zeta: SuperPoly) -> Result<MiwaPoint, CkpError> {
        if z.is_zero() {
            return Err(CkpError::Invalid("Miwa point z = 0".into()));
        }
        Ok(MiwaPoint { x: SuperPoly::constant(z.recip()), zeta })
    }
}

/// `t_{2n+1} = (2/(2n+1)) Σ x_i^{2n+1}` and `t_{n+½} = 2 Σ ζ_i x_i^{n + shift}` with `x = 1/z`,
/// for doubled indices up to `k2max`. `shift = 0` is the standard parametrization.
pub fn super_miwa_shifted(points: &[MiwaPoint], k2max: u32, shift: u32) -> FullTimes {
    let mut t = FullTimes::new();
    let xs: Vec<SuperPoly> = points.iter().map(|p| p.x.clone()).collect();
    for (j, v) in miwa_even(&xs, k2max / 2).iter() {
        t.set(2 * j, v.clone());
    }
    for k in (1..=k2max).step_by(2) {
        let n = (k - 1) / 2 + shift;
        let mut acc = SuperPoly::zero();
        for p in points {
            let mut term = p.zeta.clone();
            for _ in 0..n {
                term = &term * &p.x;
            }
            acc.add_assign(&term);
        }
        t.set(k, acc.scale(&qi(2)));
    }
    t
}

pub fn super_miwa(points: &[MiwaPoint], k2max: u32) -> FullTimes {
    super_miwa_shifted(points, k2max, 0)
}
