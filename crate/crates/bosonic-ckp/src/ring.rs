//! Exact rationals, the supercommutative weighted polynomial ring and Laurent series.

use crate::error::CkpError;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// The universal coefficient type.
pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn parse_rational(s: &str) -> Result<Q, CkpError> {
    let s = s.trim();
    let bad = || CkpError::Parse(format!("malformed rational '{s}'"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(CkpError::Parse(format!("zero denominator in '{s}'")));
    }
    Ok(Q::new(n, d))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `(-1)^k` as a rational.
pub fn sign_pow(k: i64) -> Q {
    if k.rem_euclid(2) == 0 {
        Q::one()
    } else {
        -Q::one()
    }
}

/// Generalized binomial coefficient `binom(r, m)` for rational `r`.
pub fn binom_q(r: &Q, m: u64) -> Q {
    let mut acc = Q::one();
    for i in 0..m {
        acc = acc * (r - qi(i as i64)) / qi(i as i64 + 1);
    }
    acc
}

/// Minimal ring interface shared by rationals, super polynomials and Fock states.
pub trait Ring: Clone + Send + Sync {
    fn zero_el() -> Self;
    fn one_el() -> Self;
    fn is_zero_el(&self) -> bool;
    fn add_el(&self, other: &Self) -> Self;
    fn mul_el(&self, other: &Self) -> Self;
    fn neg_el(&self) -> Self;
    fn sub_el(&self, other: &Self) -> Self {
        self.add_el(&other.neg_el())
    }
}

impl Ring for Q {
    fn zero_el() -> Self {
        Zero::zero()
    }
    fn one_el() -> Self {
        One::one()
    }
    fn is_zero_el(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_el(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_el(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_el(&self) -> Self {
        -self
    }
}

/// Generator of the coefficient ring.
///
/// `Time` carries a doubled index `k`: even `k` is the even time `t_{k/2}`, odd `k` the
/// Grassmann generator `t_{k/2}`. `Param` generators are even of weight zero and may
/// carry negative exponents; `Tag` generators are odd of weight zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Time { alphabet: u8, k: u32 },
    Param { alphabet: u8, index: u32 },
    Tag { alphabet: u8, index: u32 },
}

pub const T: u8 = 0;
pub const TBAR: u8 = 1;

pub const PARAM_A: u8 = 0;
pub const PARAM_U: u8 = 1;
pub const PARAM_Z: u8 = 2;
pub const PARAM_W: u8 = 3;

pub const TAG_ZETA: u8 = 0;
pub const TAG_ZETABAR: u8 = 1;

impl Var {
    /// Even time `t_j` of the main alphabet.
    pub fn t(j: u32) -> Var {
        Var::Time { alphabet: T, k: 2 * j }
    }
    /// Odd time `t_{k/2}` of the main alphabet.
    pub fn t_odd(k: u32) -> Var {
        debug_assert!(k % 2 == 1);
        Var::Time { alphabet: T, k }
    }
    /// Time generator with doubled index `k` in the given alphabet.
    pub fn time(alphabet: u8, k: u32) -> Var {
        Var::Time { alphabet, k }
    }
    pub fn param(alphabet: u8, index: u32) -> Var {
        Var::Param { alphabet, index }
    }
    pub fn tag(alphabet: u8, index: u32) -> Var {
        Var::Tag { alphabet, index }
    }

    pub fn is_odd(&self) -> bool {
        match self {
            Var::Time { k, .. } => k % 2 == 1,
            Var::Param { .. } => false,
            Var::Tag { .. } => true,
        }
    }

    /// Doubled weight.
    pub fn weight2(&self) -> i64 {
        match self {
            Var::Time { k, .. } => *k as i64,
            _ => 0,
        }
    }

    fn key(&self) -> String {
        match *self {
            Var::Time { alphabet: T, k } if k % 2 == 0 => (k / 2).to_string(),
            _ => self.to_string(),
        }
    }

    fn odd_key(&self) -> Value {
        match *self {
            Var::Time { alphabet: T, k } => json!(k),
            _ => json!(self.to_string()),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::Time { alphabet, k } => {
                let name = match alphabet {
                    T => "t".to_string(),
                    TBAR => "s".to_string(),
                    a => format!("t{a}_"),
                };
                if k % 2 == 0 {
                    write!(f, "{name}{}", k / 2)
                } else {
                    write!(f, "{name}({k}/2)")
                }
            }
            Var::Param { alphabet, index } => {
                let name = match alphabet {
                    PARAM_A => "a",
                    PARAM_U => "u",
                    PARAM_Z => "z",
                    PARAM_W => "w",
                    _ => "p",
                };
                if alphabet == PARAM_A && index == 0 {
                    write!(f, "a")
                } else {
                    write!(f, "{name}{index}")
                }
            }
            Var::Tag { alphabet, index } => {
                let name = if alphabet == TAG_ZETA { "zeta" } else { "zetabar" };
                write!(f, "{name}{index}")
            }
        }
    }
}

/// A monomial: commuting even generators with exponents and a strictly increasing
/// list of odd generators. Ordering is by doubled weight, then lexicographic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    w2: i64,
    even: Vec<(Var, i32)>,
    odd: Vec<Var>,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn new(mut even: Vec<(Var, i32)>, odd: Vec<Var>) -> Option<(Monomial, i32)> {
        even.sort();
        let mut merged: Vec<(Var, i32)> = Vec::with_capacity(even.len());
        for (v, e) in even {
            assert!(!v.is_odd(), "odd generator in even slot");
            match merged.last_mut() {
                Some((w, f)) if *w == v => *f += e,
                _ => merged.push((v, e)),
            }
        }
        merged.retain(|(_, e)| *e != 0);
        let (odd, sign) = sort_odd(odd)?;
        let mut m = Monomial { w2: 0, even: merged, odd };
        m.w2 = m.compute_weight2();
        Some((m, sign))
    }

    pub fn var(v: Var) -> Monomial {
        if v.is_odd() {
            Monomial { w2: v.weight2(), even: vec![], odd: vec![v] }
        } else {
            Monomial { w2: v.weight2(), even: vec![(v, 1)], odd: vec![] }
        }
    }

    fn compute_weight2(&self) -> i64 {
        self.even.iter().map(|(v, e)| v.weight2() * *e as i64).sum::<i64>()
            + self.odd.iter().map(|v| v.weight2()).sum::<i64>()
    }

    pub fn weight2(&self) -> i64 {
        self.w2
    }

    pub fn even(&self) -> &[(Var, i32)] {
        &self.even
    }

    pub fn odd(&self) -> &[Var] {
        &self.odd
    }

    pub fn is_odd(&self) -> bool {
        self.odd.len() % 2 == 1
    }

    pub fn exponent(&self, v: Var) -> i32 {
        if v.is_odd() {
            self.odd.contains(&v) as i32
        } else {
            self.even.iter().find(|(w, _)| *w == v).map(|(_, e)| *e).unwrap_or(0)
        }
    }

    /// Product with its sign, or `None` when a repeated odd generator kills it.
    pub fn mul(&self, other: &Monomial) -> Option<(Monomial, i32)> {
        let mut even = Vec::with_capacity(self.even.len() + other.even.len());
        let (mut i, mut j) = (0, 0);
        while i < self.even.len() && j < other.even.len() {
            let (a, b) = (self.even[i], other.even[j]);
            if a.0 < b.0 {
                even.push(a);
                i += 1;
            } else if b.0 < a.0 {
                even.push(b);
                j += 1;
            } else {
                if a.1 + b.1 != 0 {
                    even.push((a.0, a.1 + b.1));
                }
                i += 1;
                j += 1;
            }
        }
        even.extend_from_slice(&self.even[i..]);
        even.extend_from_slice(&other.even[j..]);

        let mut odd = Vec::with_capacity(self.odd.len() + other.odd.len());
        let mut inversions = 0usize;
        let (mut i, mut j) = (0, 0);
        while i < self.odd.len() && j < other.odd.len() {
            let (a, b) = (self.odd[i], other.odd[j]);
            if a == b {
                return None;
            }
            if a < b {
                odd.push(a);
                i += 1;
            } else {
                inversions += self.odd.len() - i;
                odd.push(b);
                j += 1;
            }
        }
        odd.extend_from_slice(&self.odd[i..]);
        odd.extend_from_slice(&other.odd[j..]);
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        Some((Monomial { w2: self.w2 + other.w2, even, odd }, sign))
    }

    pub fn to_json(&self) -> (Value, Value) {
        let mut even = Map::new();
        for (v, e) in &self.even {
            even.insert(v.key(), json!(e));
        }
        let odd: Vec<Value> = self.odd.iter().map(|v| v.odd_key()).collect();
        (Value::Object(even), Value::Array(odd))
    }
}

fn sort_odd(mut odd: Vec<Var>) -> Option<(Vec<Var>, i32)> {
    let mut sign = 1;
    for i in 1..odd.len() {
        let mut j = i;
        while j > 0 && odd[j - 1] > odd[j] {
            odd.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if odd.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((odd, sign))
}

/// Sign of converting a product of `len` odd factors between descending and ascending order.
pub fn reversal_sign(len: usize) -> i32 {
    if (len / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (v, e) in &self.even {
            if *e == 1 {
                parts.push(v.to_string());
            } else {
                parts.push(format!("{v}^{e}"));
            }
        }
        for v in &self.odd {
            parts.push(v.to_string());
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// Finite linear combination of monomials with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct SuperPoly {
    terms: BTreeMap<Monomial, Q>,
}

impl SuperPoly {
    pub fn zero() -> SuperPoly {
        SuperPoly::default()
    }

    pub fn one() -> SuperPoly {
        SuperPoly::constant(Q::one())
    }

    pub fn constant(c: Q) -> SuperPoly {
        SuperPoly::term(Monomial::one(), c)
    }

    pub fn var(v: Var) -> SuperPoly {
        SuperPoly::term(Monomial::var(v), Q::one())
    }

    pub fn term(m: Monomial, c: Q) -> SuperPoly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        SuperPoly { terms }
    }

    /// `c · v1^e1 ⋯` with odd generators multiplied in the order given.
    pub fn monomial(c: Q, even: &[(Var, i32)], odd: &[Var]) -> SuperPoly {
        match Monomial::new(even.to_vec(), odd.to_vec()) {
            Some((m, s)) => SuperPoly::term(m, if s < 0 { -c } else { c }),
            None => SuperPoly::zero(),
        }
    }

    /// `ξ_α = t_{α₁/2}⋯t_{α_ℓ/2}` for doubled indices given in descending order.
    pub fn xi(alpha: &[u32]) -> SuperPoly {
        let mut asc: Vec<Var> = alpha.iter().map(|&k| Var::t_odd(k)).collect();
        asc.reverse();
        match Monomial::new(vec![], asc) {
            Some((m, s)) => {
                debug_assert_eq!(s, 1);
                SuperPoly::term(m, qi(reversal_sign(alpha.len()) as i64))
            }
            None => SuperPoly::zero(),
        }
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

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&Monomial::one())
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &SuperPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, other: &SuperPoly, c: &Q) {
        if c.is_zero() {
            return;
        }
        for (m, d) in &other.terms {
            self.add_term(m.clone(), d * c);
        }
    }

    pub fn scale(&self, c: &Q) -> SuperPoly {
        if c.is_zero() {
            return SuperPoly::zero();
        }
        SuperPoly { terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect() }
    }

    pub fn mul_truncated(&self, other: &SuperPoly, cap2: Option<i64>) -> SuperPoly {
        let mut out = SuperPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some(cap) = cap2 {
                    if ma.w2 + mb.w2 > cap {
                        continue;
                    }
                }
                if let Some((m, s)) = ma.mul(mb) {
                    let c = ca * cb;
                    out.add_term(m, if s < 0 { -c } else { c });
                }
            }
        }
        out
    }

    /// Drop monomials of doubled weight above `cap2`.
    pub fn truncate(&self, cap2: i64) -> SuperPoly {
        self.filter(|m| m.w2 <= cap2)
    }

    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> SuperPoly {
        SuperPoly {
            terms: self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// Component of exact doubled weight `w2`.
    pub fn homogeneous(&self, w2: i64) -> SuperPoly {
        self.filter(|m| m.w2 == w2)
    }

    pub fn max_weight2(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.w2).max()
    }

    pub fn min_weight2(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.w2).min()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.min_weight2() == self.max_weight2()
    }

    /// Grassmann parity when homogeneous: `Some(false)` even, `Some(true)` odd.
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.keys().map(|m| m.is_odd());
        let first = it.next()?;
        if it.all(|p| p == first) {
            Some(first)
        } else {
            None
        }
    }

    pub fn is_grassmann_even(&self) -> bool {
        self.terms.keys().all(|m| !m.is_odd())
    }

    pub fn has_odd_part(&self) -> bool {
        self.terms.keys().any(|m| m.is_odd())
    }

    /// The parity automorphism: odd monomials change sign.
    pub fn involution(&self) -> SuperPoly {
        SuperPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), if m.is_odd() { -c } else { c.clone() }))
                .collect(),
        }
    }

    pub fn exp_truncated(&self, cap2: i64) -> Result<SuperPoly, CkpError> {
        if !self.constant_term().is_zero() {
            return Err(CkpError::NonzeroConstant);
        }
        let p = self.truncate(cap2);
        let mut out = SuperPoly::one();
        let mut power = SuperPoly::one();
        let mut k = 1i64;
        loop {
            power = power.mul_truncated(&p, Some(cap2)).scale(&q(1, k));
            if power.is_zero() {
                break;
            }
            out.add_assign(&power);
            k += 1;
        }
        Ok(out)
    }

    /// `(1 + X)^r` as a binomial series; `X` must have zero constant term and the
    /// series must terminate under the given monomial filter.
    pub fn binomial_series(x: &SuperPoly, r: &Q, keep: &dyn Fn(&Monomial) -> bool) -> Result<SuperPoly, CkpError> {
        if !x.constant_term().is_zero() {
            return Err(CkpError::NonzeroConstant);
        }
        let x = x.filter(keep);
        let mut out = SuperPoly::one();
        let mut power = SuperPoly::one();
        let mut m = 1u64;
        loop {
            power = power.mul_truncated(&x, None).filter(keep);
            if power.is_zero() {
                break;
            }
            out.add_scaled(&power, &binom_q(r, m));
            m += 1;
        }
        Ok(out)
    }

    /// Ring homomorphism determined by the images of generators; odd images are
    /// multiplied in canonical monomial order.
    pub fn substitute(&self, f: &dyn Fn(Var) -> SuperPoly) -> SuperPoly {
        let mut out = SuperPoly::zero();
        let mut cache: BTreeMap<Var, SuperPoly> = BTreeMap::new();
        let mut image = |v: Var| cache.entry(v).or_insert_with(|| f(v)).clone();
        for (m, c) in &self.terms {
            let mut acc = SuperPoly::constant(c.clone());
            for (v, e) in &m.even {
                let img = image(*v);
                if *e < 0 {
                    panic!("substitution of a negative power of {v}");
                }
                for _ in 0..*e {
                    acc = acc.mul_truncated(&img, None);
                }
            }
            for v in &m.odd {
                acc = acc.mul_truncated(&image(*v), None);
            }
            out.add_assign(&acc);
        }
        out
    }

    /// Rename generators by an injective map that preserves parity and does not change the
    /// canonical odd order sign (the sign is recomputed regardless).
    pub fn rename(&self, f: &dyn Fn(Var) -> Var) -> SuperPoly {
        let mut out = SuperPoly::zero();
        for (m, c) in &self.terms {
            let even = m.even.iter().map(|(v, e)| (f(*v), *e)).collect();
            let odd = m.odd.iter().map(|v| f(*v)).collect();
            if let Some((mm, s)) = Monomial::new(even, odd) {
                out.add_term(mm, if s < 0 { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// Set every generator accepted by `pred` to zero.
    pub fn kill(&self, pred: impl Fn(Var) -> bool) -> SuperPoly {
        self.filter(|m| !m.even.iter().any(|(v, _)| pred(*v)) && !m.odd.iter().any(|v| pred(*v)))
    }

    /// Multiply by `v^e` for an even generator.
    pub fn shift_even(&self, v: Var, e: i32) -> SuperPoly {
        self.mul_truncated(&SuperPoly::monomial(Q::one(), &[(v, e)], &[]), None)
    }

    /// Partial derivative with respect to an even generator.
    pub fn derivative_even(&self, v: Var) -> SuperPoly {
        let mut out = SuperPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let even = m.even.iter().map(|&(w, f)| if w == v { (w, f - 1) } else { (w, f) }).collect();
            let (mm, _) = Monomial::new(even, m.odd.clone()).expect("derivative keeps odd part");
            out.add_term(mm, c * qi(e as i64));
        }
        out
    }

    /// Left derivative with respect to an odd generator.
    pub fn derivative_odd(&self, v: Var) -> SuperPoly {
        let mut out = SuperPoly::zero();
        for (m, c) in &self.terms {
            if let Some(pos) = m.odd.iter().position(|w| *w == v) {
                let mut odd = m.odd.clone();
                odd.remove(pos);
                let (mm, _) = Monomial::new(m.even.clone(), odd).expect("removal keeps order");
                out.add_term(mm, if pos % 2 == 0 { c.clone() } else { -c.clone() });
            }
        }
        out
    }

    /// Evaluate even generators at rational points (negative powers allowed).
    pub fn eval_even(&self, f: &dyn Fn(Var) -> Option<Q>) -> SuperPoly {
        let mut out = SuperPoly::zero();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for &(v, e) in &m.even {
                match f(v) {
                    Some(x) => {
                        let p = pow_q(&x, e);
                        coeff *= p;
                    }
                    None => rest.push((v, e)),
                }
            }
            let (mm, _) = Monomial::new(rest, m.odd.clone()).expect("evaluation keeps odd part");
            out.add_term(mm, coeff);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let items: Vec<Value> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let (even, odd) = m.to_json();
                json!({"coeff": c.to_string(), "even": even, "odd": odd})
            })
            .collect();
        Value::Array(items)
    }

    pub fn from_json(v: &Value) -> Result<SuperPoly, CkpError> {
        let bad = |why: &str| CkpError::Parse(format!("bad polynomial JSON: {why}"));
        let items = v.as_array().ok_or_else(|| bad("expected a list"))?;
        let mut out = SuperPoly::zero();
        for item in items {
            let c = parse_rational(item["coeff"].as_str().ok_or_else(|| bad("coeff"))?)?;
            let mut even = Vec::new();
            if let Some(obj) = item["even"].as_object() {
                for (k, e) in obj {
                    let j: u32 = k.parse().map_err(|_| bad("even key"))?;
                    let e = e.as_i64().ok_or_else(|| bad("exponent"))? as i32;
                    even.push((Var::t(j), e));
                }
            }
            let mut odd = Vec::new();
            if let Some(list) = item["odd"].as_array() {
                for k in list {
                    let k = k.as_u64().ok_or_else(|| bad("odd index"))? as u32;
                    if k % 2 == 0 {
                        return Err(bad("odd index must be an odd integer"));
                    }
                    odd.push(Var::t_odd(k));
                }
            }
            out.add_assign(&SuperPoly::monomial(c, &even, &odd));
        }
        Ok(out)
    }

    /// First monomial where two polynomials differ, with both coefficients.
    pub fn first_difference(&self, other: &SuperPoly) -> Option<(Monomial, Q, Q)> {
        let d = self - other;
        d.terms.iter().next().map(|(m, _)| (m.clone(), self.coeff(m), other.coeff(m)))
    }
}

pub fn pow_q(x: &Q, e: i32) -> Q {
    let mut p = Q::one();
    for _ in 0..e.unsigned_abs() {
        p *= x;
    }
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

impl fmt::Display for SuperPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let a = c.abs();
            let body = if m.even.is_empty() && m.odd.is_empty() {
                a.to_string()
            } else if a.is_one() {
                m.to_string()
            } else {
                format!("{a}*{m}")
            };
            if first {
                write!(f, "{}{}", if neg { "-" } else { "" }, body)?;
            } else {
                write!(f, " {} {}", if neg { "-" } else { "+" }, body)?;
            }
            first = false;
        }
        Ok(())
    }
}

impl Ring for SuperPoly {
    fn zero_el() -> Self {
        SuperPoly::zero()
    }
    fn one_el() -> Self {
        SuperPoly::one()
    }
    fn is_zero_el(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_el(&self, other: &Self) -> Self {
        self + other
    }
    fn mul_el(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_el(&self) -> Self {
        -self
    }
}

impl Add for &SuperPoly {
    type Output = SuperPoly;
    fn add(self, rhs: &SuperPoly) -> SuperPoly {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub for &SuperPoly {
    type Output = SuperPoly;
    fn sub(self, rhs: &SuperPoly) -> SuperPoly {
        let mut out = self.clone();
        out.add_scaled(rhs, &-Q::one());
        out
    }
}

impl Mul for &SuperPoly {
    type Output = SuperPoly;
    fn mul(self, rhs: &SuperPoly) -> SuperPoly {
        self.mul_truncated(rhs, None)
    }
}

impl Neg for &SuperPoly {
    type Output = SuperPoly;
    fn neg(self) -> SuperPoly {
        self.scale(&-Q::one())
    }
}

impl Add for SuperPoly {
    type Output = SuperPoly;
    fn add(self, rhs: SuperPoly) -> SuperPoly {
        &self + &rhs
    }
}

impl Sub for SuperPoly {
    type Output = SuperPoly;
    fn sub(self, rhs: SuperPoly) -> SuperPoly {
        &self - &rhs
    }
}

impl Mul for SuperPoly {
    type Output = SuperPoly;
    fn mul(self, rhs: SuperPoly) -> SuperPoly {
        &self * &rhs
    }
}

impl Neg for SuperPoly {
    type Output = SuperPoly;
    fn neg(self) -> SuperPoly {
        -&self
    }
}

/// Finitely supported Laurent series in one formal variable; exponents are doubled
/// so half-integer powers are representable.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly<R: Ring> {
    coeffs: BTreeMap<i64, R>,
}

impl<R: Ring> Default for LaurentPoly<R> {
    fn default() -> Self {
        LaurentPoly { coeffs: BTreeMap::new() }
    }
}

impl<R: Ring> LaurentPoly<R> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add `c · z^{e2/2}`.
    pub fn add_term(&mut self, e2: i64, c: R) {
        if c.is_zero_el() {
            return;
        }
        let entry = self.coeffs.entry(e2).or_insert_with(R::zero_el);
        *entry = entry.add_el(&c);
        if entry.is_zero_el() {
            self.coeffs.remove(&e2);
        }
    }

    pub fn coeff(&self, e2: i64) -> R {
        self.coeffs.get(&e2).cloned().unwrap_or_else(R::zero_el)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &R)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mul(&self, other: &LaurentPoly<R>) -> LaurentPoly<R> {
        let mut out = LaurentPoly::new();
        for (ea, a) in &self.coeffs {
            for (eb, b) in &other.coeffs {
                out.add_term(ea + eb, a.mul_el(b));
            }
        }
        out
    }

    /// Coefficient of `z^{−1}`; an error when every exponent is a half-integer.
    pub fn residue(&self) -> Result<R, CkpError> {
        if !self.coeffs.is_empty() && self.coeffs.keys().all(|e| e.rem_euclid(2) == 1) {
            return Err(CkpError::Grading("residue of a purely half-integer graded series".into()));
        }
        Ok(self.coeff(-2))
    }
}

pub fn to_i64(x: &BigInt) -> i64 {
    x.to_i64().expect("integer overflow")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(j: u32) -> SuperPoly {
        SuperPoly::var(Var::t(j))
    }
    fn to(k: u32) -> SuperPoly {
        SuperPoly::var(Var::t_odd(k))
    }

    #[test]
    fn addition_examples() {
        let p = &t(1) + &to(3);
        assert_eq!(&p + &SuperPoly::zero(), p);
        assert_eq!(&t(1) + &t(1), t(1).scale(&qi(2)));
        assert!((&to(1) - &to(1)).is_zero());
    }

    #[test]
    fn multiplication_examples() {
        assert!((&to(1) * &to(1)).is_zero());
        assert_eq!(&to(3) * &to(1), -(&to(1) * &to(3)));
        let p = &t(1) * &to(1);
        let (m, c) = p.terms().next().unwrap();
        assert_eq!(m.even(), &[(Var::t(1), 1)]);
        assert_eq!(m.odd(), &[Var::t_odd(1)]);
        assert!(c.is_one());
    }

    #[test]
    fn truncation_and_exp() {
        assert_eq!((&t(1) + &t(3)).truncate(4), t(1));
        let p = &(&t(1) + &t(3)) + &SuperPoly::constant(qi(5));
        assert_eq!(p.truncate(0), SuperPoly::constant(qi(5)));
        let e = t(1).exp_truncated(6).unwrap();
        let expect = SuperPoly::one() + t(1) + (&t(1) * &t(1)).scale(&q(1, 2)) + (&(&t(1) * &t(1)) * &t(1)).scale(&q(1, 6));
        assert_eq!(e, expect);
        assert_eq!(SuperPoly::zero().exp_truncated(10).unwrap(), SuperPoly::one());
        let c = SuperPoly::var(Var::param(PARAM_A, 0));
        let x = &to(1) * &c;
        assert_eq!(x.exp_truncated(10).unwrap(), &SuperPoly::one() + &x);
        assert!(SuperPoly::one().exp_truncated(4).is_err());
    }

    #[test]
    fn json_order_and_roundtrip() {
        let p = &(&t(3) + &(&to(1) * &to(3))) + &t(1).scale(&q(-1, 2));
        let v = p.to_json();
        assert_eq!(v[0]["coeff"], "-1/2");
        assert_eq!(v[0]["even"]["1"], 1);
        assert_eq!(SuperPoly::from_json(&v).unwrap(), p);
        let w2: Vec<i64> = p.terms().map(|(m, _)| m.weight2()).collect();
        assert!(w2.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn xi_sign_convention() {
        assert_eq!(SuperPoly::xi(&[3, 1]), &to(3) * &to(1));
        assert_eq!(SuperPoly::xi(&[5, 3, 1]), &(&to(5) * &to(3)) * &to(1));
        assert_eq!(SuperPoly::xi(&[7, 5, 3, 1]), &(&(&to(7) * &to(5)) * &to(3)) * &to(1));
        assert_eq!(reversal_sign(2), -1);
        assert_eq!(reversal_sign(4), 1);
    }

    #[test]
    fn laurent_residue() {
        let mut l: LaurentPoly<Q> = LaurentPoly::new();
        l.add_term(0, qi(1));
        l.add_term(-2, qi(3));
        assert_eq!(l.residue().unwrap(), qi(3));
        let mut l2: LaurentPoly<Q> = LaurentPoly::new();
        l2.add_term(4, qi(1));
        assert_eq!(l2.residue().unwrap(), qi(0));
        let mut l3: LaurentPoly<Q> = LaurentPoly::new();
        l3.add_term(1, qi(1));
        assert!(l3.residue().is_err());
        assert!(LaurentPoly::<Q>::new().residue().unwrap().is_zero());
    }

    #[test]
    fn derivatives() {
        let p = &(&to(1) * &to(3)) * &t(1);
        assert_eq!(p.derivative_odd(Var::t_odd(1)), &to(3) * &t(1));
        assert_eq!(p.derivative_odd(Var::t_odd(3)), -(&to(1) * &t(1)));
        assert_eq!((&t(1) * &t(1)).derivative_even(Var::t(1)), t(1).scale(&qi(2)));
    }

    fn arb_poly() -> impl Strategy<Value = SuperPoly> {
        let gen = prop_oneof![
            (0u32..3).prop_map(|i| Var::t(2 * i + 1)),
            (0u32..4).prop_map(|i| Var::t_odd(2 * i + 1)),
        ];
        let mono = (proptest::collection::vec(gen, 0..4), -3i64..4);
        proptest::collection::vec(mono, 0..5).prop_map(|ms| {
            let mut p = SuperPoly::zero();
            for (vars, c) in ms {
                let mut acc = SuperPoly::constant(qi(c));
                for v in vars {
                    acc = &acc * &SuperPoly::var(v);
                }
                p.add_assign(&acc);
            }
            p
        })
    }

    fn parity_parts(p: &SuperPoly) -> (SuperPoly, SuperPoly) {
        (p.filter(|m| !m.is_odd()), p.filter(|m| m.is_odd()))
    }

    proptest! {
        #[test]
        fn mul_associative(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&a * &(&b * &c), &(&a * &b) * &c);
        }

        #[test]
        fn mul_supercommutative(a in arb_poly(), b in arb_poly()) {
            let (ae, ao) = parity_parts(&a);
            let (be, bo) = parity_parts(&b);
            prop_assert_eq!(&ae * &b, &b * &ae);
            prop_assert_eq!(&a * &be, &be * &a);
            prop_assert_eq!(&ao * &bo, -(&bo * &ao));
        }

        #[test]
        fn truncation_compatible(a in arb_poly(), b in arb_poly(), w in 0i64..12) {
            prop_assert_eq!((&a * &b).truncate(w), (&a.truncate(w) * &b.truncate(w)).truncate(w));
        }

        #[test]
        fn repeated_odd_vanishes(a in arb_poly(), k in 0u32..4) {
            let x = to(2 * k + 1);
            prop_assert!((&(&x * &a) * &x).is_zero());
        }

        #[test]
        fn exp_of_sum(a in arb_poly(), b in arb_poly(), w in 0i64..10) {
            let a = parity_parts(&a).0.filter(|m| m.weight2() > 0);
            let b = parity_parts(&b).0.filter(|m| m.weight2() > 0);
            let lhs = (&a + &b).exp_truncated(w).unwrap();
            let rhs = a.exp_truncated(w).unwrap().mul_truncated(&b.exp_truncated(w).unwrap(), Some(w));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
