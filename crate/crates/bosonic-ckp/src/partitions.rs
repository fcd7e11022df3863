//! Partitions with odd parts, their normalizations, and q-dimension characters.

use crate::error::CkpError;
use crate::ring::{factorial, qi, Q};
use num_bigint::BigInt;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;

/// Partition with odd parts, stored weakly decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct OddPartition {
    parts: Vec<u32>,
}

impl OddPartition {
    pub fn empty() -> OddPartition {
        OddPartition::default()
    }

    pub fn new(mut parts: Vec<u32>) -> Result<OddPartition, CkpError> {
        if let Some(p) = parts.iter().find(|&&p| p % 2 == 0) {
            return Err(CkpError::Invalid(format!("part {p} is not a positive odd integer")));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(OddPartition { parts })
    }

    pub fn parse(s: &str) -> Result<OddPartition, CkpError> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        if s.trim().is_empty() {
            return Ok(OddPartition::empty());
        }
        let mut parts = Vec::new();
        for tok in s.split(',') {
            let p: u32 = tok.trim().parse().map_err(|_| CkpError::Parse(format!("malformed part '{tok}'")))?;
            parts.push(p);
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(CkpError::Parse(format!("parts of '{s}' are not weakly decreasing")));
        }
        OddPartition::new(parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Multiplicity `m_i` of each part.
    pub fn multiplicities(&self) -> BTreeMap<u32, u32> {
        let mut m = BTreeMap::new();
        for &p in &self.parts {
            *m.entry(p).or_insert(0) += 1;
        }
        m
    }

    /// Hook indices `n_i` with `λ_i = 2n_i + 1`.
    pub fn hook_indices(&self) -> Vec<u32> {
        self.parts.iter().map(|p| (p - 1) / 2).collect()
    }

    pub fn is_distinct(&self) -> bool {
        self.parts.windows(2).all(|w| w[0] > w[1])
    }

    pub fn has_even_multiplicities(&self) -> bool {
        self.multiplicities().values().all(|m| m % 2 == 0)
    }

    pub fn from_multiplicities(m: &BTreeMap<u32, u32>) -> OddPartition {
        let mut parts = Vec::new();
        for (&p, &k) in m.iter().rev() {
            parts.extend(std::iter::repeat(p).take(k as usize));
        }
        OddPartition { parts }
    }

    /// Whether every part multiplicity of `self` is bounded by that of `other`.
    pub fn is_contained_in(&self, other: &OddPartition) -> bool {
        let mo = other.multiplicities();
        self.multiplicities().iter().all(|(p, m)| mo.get(p).copied().unwrap_or(0) >= *m)
    }

    /// Young-diagram containment, `μ_i ≤ λ_i` for all `i`.
    pub fn fits_in(&self, other: &OddPartition) -> bool {
        self.len() <= other.len() && self.parts.iter().zip(&other.parts).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for OddPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// `D_λ = d_λ² = (−1)^{(|λ|−ℓ)/2} ∏ m_i!`.
pub fn d_squared(lambda: &OddPartition) -> Q {
    let sign = if ((lambda.weight() as usize - lambda.len()) / 2) % 2 == 0 { 1 } else { -1 };
    let prod = lambda.multiplicities().values().fold(BigInt::from(1), |acc, &m| acc * factorial(m as u64));
    Q::from_integer(prod * BigInt::from(sign))
}

/// Strictly decreasing list of odd parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DistinctOddPartition {
    parts: Vec<u32>,
}

impl DistinctOddPartition {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(parts: Vec<u32>) -> Result<Self, CkpError> {
        let p = OddPartition::new(parts)?;
        if !p.is_distinct() {
            return Err(CkpError::Invalid(format!("repeated part in {p}")));
        }
        Ok(DistinctOddPartition { parts: p.parts })
    }

    pub fn parse(s: &str) -> Result<Self, CkpError> {
        let p = OddPartition::parse(s)?;
        Self::new(p.parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn contains(&self, nu: u32) -> bool {
        self.parts.contains(&nu)
    }

    pub fn to_partition(&self) -> OddPartition {
        OddPartition { parts: self.parts.clone() }
    }
}

impl fmt::Display for DistinctOddPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_partition().fmt(f)
    }
}

pub fn add_part(alpha: &DistinctOddPartition, nu: u32) -> Result<DistinctOddPartition, CkpError> {
    if alpha.contains(nu) {
        return Err(CkpError::Invalid(format!("part {nu} already in {alpha}")));
    }
    let mut parts = alpha.parts.clone();
    parts.push(nu);
    DistinctOddPartition::new(parts)
}

/// Delete the part at 1-based position `i`.
pub fn remove_part(alpha: &DistinctOddPartition, i: usize) -> Result<DistinctOddPartition, CkpError> {
    if i == 0 || i > alpha.len() {
        return Err(CkpError::Invalid(format!("position {i} out of range for {alpha}")));
    }
    let mut parts = alpha.parts.clone();
    parts.remove(i - 1);
    Ok(DistinctOddPartition { parts })
}

/// `s(ν, α) = (−1)^{#{α_i > ν}}`.
pub fn insertion_sign(nu: u32, alpha: &DistinctOddPartition) -> Result<i32, CkpError> {
    if alpha.contains(nu) {
        return Err(CkpError::Invalid(format!("part {nu} already in {alpha}")));
    }
    let above = alpha.parts.iter().filter(|&&a| a > nu).count();
    Ok(if above % 2 == 0 { 1 } else { -1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpFilter {
    All,
    EvenLength,
    EvenMultiplicities,
    DistinctEv,
    DistinctOdd,
}

impl OpFilter {
    fn accepts(&self, p: &OddPartition) -> bool {
        match self {
            OpFilter::All => true,
            OpFilter::EvenLength => p.len() % 2 == 0,
            OpFilter::EvenMultiplicities => p.has_even_multiplicities(),
            OpFilter::DistinctEv => p.is_distinct() && p.len() % 2 == 0,
            OpFilter::DistinctOdd => p.is_distinct() && p.len() % 2 == 1,
        }
    }
}

/// Odd-part partitions of exact weight `n`, in lexicographic order of part lists.
pub fn odd_partitions_of(n: u32) -> Vec<OddPartition> {
    fn rec(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<OddPartition>) {
        if rest == 0 {
            out.push(OddPartition { parts: cur.clone() });
            return;
        }
        let mut p = 1;
        while p <= max.min(rest) {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
            p += 2;
        }
    }
    let mut out = Vec::new();
    rec(n, if n % 2 == 1 { n } else { n.saturating_sub(1) }, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// All qualifying partitions of weight ≤ `max_weight`, ordered by weight then lexicographically.
pub fn enumerate_op(max_weight: u32, filter: OpFilter) -> Vec<OddPartition> {
    (0..=max_weight).flat_map(odd_partitions_of).filter(|p| filter.accepts(p)).collect()
}

pub fn enumerate_distinct(max_weight: u32, filter: OpFilter) -> Vec<DistinctOddPartition> {
    enumerate_op(max_weight, filter)
        .into_iter()
        .filter(|p| p.is_distinct())
        .map(|p| DistinctOddPartition { parts: p.parts })
        .collect()
}

/// Truncated power series in `q^{1/2}`; index = doubled exponent.
pub type HalfSeries = Vec<BigInt>;

fn series_mul(a: &HalfSeries, b: &HalfSeries, n: usize) -> HalfSeries {
    let mut out = vec![BigInt::zero(); n + 1];
    for (i, x) in a.iter().enumerate().take(n + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Number of Fock basis states of each doubled weight, by direct enumeration of
/// multisets of half-integer modes.
pub fn fock_state_counts(cap2: usize) -> HalfSeries {
    fn rec(rest: usize, max_mode: usize, count: &mut BigInt) {
        if rest == 0 {
            *count += 1;
            return;
        }
        let mut m = 1;
        while m <= max_mode.min(rest) {
            rec(rest - m, m, count);
            m += 2;
        }
    }
    (0..=cap2)
        .map(|w| {
            let mut c = BigInt::zero();
            rec(w, w.max(1), &mut c);
            c
        })
        .collect()
}

/// Coefficients of `∏_{k∈½+Z≥0} 1/(1−q^k)` up to doubled exponent `cap2`.
pub fn q1_product(cap2: usize) -> HalfSeries {
    let mut acc = vec![BigInt::zero(); cap2 + 1];
    acc[0] = BigInt::from(1);
    let mut k = 1;
    while k <= cap2 {
        let mut geo = vec![BigInt::zero(); cap2 + 1];
        let mut e = 0;
        while e <= cap2 {
            geo[e] = BigInt::from(1);
            e += k;
        }
        acc = series_mul(&acc, &geo, cap2);
        k += 2;
    }
    acc
}

/// Coefficients of `∏_{k∈½+Z≥0} (1+q^k)` up to doubled exponent `cap2`.
pub fn q3_product(cap2: usize) -> HalfSeries {
    let mut acc = vec![BigInt::zero(); cap2 + 1];
    acc[0] = BigInt::from(1);
    let mut k = 1;
    while k <= cap2 {
        let mut f = vec![BigInt::zero(); cap2 + 1];
        f[0] = BigInt::from(1);
        f[k] = BigInt::from(1);
        acc = series_mul(&acc, &f, cap2);
        k += 2;
    }
    acc
}

/// Character of the Heisenberg module generated by the odd currents, `∏_{k odd} 1/(1−q^k)`.
pub fn heisenberg_series(cap2: usize) -> HalfSeries {
    let mut acc = vec![BigInt::zero(); cap2 + 1];
    acc[0] = BigInt::from(1);
    let mut k = 2;
    while k <= cap2 {
        let mut geo = vec![BigInt::zero(); cap2 + 1];
        let mut e = 0;
        while e <= cap2 {
            geo[e] = BigInt::from(1);
            e += k;
        }
        acc = series_mul(&acc, &geo, cap2);
        k += 4;
    }
    acc
}

/// State enumeration against the product character of F, and the quotient by the
/// Heisenberg character against the product of fermionic factors.
pub fn q_dimension_check(cap2: usize) -> bool {
    let q1 = q1_product(cap2);
    fock_state_counts(cap2) == q1 && series_mul(&heisenberg_series(cap2), &q3_product(cap2), cap2) == q1
}

pub fn rational_multiplicity_factorial(lambda: &OddPartition) -> Q {
    lambda.multiplicities().values().fold(qi(1), |acc, &m| acc * Q::from_integer(factorial(m as u64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::q;
    use proptest::prelude::*;

    fn p(s: &str) -> OddPartition {
        OddPartition::parse(s).unwrap()
    }
    fn dp(s: &str) -> DistinctOddPartition {
        DistinctOddPartition::parse(s).unwrap()
    }

    #[test]
    fn d_squared_examples() {
        assert_eq!(d_squared(&p("1,1")), qi(2));
        assert_eq!(d_squared(&p("")), qi(1));
        assert_eq!(d_squared(&p("3,1")), qi(-1));
    }

    fn d2_by_hook_indices(l: &OddPartition) -> Q {
        let s: u32 = l.hook_indices().iter().sum();
        let sign = if s % 2 == 0 { qi(1) } else { qi(-1) };
        sign * rational_multiplicity_factorial(l)
    }

    fn d2_by_mod4(l: &OddPartition) -> Q {
        let mut acc = qi(1);
        for (part, m) in l.multiplicities() {
            acc *= Q::from_integer(factorial(m as u64));
            if part % 4 == 3 && m % 2 == 1 {
                acc = -acc;
            }
        }
        acc
    }

    #[test]
    fn three_d_squared_formulas_agree() {
        for l in enumerate_op(15, OpFilter::All) {
            let d = d_squared(&l);
            assert_eq!(d, d2_by_hook_indices(&l), "{l}");
            assert_eq!(d, d2_by_mod4(&l), "{l}");
        }
    }

    #[test]
    fn d_squared_frequency_instance() {
        for n in 0..4u32 {
            for m in 0..4u32 {
                for k in 0..3u32 {
                    let mut mult = BTreeMap::new();
                    mult.insert(1, n);
                    mult.insert(3, m);
                    mult.insert(5, k);
                    mult.retain(|_, v| *v > 0);
                    let l = OddPartition::from_multiplicities(&mult);
                    let f = |x: u32| Q::from_integer(factorial(x as u64));
                    let sign = if m % 2 == 0 { qi(1) } else { qi(-1) };
                    assert_eq!(d_squared(&l), sign * f(n) * f(m) * f(k));
                }
            }
        }
    }

    #[test]
    fn add_remove_examples() {
        assert_eq!(add_part(&dp("5,1"), 3).unwrap(), dp("5,3,1"));
        assert_eq!(add_part(&dp(""), 7).unwrap(), dp("7"));
        assert_eq!(add_part(&dp("3"), 1).unwrap(), dp("3,1"));
        assert!(add_part(&dp("3"), 3).is_err());
        assert_eq!(remove_part(&dp("5,3,1"), 1).unwrap(), dp("3,1"));
        assert_eq!(remove_part(&dp("1"), 1).unwrap(), dp(""));
        assert_eq!(remove_part(&dp("7,3"), 2).unwrap(), dp("7"));
        assert!(remove_part(&dp("7,3"), 3).is_err());
    }

    #[test]
    fn insertion_sign_examples() {
        assert_eq!(insertion_sign(9, &dp("5,3,1")).unwrap(), 1);
        assert_eq!(insertion_sign(1, &dp("5,3")).unwrap(), 1);
        assert_eq!(insertion_sign(3, &dp("5,1")).unwrap(), -1);
        assert!(insertion_sign(3, &dp("3")).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let show = |v: Vec<OddPartition>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(show(enumerate_op(2, OpFilter::All)), ["()", "(1)", "(1,1)"]);
        assert_eq!(show(enumerate_op(4, OpFilter::EvenMultiplicities)), ["()", "(1,1)", "(1,1,1,1)"]);
        assert_eq!(show(enumerate_op(4, OpFilter::DistinctEv)), ["()", "(3,1)"]);
        assert_eq!(enumerate_op(10, OpFilter::All).len(), 43);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(OddPartition::parse("2,1").is_err());
        assert!(OddPartition::parse("1,3").is_err());
        assert!(OddPartition::parse("x").is_err());
        assert_eq!(OddPartition::parse("").unwrap(), OddPartition::empty());
        assert_eq!(p("5,3,1,1").parts(), &[5, 3, 1, 1]);
    }

    #[test]
    fn q_dimension() {
        let c = fock_state_counts(6);
        assert_eq!(c[1], BigInt::from(1));
        assert_eq!(c[2], BigInt::from(1));
        assert_eq!(c[3], BigInt::from(2));
        assert!(q_dimension_check(0));
        assert!(q_dimension_check(6));
        assert!(q_dimension_check(12));
        assert!(q_dimension_check(20));
    }

    #[test]
    fn d_squared_is_rational_unit_times_factorials() {
        assert_eq!(d_squared(&p("3,3,1,1")), qi(4));
        assert_eq!(d_squared(&p("3,3,3")), q(-6, 1));
    }

    proptest! {
        #[test]
        fn add_then_remove(parts in proptest::collection::btree_set(0u32..8, 0..5), nu in 0u32..8) {
            let parts: Vec<u32> = parts.into_iter().map(|x| 2 * x + 1).collect();
            let alpha = DistinctOddPartition::new(parts).unwrap();
            let nu = 2 * nu + 1;
            prop_assume!(!alpha.contains(nu));
            let beta = add_part(&alpha, nu).unwrap();
            let pos = beta.parts().iter().position(|&x| x == nu).unwrap();
            prop_assert_eq!(remove_part(&beta, pos + 1).unwrap(), alpha.clone());
            let s = insertion_sign(nu, &alpha).unwrap();
            prop_assert_eq!(s, if pos % 2 == 0 { 1 } else { -1 });
        }
    }
}
