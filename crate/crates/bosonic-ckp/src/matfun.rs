//! Division-free Pfaffian and Hafnian kernels over any commutative ring.

use crate::error::CkpError;
use crate::ring::{Ring, Q};
use num_traits::Zero;
use std::collections::HashMap;

/// Dense square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<R> {
    n: usize,
    entries: Vec<R>,
}

impl<R: Ring> SquareMatrix<R> {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> R) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        SquareMatrix { n, entries }
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        SquareMatrix { n, entries: rows.into_iter().flatten().collect() }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &R {
        &self.entries[i * self.n + j]
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        SquareMatrix::from_fn(self.n, |i, j| self.get(perm[i], perm[j]).clone())
    }

    fn is_skew(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i).is_zero_el() && (0..i).all(|j| self.get(i, j).add_el(self.get(j, i)).is_zero_el()))
    }
}

fn check_even(n: usize) -> Result<(), CkpError> {
    if n % 2 == 1 {
        return Err(CkpError::Invalid(format!("odd matrix order {n}")));
    }
    if n > 30 {
        return Err(CkpError::Invalid(format!("matrix order {n} too large for subset memoization")));
    }
    Ok(())
}

fn matching_sum<R: Ring>(a: &SquareMatrix<R>, signed: bool) -> R {
    fn rec<R: Ring>(a: &SquareMatrix<R>, mask: u32, signed: bool, memo: &mut HashMap<u32, R>) -> R {
        if mask == 0 {
            return R::one_el();
        }
        if let Some(v) = memo.get(&mask) {
            return v.clone();
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut acc = R::zero_el();
        let mut position = 0usize;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let entry = a.get(i, j);
            if !entry.is_zero_el() {
                let sub = rec(a, rest & !(1 << j), signed, memo);
                let term = entry.mul_el(&sub);
                acc = if signed && position % 2 == 1 { acc.sub_el(&term) } else { acc.add_el(&term) };
            }
            position += 1;
        }
        memo.insert(mask, acc.clone());
        acc
    }
    let full = if a.n == 32 { u32::MAX } else { (1u32 << a.n) - 1 };
    rec(a, full, signed, &mut HashMap::new())
}

/// Pfaffian by expansion along the lowest remaining index, memoized on index subsets.
pub fn pfaffian<R: Ring>(a: &SquareMatrix<R>) -> Result<R, CkpError> {
    check_even(a.n)?;
    if !a.is_skew() {
        return Err(CkpError::Invalid("Pfaffian of a non-skew-symmetric matrix".into()));
    }
    Ok(matching_sum(a, true))
}

/// Hafnian: sum over perfect matchings of products of upper off-diagonal entries.
pub fn hafnian<R: Ring>(a: &SquareMatrix<R>) -> Result<R, CkpError> {
    check_even(a.n)?;
    Ok(matching_sum(a, false))
}

/// Number of perfect matchings of `2k` points, `(2k−1)!!`.
pub fn hafnian_term_count(order: usize) -> Result<u64, CkpError> {
    check_even(order)?;
    Ok((1..order as u64).step_by(2).product())
}

/// Both sides of `Pf[(z_i−z_j)/(z_i+z_j)²] = ∏_{i<j}(z_i−z_j)/(z_i+z_j) · Hf[1/(z_i+z_j)]`.
pub fn pf_hf_sides(z: &[Q]) -> Result<(Q, Q), CkpError> {
    for i in 0..z.len() {
        for j in 0..i {
            if z[i] == z[j] {
                return Err(CkpError::Invalid("repeated points".into()));
            }
            if (&z[i] + &z[j]).is_zero() {
                return Err(CkpError::Invalid("points with z_i + z_j = 0".into()));
            }
        }
    }
    let n = z.len();
    let skew = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            Q::zero()
        } else {
            let s = &z[i] + &z[j];
            (&z[i] - &z[j]) / (&s * &s)
        }
    });
    let sym = SquareMatrix::from_fn(n, |i, j| if i == j { Q::zero() } else { (&z[i] + &z[j]).recip() });
    let lhs = pfaffian(&skew)?;
    let mut prefactor = Q::one_el();
    for i in 0..n {
        for j in i + 1..n {
            prefactor *= (&z[i] - &z[j]) / (&z[i] + &z[j]);
        }
    }
    let rhs = prefactor * hafnian(&sym)?;
    Ok((lhs, rhs))
}

pub fn verify_pf_hf_identity(z: &[Q]) -> Result<bool, CkpError> {
    let (l, r) = pf_hf_sides(z)?;
    Ok(l == r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{q, qi, SuperPoly, Var};
    use proptest::prelude::*;

    fn pv(i: u32) -> SuperPoly {
        SuperPoly::var(Var::param(crate::ring::PARAM_A, i))
    }

    fn det(m: &SquareMatrix<Q>) -> Q {
        let n = m.order();
        let mut a: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j).clone()).collect()).collect();
        let mut d = qi(1);
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else { return qi(0) };
            if p != c {
                a.swap(p, c);
                d = -d;
            }
            d *= a[c][c].clone();
            for r in c + 1..n {
                let f = &a[r][c] / &a[c][c];
                for k in c..n {
                    let v = &a[c][k] * &f;
                    a[r][k] -= v;
                }
            }
        }
        d
    }

    #[test]
    fn small_pfaffians() {
        let a = SquareMatrix::from_rows(vec![vec![SuperPoly::zero(), pv(0)], vec![-pv(0), SuperPoly::zero()]]);
        assert_eq!(pfaffian(&a).unwrap(), pv(0));
        let names = [[0, 1, 2, 3], [1, 0, 4, 5], [2, 4, 0, 6], [3, 5, 6, 0]];
        let b = SquareMatrix::from_fn(4, |i, j| {
            if i == j {
                SuperPoly::zero()
            } else if i < j {
                pv(names[i][j])
            } else {
                -pv(names[j][i])
            }
        });
        let (a_, b_, c_, d_, e_, f_) = (pv(1), pv(2), pv(3), pv(4), pv(5), pv(6));
        let expect = &(&(&a_ * &f_) - &(&b_ * &e_)) + &(&c_ * &d_);
        assert_eq!(pfaffian(&b).unwrap(), expect);
    }

    #[test]
    fn small_hafnians() {
        let names = [[0, 1, 2, 3], [1, 0, 4, 5], [2, 4, 0, 6], [3, 5, 6, 0]];
        let b = SquareMatrix::from_fn(4, |i, j| if i == j { pv(99) } else { pv(names[i][j]) });
        let expect = &(&(&pv(1) * &pv(6)) + &(&pv(2) * &pv(5))) + &(&pv(3) * &pv(4));
        assert_eq!(hafnian(&b).unwrap(), expect);
        let two = SquareMatrix::from_fn(2, |i, j| if i == j { pv(9) } else { pv(1) });
        assert_eq!(hafnian(&two).unwrap(), pv(1));
        assert_eq!(hafnian_term_count(6).unwrap(), 15);
        let ones = SquareMatrix::from_fn(6, |_, _| qi(1));
        assert_eq!(hafnian(&ones).unwrap(), qi(15));
    }

    #[test]
    fn errors() {
        let odd = SquareMatrix::from_fn(3, |_, _| qi(0));
        assert!(pfaffian(&odd).is_err());
        assert!(hafnian(&odd).is_err());
        let sym = SquareMatrix::from_fn(2, |i, j| if i == j { qi(0) } else { qi(1) });
        assert!(pfaffian(&sym).is_err());
        assert!(pf_hf_sides(&[qi(1), qi(1)]).is_err());
    }

    #[test]
    fn pf_hf_examples() {
        let (l, r) = pf_hf_sides(&[qi(2), qi(1)]).unwrap();
        assert_eq!(l, q(1, 9));
        assert_eq!(r, q(1, 9));
        assert!(verify_pf_hf_identity(&[q(1, 2), q(1, 3), q(1, 5), q(1, 7)]).unwrap());
        assert!(verify_pf_hf_identity(&[q(1, 2), q(1, 3), q(1, 5), q(1, 7), q(1, 11), q(1, 13)]).unwrap());
    }

    fn skew_from(vals: &[i64], n: usize) -> SquareMatrix<Q> {
        let mut it = vals.iter().cycle();
        let mut upper = vec![vec![qi(0); n]; n];
        for (i, row) in upper.iter_mut().enumerate() {
            for cell in row.iter_mut().skip(i + 1) {
                *cell = qi(*it.next().unwrap());
            }
        }
        SquareMatrix::from_fn(n, |i, j| {
            if i < j {
                upper[i][j].clone()
            } else if i > j {
                -upper[j][i].clone()
            } else {
                qi(0)
            }
        })
    }

    proptest! {
        #[test]
        fn pfaffian_squared_is_det(vals in proptest::collection::vec(-5i64..6, 28), k in 1usize..5) {
            let a = skew_from(&vals, 2 * k);
            let pf = pfaffian(&a).unwrap();
            prop_assert_eq!(&pf * &pf, det(&a));
        }

        #[test]
        fn pfaffian_sign_under_swap(vals in proptest::collection::vec(-5i64..6, 15), i in 0usize..6, j in 0usize..6) {
            prop_assume!(i != j);
            let a = skew_from(&vals, 6);
            let mut perm: Vec<usize> = (0..6).collect();
            perm.swap(i, j);
            prop_assert_eq!(pfaffian(&a.permute(&perm)).unwrap(), -pfaffian(&a).unwrap());
        }

        #[test]
        fn hafnian_permutation_invariant(vals in proptest::collection::vec(-5i64..6, 15), seed in 0usize..720) {
            let s = skew_from(&vals, 6);
            let a = SquareMatrix::from_fn(6, |i, j| if i < j { s.get(i, j).clone() } else { s.get(j, i).clone() });
            let mut perm: Vec<usize> = (0..6).collect();
            let mut x = seed;
            for i in (1..6).rev() {
                perm.swap(i, x % (i + 1));
                x /= i + 1;
            }
            prop_assert_eq!(hafnian(&a.permute(&perm)).unwrap(), hafnian(&a).unwrap());
        }

        #[test]
        fn pf_hf_identity_random(nums in proptest::collection::btree_set(1i64..60, 8), den in 1i64..9, k in 1usize..5) {
            let z: Vec<Q> = nums.iter().take(2 * k).map(|&n| q(n, den)).collect();
            prop_assert!(verify_pf_hf_identity(&z).unwrap());
        }
    }
}
