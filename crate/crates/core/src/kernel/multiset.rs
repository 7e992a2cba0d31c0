use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::kernel::dist::Dist;
use crate::kernel::scalar::Scalar;

/// Default cap on the number of multisets a single enumeration may produce.
pub const DEFAULT_MSET_CAP: u64 = 10_000_000;

/// A finite multiset: points with positive natural multiplicities.
///
/// Zero multiplicities are never stored, so the stored keys are exactly the
/// support.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Multiset<P: Ord> {
    entries: BTreeMap<P, u64>,
}

impl<P: Ord + Clone> Multiset<P> {
    pub fn empty() -> Self {
        Multiset {
            entries: BTreeMap::new(),
        }
    }

    /// Builds a multiset from `(point, multiplicity)` pairs; repeated points
    /// accumulate and zero multiplicities are skipped.
    pub fn from_pairs<I: IntoIterator<Item = (P, u64)>>(pairs: I) -> Self {
        let mut m = Self::empty();
        for (p, n) in pairs {
            m.insert(p, n);
        }
        m
    }

    /// The multiset counting each element of `items`.
    pub fn from_elements<I: IntoIterator<Item = P>>(items: I) -> Self {
        Self::from_pairs(items.into_iter().map(|p| (p, 1)))
    }

    pub fn singleton(p: P, n: u64) -> Self {
        Self::from_pairs([(p, n)])
    }

    pub fn insert(&mut self, p: P, n: u64) {
        if n > 0 {
            *self.entries.entry(p).or_insert(0) += n;
        }
    }

    pub fn mult(&self, p: &P) -> u64 {
        self.entries.get(p).copied().unwrap_or(0)
    }

    /// ‖φ‖, the number of elements counted with multiplicity.
    pub fn size(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &P> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, u64)> {
        self.entries.iter().map(|(p, &n)| (p, n))
    }

    /// Elements repeated by multiplicity, in point order.
    pub fn elements(&self) -> impl Iterator<Item = &P> {
        self.entries
            .iter()
            .flat_map(|(p, &n)| std::iter::repeat_n(p, n as usize))
    }

    /// Pointwise sum, the free commutative monoid structure.
    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (p, n) in other.iter() {
            out.insert(p.clone(), n);
        }
        out
    }

    /// Functorial image: `result(y) = Σ_{f(x)=y} φ(x)`.
    pub fn map<Q: Ord + Clone, F: Fn(&P) -> Q>(&self, f: F) -> Multiset<Q> {
        Multiset::from_pairs(self.iter().map(|(p, n)| (f(p), n)))
    }

    /// Frequentist learning: normalizes counts into a distribution.
    pub fn flrn<S: Scalar>(&self) -> Result<Dist<P, S>> {
        let size = self.size();
        if size == 0 {
            return Err(Error::EmptyMultiset);
        }
        let total = S::from_u64(size);
        Ok(Dist::from_normalized(
            self.iter()
                .map(|(p, n)| (p.clone(), S::from_u64(n) / total.clone())),
        ))
    }
}

impl<P: Ord + Clone> Default for Multiset<P> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<P: Ord + Clone> FromIterator<(P, u64)> for Multiset<P> {
    fn from_iter<I: IntoIterator<Item = (P, u64)>>(iter: I) -> Self {
        Self::from_pairs(iter)
    }
}

/// Multisets are ordered by their sorted element lists, compared
/// lexicographically: `2|0⟩ < 1|0⟩+1|1⟩ < 2|1⟩`.
impl<P: Ord + Clone> Ord for Multiset<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.elements().cmp(other.elements())
    }
}

impl<P: Ord + Clone> PartialOrd for Multiset<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P: Ord + fmt::Display> fmt::Display for Multiset<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        for (i, (p, n)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{n}|{p}⟩")?;
        }
        Ok(())
    }
}

impl<P: Ord + fmt::Debug> fmt::Debug for Multiset<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

/// Number of multisets of size `k` over `n` points, `C(k+n-1, n-1)`,
/// saturating at `u128::MAX`.
pub fn count_msets(n: usize, k: u64) -> u128 {
    if n == 0 {
        return u128::from(k == 0);
    }
    // C(k + n - 1, n - 1) computed as a running product of exact quotients.
    let r = (n - 1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=r {
        let num = k as u128 + i;
        acc = match acc.checked_mul(num) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

/// All multisets of size `k` over `base` (sorted and deduplicated first),
/// each exactly once, in the multiset order.
pub fn enumerate_msets<P: Ord + Clone>(base: &[P], k: u64) -> Result<Vec<Multiset<P>>> {
    enumerate_msets_capped(base, k, DEFAULT_MSET_CAP)
}

pub fn enumerate_msets_capped<P: Ord + Clone>(
    base: &[P],
    k: u64,
    cap: u64,
) -> Result<Vec<Multiset<P>>> {
    let mut base: Vec<P> = base.to_vec();
    base.sort();
    base.dedup();
    let count = count_msets(base.len(), k);
    if count > cap as u128 {
        return Err(Error::ResourceLimit { count, cap });
    }
    if base.is_empty() {
        return Ok(if k == 0 {
            vec![Multiset::empty()]
        } else {
            vec![]
        });
    }
    let n = base.len();
    let mut out = Vec::with_capacity(count as usize);
    // Nondecreasing index sequences of length k, lexicographically.
    let mut idx = vec![0usize; k as usize];
    loop {
        out.push(Multiset::from_elements(
            idx.iter().map(|&i| base[i].clone()),
        ));
        let Some(pos) = idx.iter().rposition(|&i| i < n - 1) else {
            break;
        };
        let next = idx[pos] + 1;
        for slot in &mut idx[pos..] {
            *slot = next;
        }
    }
    Ok(out)
}

/// The multinomial coefficient `‖φ‖! / ∏ φ(x)!`.
pub fn mset_coefficient<P: Ord + Clone>(phi: &Multiset<P>) -> BigUint {
    multinomial_coefficient(phi.iter().map(|(_, n)| n))
}

/// `(Σ counts)! / ∏ counts!`, built as a product of binomial coefficients.
pub fn multinomial_coefficient<I: IntoIterator<Item = u64>>(counts: I) -> BigUint {
    let mut acc = BigUint::one();
    let mut total: u64 = 0;
    for c in counts {
        for j in 1..=c {
            total += 1;
            acc *= BigUint::from(total);
            acc /= BigUint::from(j);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::scalar::{ratio, Rational};
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn urn() -> Multiset<char> {
        Multiset::from_pairs([('R', 3), ('G', 2), ('B', 5)])
    }

    #[test]
    fn size_and_zero_skipping() {
        let m = Multiset::from_pairs([('a', 0), ('b', 2), ('b', 1)]);
        assert_eq!(m.size(), 3);
        assert_eq!(m.support().count(), 1);
        assert_eq!(m.mult(&'a'), 0);
        assert_eq!(urn().size(), 10);
    }

    #[test]
    fn map_examples() {
        let m = Multiset::from_pairs([('R', 3), ('G', 2)]);
        assert_eq!(m.map(|x| *x), m);

        let pairs = Multiset::from_pairs([((0, 1), 1), ((1, 0), 2), ((1, 1), 1)]);
        assert_eq!(pairs.map(|p| p.0), Multiset::from_pairs([(0, 1), (1, 3)]));

        assert_eq!(urn().map(|_| '*'), Multiset::singleton('*', 10));
    }

    #[test]
    fn flrn_examples() {
        let d = urn().flrn::<Rational>().unwrap();
        assert_eq!(d.prob(&'R'), ratio(3, 10));
        assert_eq!(d.prob(&'G'), ratio(1, 5));
        assert_eq!(d.prob(&'B'), ratio(1, 2));

        let d = Multiset::singleton('x', 7).flrn::<Rational>().unwrap();
        assert_eq!(d.prob(&'x'), ratio(1, 1));

        let d = Multiset::from_elements(['a', 'b'])
            .flrn::<Rational>()
            .unwrap();
        assert_eq!(d.prob(&'a'), ratio(1, 2));
        assert_eq!(d.prob(&'b'), ratio(1, 2));

        assert_eq!(
            Multiset::<char>::empty().flrn::<f64>().unwrap_err(),
            Error::EmptyMultiset
        );
    }

    #[test]
    fn enumerate_examples() {
        let two = enumerate_msets(&[0, 1], 2).unwrap();
        assert_eq!(
            two,
            vec![
                Multiset::singleton(0, 2),
                Multiset::from_elements([0, 1]),
                Multiset::singleton(1, 2),
            ]
        );
        let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
        assert_eq!(enumerate_msets(&pairs, 2).unwrap().len(), 10);
        assert_eq!(
            enumerate_msets(&['a'], 5).unwrap(),
            vec![Multiset::singleton('a', 5)]
        );
        assert_eq!(
            enumerate_msets(&[1, 2, 3], 0).unwrap(),
            vec![Multiset::empty()]
        );
    }

    #[test]
    fn enumeration_respects_cap() {
        let base: Vec<u32> = (0..16).collect();
        let err = enumerate_msets_capped(&base, 10, 1000).unwrap_err();
        assert!(matches!(
            err,
            Error::ResourceLimit {
                count: 3268760,
                cap: 1000
            }
        ));
        assert_eq!(count_msets(4, 2), 10);
        assert_eq!(count_msets(0, 0), 1);
        assert_eq!(count_msets(0, 3), 0);
    }

    #[test]
    fn enumeration_is_sorted_and_counted() {
        for n in 1..5usize {
            for k in 0..6u64 {
                let base: Vec<usize> = (0..n).collect();
                let all = enumerate_msets(&base, k).unwrap();
                assert_eq!(all.len() as u128, count_msets(n, k));
                assert!(all.windows(2).all(|w| w[0] < w[1]));
                assert!(all.iter().all(|m| m.size() == k));
            }
        }
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(
            mset_coefficient(&Multiset::singleton('a', 2)),
            BigUint::from(1u32)
        );
        assert_eq!(
            mset_coefficient(&Multiset::from_elements(['a', 'b'])),
            BigUint::from(2u32)
        );
        let four = Multiset::from_elements([(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(mset_coefficient(&four), BigUint::from(24u32));
        assert_eq!(
            mset_coefficient(&Multiset::<u8>::empty()),
            BigUint::from(1u32)
        );
    }

    fn small_mset() -> impl Strategy<Value = Multiset<u8>> {
        proptest::collection::vec((0u8..6, 0u64..5), 0..6).prop_map(Multiset::from_pairs)
    }

    proptest! {
        #[test]
        fn map_is_a_monoid_homomorphism(a in small_mset(), b in small_mset(), m in 1u8..4) {
            let f = |x: &u8| x % m;
            prop_assert_eq!(a.plus(&b).map(f), a.map(f).plus(&b.map(f)));
            prop_assert_eq!(Multiset::<u8>::empty().map(f), Multiset::empty());
            prop_assert_eq!(a.map(f).size(), a.size());
        }

        #[test]
        fn addition_is_commutative_with_unit(a in small_mset(), b in small_mset(), c in small_mset()) {
            prop_assert_eq!(a.plus(&b), b.plus(&a));
            prop_assert_eq!(a.plus(&b).plus(&c), a.plus(&b.plus(&c)));
            prop_assert_eq!(a.plus(&Multiset::empty()), a.clone());
            prop_assert_eq!(a.plus(&b).size(), a.size() + b.size());
        }
    }
}
