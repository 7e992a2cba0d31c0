//! Finite discrete distributions and their algebra.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::point::Point;
use crate::kernel::scalar::Scalar;

/// A finitely supported probability distribution.
///
/// Only strictly positive probabilities are stored, so the keys are the
/// support. In rational mode the probabilities sum to exactly one; in float
/// mode to within `1e-9`.
#[derive(Clone, PartialEq)]
pub struct Dist<P: Ord, S> {
    entries: BTreeMap<P, S>,
}

impl<P: Ord + Clone, S: Scalar> Dist<P, S> {
    /// Builds a distribution from `(point, probability)` pairs, merging
    /// repeated points and dropping zeros. Fails on negative entries or when
    /// the total is not one.
    pub fn new<I: IntoIterator<Item = (P, S)>>(pairs: I) -> Result<Self> {
        let mut entries: BTreeMap<P, S> = BTreeMap::new();
        for (p, s) in pairs {
            if s.is_negative() {
                return Err(Error::OutOfRange(format!(
                    "negative probability {:?}",
                    s.to_f64()
                )));
            }
            accumulate(&mut entries, p, s);
        }
        entries.retain(|_, s| !s.is_zero());
        let total = S::sum(entries.values().cloned());
        if !total.close_to(&S::one(), S::normalization_tolerance()) {
            return Err(Error::NotNormalized(format!("{}", total.to_f64())));
        }
        Ok(Dist { entries })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights<I: IntoIterator<Item = (P, S)>>(pairs: I) -> Result<Self> {
        let mut entries: BTreeMap<P, S> = BTreeMap::new();
        for (p, s) in pairs {
            if s.is_negative() {
                return Err(Error::OutOfRange(format!(
                    "negative weight {:?}",
                    s.to_f64()
                )));
            }
            accumulate(&mut entries, p, s);
        }
        entries.retain(|_, s| !s.is_zero());
        let total = S::sum(entries.values().cloned());
        if total.is_zero() {
            return Err(Error::OutOfRange("weights sum to zero".into()));
        }
        for s in entries.values_mut() {
            *s = s.clone() / total.clone();
        }
        Ok(Dist { entries })
    }

    /// For operations that preserve normalization by construction.
    pub(crate) fn from_normalized<I: IntoIterator<Item = (P, S)>>(pairs: I) -> Self {
        let mut entries: BTreeMap<P, S> = BTreeMap::new();
        for (p, s) in pairs {
            accumulate(&mut entries, p, s);
        }
        entries.retain(|_, s| !s.is_zero());
        Dist { entries }
    }

    /// The point mass `1|p⟩`.
    pub fn point(p: P) -> Self {
        Dist {
            entries: BTreeMap::from([(p, S::one())]),
        }
    }

    /// Uniform distribution over the distinct elements of `points`.
    pub fn uniform<I: IntoIterator<Item = P>>(points: I) -> Result<Self> {
        Self::from_weights(points.into_iter().map(|p| (p, S::one())))
    }

    /// `ω(p)`, zero outside the support.
    pub fn prob(&self, p: &P) -> S {
        self.entries.get(p).cloned().unwrap_or_else(S::zero)
    }

    pub fn get(&self, p: &P) -> Option<&S> {
        self.entries.get(p)
    }

    pub fn contains(&self, p: &P) -> bool {
        self.entries.contains_key(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, &S)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &P> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> S {
        S::sum(self.entries.values().cloned())
    }

    /// Functorial image along `f`: `result(y) = Σ_{f(x)=y} ω(x)`.
    pub fn map<Q: Ord + Clone, F: Fn(&P) -> Q>(&self, f: F) -> Dist<Q, S> {
        Dist::from_normalized(self.iter().map(|(p, s)| (f(p), s.clone())))
    }

    /// Parallel product `(ω⊗ρ)(x,y) = ω(x)·ρ(y)` on pairs.
    pub fn tensor<Q: Ord + Clone>(&self, other: &Dist<Q, S>) -> Dist<(P, Q), S> {
        Dist::from_normalized(self.iter().flat_map(|(p, s)| {
            other
                .iter()
                .map(move |(q, t)| ((p.clone(), q.clone()), s.clone() * t.clone()))
        }))
    }

    /// Convolution along a commutative-monoid operation: the image of
    /// `ω⊗ρ` under `add`.
    pub fn convolve<F: Fn(&P, &P) -> P>(&self, other: &Self, add: F) -> Self {
        Dist::from_normalized(self.iter().flat_map(|(p, s)| {
            other
                .iter()
                .map(|(q, t)| (add(p, q), s.clone() * t.clone()))
                .collect::<Vec<_>>()
        }))
    }

    /// Validity `ω ⊨ obs = Σ_x ω(x)·obs(x)`.
    pub fn validity<F: Fn(&P) -> S>(&self, obs: F) -> S {
        S::sum(self.iter().map(|(p, s)| s.clone() * obs(p)))
    }

    /// Mixes distributions with the given nonnegative weights (summing to one).
    pub fn mixture<'a, I>(parts: I) -> Self
    where
        I: IntoIterator<Item = (S, &'a Dist<P, S>)>,
        P: 'a,
    {
        Dist::from_normalized(parts.into_iter().flat_map(|(w, d)| {
            d.iter()
                .map(|(p, s)| (p.clone(), w.clone() * s.clone()))
                .collect::<Vec<_>>()
        }))
    }

    /// Converts probabilities to doubles.
    pub fn to_float(&self) -> Dist<P, f64> {
        Dist {
            entries: self
                .entries
                .iter()
                .map(|(p, s)| (p.clone(), s.to_f64()))
                .collect(),
        }
    }

    /// Largest pointwise difference `max_x |ω(x) - ρ(x)|`, over both supports.
    pub fn linf_distance(&self, other: &Self) -> f64 {
        self.support()
            .chain(other.support())
            .map(|p| (self.prob(p).to_f64() - other.prob(p).to_f64()).abs())
            .fold(0.0, f64::max)
    }
}

fn accumulate<P: Ord, S: Scalar>(entries: &mut BTreeMap<P, S>, p: P, s: S) {
    match entries.get_mut(&p) {
        Some(v) => *v = v.clone() + s,
        None => {
            entries.insert(p, s);
        }
    }
}

impl<P: Ord + fmt::Debug, S: fmt::Debug> fmt::Debug for Dist<P, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl<S: Scalar> Dist<Point, S> {
    /// Convolution on integer tuples under componentwise addition.
    pub fn convolve_points(&self, other: &Self) -> Self {
        self.convolve(other, Point::add)
    }

    /// Tensor product with tuples concatenated, `(x..., y...)`.
    pub fn tensor_points(&self, other: &Self) -> Self {
        self.tensor(other).map(|(p, q)| p.concat(q))
    }

    /// Image under the projection onto coordinate `i`.
    pub fn marginal(&self, i: usize) -> Self {
        self.map(|p| p.project(i))
    }

    /// Common dimension of the support points.
    pub fn dim(&self) -> Result<usize> {
        let mut dims = self.support().map(Point::dim);
        let d = dims.next().unwrap_or(0);
        if dims.all(|e| e == d) {
            Ok(d)
        } else {
            Err(Error::WrongSpace("points of mixed dimension".into()))
        }
    }

    /// Mean, variance and covariance of the coordinate projections.
    pub fn moments(&self) -> Result<Moments<S>> {
        let n = self.dim()?;
        let coord = |p: &Point, i: usize| S::from_i64(p.coord(i));
        let mean: Vec<S> = (0..n).map(|i| self.validity(|p| coord(p, i))).collect();
        let mut cov = vec![vec![S::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let joint = self.validity(|p| coord(p, i) * coord(p, j));
                let c = joint - mean[i].clone() * mean[j].clone();
                cov[i][j] = c.clone();
                cov[j][i] = c;
            }
        }
        let var = (0..n).map(|i| cov[i][i].clone()).collect();
        Ok(Moments { mean, var, cov })
    }

    /// Whether a joint distribution on `2×2` differs from the product of its
    /// marginals, tested as `τ(0,0)·τ(1,1) ≠ τ(0,1)·τ(1,0)`.
    pub fn is_entwined(&self) -> Result<bool> {
        if let Some(p) = self.support().find(|p| p.dim() != 2 || !p.is_bits()) {
            return Err(Error::WrongSpace(format!("{p} is not in 2×2")));
        }
        let r = |a, b| self.prob(&Point::from([a, b]));
        let lhs = r(0, 0) * r(1, 1);
        let rhs = r(0, 1) * r(1, 0);
        Ok(match S::MODE {
            crate::kernel::scalar::Mode::Rational => lhs != rhs,
            crate::kernel::scalar::Mode::Float => (lhs - rhs).to_f64().abs() > 1e-12,
        })
    }
}

/// First and second moments of a distribution over integer tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<S> {
    pub mean: Vec<S>,
    pub var: Vec<S>,
    pub cov: Vec<Vec<S>>,
}

/// Kullback–Leibler divergence `Σ_{x∈supp p} p(x)·ln(p(x)/q(x))`.
///
/// Fails if `q` vanishes somewhere on the support of `p`.
pub fn kl_divergence<P, S>(p: &Dist<P, S>, q: &Dist<P, S>) -> Result<f64>
where
    P: Ord + Clone + fmt::Debug,
    S: Scalar,
{
    let mut acc = 0.0;
    for (x, px) in p.iter() {
        let qx = q.prob(x).to_f64();
        if qx <= 0.0 {
            return Err(Error::SupportMismatch(format!(
                "{x:?} has no mass in the model"
            )));
        }
        let px = px.to_f64();
        acc += px * (px / qx).ln();
    }
    // Rounding can produce -1e-17 for identical inputs.
    Ok(acc.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::scalar::{ratio, Rational};
    use proptest::prelude::*;

    type Q = Rational;

    fn flip(r: Q) -> Dist<Point, Q> {
        let one = <Q as Scalar>::one();
        Dist::new([(Point::scalar(1), r.clone()), (Point::scalar(0), one - r)]).unwrap()
    }

    fn pt<const N: usize>(c: [i64; N]) -> Point {
        Point::from(c)
    }

    fn gamma() -> Dist<Point, Q> {
        Dist::new([
            (pt([0, 0]), ratio(3, 8)),
            (pt([0, 1]), ratio(5, 12)),
            (pt([1, 0]), ratio(1, 12)),
            (pt([1, 1]), ratio(1, 8)),
        ])
        .unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            Dist::<u8, Q>::new([(0, ratio(1, 2))]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            Dist::<u8, Q>::new([(0, ratio(3, 2)), (1, ratio(-1, 2))]),
            Err(Error::OutOfRange(_))
        ));
        let d = Dist::<u8, Q>::new([(0, ratio(1, 2)), (1, ratio(0, 1)), (0, ratio(1, 2))]).unwrap();
        assert_eq!(d.len(), 1);
        assert!(Dist::<u8, f64>::new([(0, 0.3), (1, 0.7 + 1e-12)]).is_ok());
        assert!(Dist::<u8, f64>::new([(0, 0.3), (1, 0.71)]).is_err());
    }

    #[test]
    fn map_examples() {
        let g = gamma();
        assert_eq!(g.map(|p| p.clone()), g);
        let d = Dist::new([(pt([0, 0]), ratio(1, 2)), (pt([1, 1]), ratio(1, 2))]).unwrap();
        assert_eq!(d.marginal(0), flip(ratio(1, 2)));
    }

    #[test]
    fn tensor_examples() {
        let w = flip(ratio(1, 3));
        let unit: Dist<char, Q> = Dist::point('a');
        let t = unit.tensor(&w);
        assert_eq!(t.map(|(_, q)| q.clone()), w);
        assert!(t.support().all(|(a, _)| *a == 'a'));

        let half = flip(ratio(1, 2)).tensor_points(&flip(ratio(1, 2)));
        assert!(half.iter().all(|(_, s)| *s == ratio(1, 4)));
        assert_eq!(half.len(), 4);

        let t = flip(ratio(1, 3)).tensor_points(&flip(ratio(1, 4)));
        assert_eq!(t.prob(&pt([0, 0])), ratio(1, 2));
        assert_eq!(t.prob(&pt([0, 1])), ratio(1, 6));
        assert_eq!(t.prob(&pt([1, 0])), ratio(1, 4));
        assert_eq!(t.prob(&pt([1, 1])), ratio(1, 12));
    }

    #[test]
    fn entwinedness() {
        assert!(gamma().is_entwined().unwrap());
        let prod = flip(ratio(2, 7)).tensor_points(&flip(ratio(1, 5)));
        assert!(!prod.is_entwined().unwrap());
        let uniform = Dist::<Point, Q>::uniform(Point::all_bits(2)).unwrap();
        assert!(!uniform.is_entwined().unwrap());
        let bad = Dist::<Point, Q>::point(pt([2, 0]));
        assert!(matches!(bad.is_entwined(), Err(Error::WrongSpace(_))));
    }

    #[test]
    fn convolution_examples() {
        let w = flip(ratio(2, 5));
        assert_eq!(w.convolve_points(&Dist::point(Point::scalar(0))), w);

        let b = flip(ratio(1, 3)).convolve_points(&flip(ratio(1, 3)));
        assert_eq!(b.prob(&Point::scalar(0)), ratio(4, 9));
        assert_eq!(b.prob(&Point::scalar(1)), ratio(4, 9));
        assert_eq!(b.prob(&Point::scalar(2)), ratio(1, 9));
    }

    #[test]
    fn validity_examples() {
        let w = flip(ratio(7, 10));
        assert_eq!(w.validity(|_| ratio(1, 1)), ratio(1, 1));
        assert_eq!(w.validity(|p| Q::from_i64(p.coord(0))), ratio(7, 10));
    }

    #[test]
    fn moments_examples() {
        let m = Dist::<Point, Q>::point(pt([3, 5])).moments().unwrap();
        assert_eq!(m.mean, vec![ratio(3, 1), ratio(5, 1)]);
        assert_eq!(m.var, vec![ratio(0, 1), ratio(0, 1)]);
        assert_eq!(m.cov[0][1], ratio(0, 1));

        let m = gamma().moments().unwrap();
        assert_eq!(m.mean, vec![ratio(5, 24), ratio(13, 24)]);
        assert_eq!(m.var[0], ratio(95, 576));
        assert_eq!(m.cov[0][1], ratio(7, 576));
        assert_eq!(m.cov[1][0], m.cov[0][1]);
    }

    #[test]
    fn kl_examples() {
        let p = flip(ratio(1, 4));
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);

        let a: Dist<char, Q> = Dist::point('a');
        let ab: Dist<char, Q> = Dist::uniform(['a', 'b']).unwrap();
        assert!((kl_divergence(&a, &ab).unwrap() - 2f64.ln()).abs() < 1e-15);

        let expected = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
        let got = kl_divergence(&p, &flip(ratio(1, 2))).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.1308).abs() < 1e-4);

        assert!(matches!(
            kl_divergence(&ab, &a),
            Err(Error::SupportMismatch(_))
        ));
    }

    fn rational_dist(max_point: i64) -> impl Strategy<Value = Dist<Point, Q>> {
        proptest::collection::vec((0..=max_point, 0i64..6), 1..5).prop_filter_map(
            "nonzero weights",
            |ws| {
                Dist::from_weights(
                    ws.into_iter()
                        .map(|(p, w)| (Point::scalar(p), Q::from_i64(w))),
                )
                .ok()
            },
        )
    }

    fn brute_moments(d: &Dist<Point, Q>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let pts: Vec<(Vec<f64>, f64)> = d
            .iter()
            .map(|(p, s)| (p.coords().iter().map(|&c| c as f64).collect(), s.to_f64()))
            .collect();
        let n = pts[0].0.len();
        let mut mean = vec![0.0; n];
        for (x, w) in &pts {
            for i in 0..n {
                mean[i] += w * x[i];
            }
        }
        let mut cov = vec![vec![0.0; n]; n];
        for (x, w) in &pts {
            for i in 0..n {
                for j in 0..n {
                    cov[i][j] += w * (x[i] - mean[i]) * (x[j] - mean[j]);
                }
            }
        }
        (mean, cov)
    }

    proptest! {
        #[test]
        fn map_preserves_mass(d in rational_dist(6), m in 1i64..4) {
            prop_assert_eq!(d.map(|p| Point::scalar(p.coord(0) % m)).total(), ratio(1, 1));
        }

        #[test]
        fn tensor_marginals_recover_factors(a in rational_dist(3), b in rational_dist(3)) {
            let t = a.tensor(&b);
            prop_assert_eq!(t.map(|(x, _)| x.clone()), a.clone());
            prop_assert_eq!(t.map(|(_, y)| y.clone()), b.clone());
            prop_assert_eq!(a.tensor_points(&b).marginal(1), b);
        }

        #[test]
        fn convolution_is_commutative_and_associative(
            a in rational_dist(6), b in rational_dist(6), c in rational_dist(6)
        ) {
            prop_assert_eq!(a.convolve_points(&b), b.convolve_points(&a));
            prop_assert_eq!(
                a.convolve_points(&b).convolve_points(&c),
                a.convolve_points(&b.convolve_points(&c))
            );
        }

        #[test]
        fn products_over_two_are_not_entwined(r in 0i64..=9, s in 0i64..=9) {
            let t = flip(ratio(r, 9)).tensor_points(&flip(ratio(s, 9)));
            prop_assert!(!t.is_entwined().unwrap());
        }

        #[test]
        fn moments_match_double_loop(a in rational_dist(4), b in rational_dist(5)) {
            let d = a.tensor_points(&b);
            let m = d.moments().unwrap();
            let (mean, cov) = brute_moments(&d);
            for i in 0..2 {
                prop_assert!((m.mean[i].to_f64() - mean[i]).abs() < 1e-12);
                prop_assert_eq!(&m.var[i], &m.cov[i][i]);
                for j in 0..2 {
                    prop_assert!((m.cov[i][j].to_f64() - cov[i][j]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn kl_is_nonnegative_and_zero_on_equal(a in rational_dist(5), b in rational_dist(5)) {
            let ab = a.convolve_points(&b);
            let q = Dist::mixture([(ratio(1, 2), &ab), (ratio(1, 2), &a)]);
            let k = kl_divergence(&a, &q).unwrap();
            prop_assert!(k >= 0.0);
            prop_assert!(kl_divergence(&a, &a).unwrap().abs() < 1e-12);
            if a != q {
                prop_assert!(k > 1e-12);
            }
        }
    }
}
