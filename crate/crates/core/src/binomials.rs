//! Flips, binomials, multinomials and multivariate binomial distributions.
//!
//! The multivariate binomial of an `N`-coin `γ ∈ D(2^N)` with `K` tosses is
//! the image of `multinomial[K](γ)` under the marginal heads map, which
//! counts the ones in each coordinate of a multiset of bit tuples. For
//! `N = 2` a faster path sums multinomial terms over the closed-form fibers
//! of the heads map; both paths agree exactly.

use std::fmt;

use log::warn;
use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::kernel::{
    count_msets, enumerate_msets_capped, mset_coefficient, multinomial_coefficient, Dist, Multiset,
    Point, Scalar, DEFAULT_MSET_CAP,
};

/// Default largest coin dimension accepted for exact enumeration.
pub const DEFAULT_MAX_DIM: usize = 3;

/// Tolerance below which float-mode recovery clamps instead of failing.
pub const RECOVER_TOLERANCE: f64 = 1e-9;

/// Resource limits for enumeration-based constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub mset_cap: u64,
    pub max_dim: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            mset_cap: DEFAULT_MSET_CAP,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl Limits {
    /// Defaults, with the multiset cap taken from `BITOSS_MSET_CAP` when set.
    pub fn from_env() -> Result<Self> {
        let mut limits = Limits::default();
        if let Ok(v) = std::env::var("BITOSS_MSET_CAP") {
            limits.mset_cap = v
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("BITOSS_MSET_CAP={v:?} is not a count")))?;
        }
        Ok(limits)
    }
}

/// A distribution on the bit tuples `{0,1}^N`.
#[derive(Clone, PartialEq)]
pub struct Coin<S> {
    dim: usize,
    dist: Dist<Point, S>,
}

impl<S: Scalar> Coin<S> {
    pub fn new(dist: Dist<Point, S>) -> Result<Self> {
        Self::with_max_dim(dist, DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(dist: Dist<Point, S>, max_dim: usize) -> Result<Self> {
        let dim = dist.dim()?;
        if dim == 0 {
            return Err(Error::WrongSpace("coin of dimension 0".into()));
        }
        if dim > max_dim {
            return Err(Error::OutOfRange(format!(
                "coin dimension {dim} exceeds the cap {max_dim}"
            )));
        }
        if let Some(p) = dist.support().find(|p| !p.is_bits()) {
            return Err(Error::WrongSpace(format!("{p} is not a bit tuple")));
        }
        Ok(Coin { dim, dist })
    }

    /// `r|1⟩ + (1-r)|0⟩` on one-bit tuples.
    pub fn flip(r: S) -> Result<Self> {
        check_probability(&r)?;
        let q = S::one() - r.clone();
        let dist = Dist::new([(Point::scalar(1), r), (Point::scalar(0), q)])?;
        Ok(Coin { dim: 1, dist })
    }

    /// Two-coin from its probabilities at `(0,0), (0,1), (1,0), (1,1)`.
    pub fn two(r00: S, r01: S, r10: S, r11: S) -> Result<Self> {
        let dist = Dist::new([
            (Point::from([0, 0]), r00),
            (Point::from([0, 1]), r01),
            (Point::from([1, 0]), r10),
            (Point::from([1, 1]), r11),
        ])?;
        Ok(Coin { dim: 2, dist })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dist(&self) -> &Dist<Point, S> {
        &self.dist
    }

    pub fn into_dist(self) -> Dist<Point, S> {
        self.dist
    }

    pub fn prob(&self, bits: &[i64]) -> S {
        self.dist.prob(&Point::new(bits.to_vec()))
    }

    /// Probability of a one in coordinate `i`, i.e. `γ_i(1)`.
    pub fn heads_prob(&self, i: usize) -> S {
        S::sum(
            self.dist
                .iter()
                .filter(|(p, _)| p.coord(i) == 1)
                .map(|(_, s)| s.clone()),
        )
    }

    /// The coin with every bit flipped.
    pub fn complement(&self) -> Self {
        Coin {
            dim: self.dim,
            dist: self.dist.map(Point::complement_bits),
        }
    }

    /// Probabilities of all `2^N` tuples in lexicographic order, zeros included.
    pub fn table(&self) -> Vec<S> {
        Point::all_bits(self.dim)
            .iter()
            .map(|p| self.dist.prob(p))
            .collect()
    }

    pub fn to_float(&self) -> Coin<f64> {
        Coin {
            dim: self.dim,
            dist: self.dist.to_float(),
        }
    }

    /// Largest entrywise difference between two coins of equal dimension.
    pub fn linf_distance(&self, other: &Self) -> f64 {
        self.dist.linf_distance(&other.dist)
    }
}

impl<S: fmt::Debug> fmt::Debug for Coin<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coin{}{:?}", self.dim, self.dist)
    }
}

/// A distribution on the grid `{0,…,K}^N`.
#[derive(Clone, PartialEq)]
pub struct GridDist<S> {
    k: u64,
    dim: usize,
    dist: Dist<Point, S>,
}

impl<S: Scalar> GridDist<S> {
    pub fn new(k: u64, dim: usize, dist: Dist<Point, S>) -> Result<Self> {
        let k_max = k as i64;
        if let Some(p) = dist
            .support()
            .find(|p| p.dim() != dim || p.coords().iter().any(|&c| c < 0 || c > k_max))
        {
            return Err(Error::WrongSpace(format!(
                "{p} is outside the grid {{0,…,{k}}}^{dim}"
            )));
        }
        Ok(GridDist { k, dim, dist })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dist(&self) -> &Dist<Point, S> {
        &self.dist
    }

    pub fn into_dist(self) -> Dist<Point, S> {
        self.dist
    }

    pub fn prob(&self, cell: &[i64]) -> S {
        self.dist.prob(&Point::new(cell.to_vec()))
    }

    /// Every grid cell in lexicographic order.
    pub fn cells(&self) -> Vec<Point> {
        grid_cells(self.k, self.dim)
    }

    /// Convolution on ℕᴺ; the toss counts add.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::WrongSpace(
                "convolving grids of different dimension".into(),
            ));
        }
        GridDist::new(
            self.k + other.k,
            self.dim,
            self.dist.convolve_points(&other.dist),
        )
    }

    pub fn to_float(&self) -> GridDist<f64> {
        GridDist {
            k: self.k,
            dim: self.dim,
            dist: self.dist.to_float(),
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for GridDist<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid[K={},N={}]{:?}", self.k, self.dim, self.dist)
    }
}

/// All points of `{0,…,K}^N` in lexicographic order.
pub fn grid_cells(k: u64, dim: usize) -> Vec<Point> {
    let side = k as i64 + 1;
    let total = (side as usize).pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut c = vec![0i64; dim];
            for slot in c.iter_mut().rev() {
                *slot = (idx % side as usize) as i64;
                idx /= side as usize;
            }
            Point(c)
        })
        .collect()
}

fn check_probability<S: Scalar>(r: &S) -> Result<()> {
    if r.is_negative() || *r > S::one() || r.to_f64().is_nan() {
        return Err(Error::OutOfRange(format!(
            "{} is not a probability",
            r.to_f64()
        )));
    }
    Ok(())
}

/// `flip(r) = r|1⟩ + (1-r)|0⟩` as a distribution on one-element tuples.
pub fn flip<S: Scalar>(r: S) -> Result<Dist<Point, S>> {
    Coin::flip(r).map(Coin::into_dist)
}

fn binomial_coefficient(k: u64, n: u64) -> BigUint {
    multinomial_coefficient([n, k - n])
}

/// `binomial[K](r)(n) = C(K,n)·rⁿ·(1-r)^{K-n}` on one-element tuples `[n]`.
pub fn binomial<S: Scalar>(k: u64, r: S) -> Result<Dist<Point, S>> {
    check_probability(&r)?;
    let q = S::one() - r.clone();
    Ok(Dist::from_normalized((0..=k).map(|n| {
        let p = S::from_biguint(&binomial_coefficient(k, n)) * r.powu(n) * q.powu(k - n);
        (Point::scalar(n as i64), p)
    })))
}

/// `⟨φ⟩·∏_x ω(x)^{φ(x)}`, the multinomial probability of the draw `φ`.
pub fn multinomial_prob<P: Ord + Clone, S: Scalar>(phi: &Multiset<P>, omega: &Dist<P, S>) -> S {
    let mut acc = S::from_biguint(&mset_coefficient(phi));
    for (x, n) in phi.iter() {
        acc = acc * omega.prob(x).powu(n);
    }
    acc
}

/// The multinomial distribution of size-`k` draws from `omega`.
pub fn multinomial<P: Ord + Clone, S: Scalar>(
    k: u64,
    omega: &Dist<P, S>,
) -> Result<Dist<Multiset<P>, S>> {
    multinomial_with(k, omega, &Limits::default())
}

pub fn multinomial_with<P: Ord + Clone, S: Scalar>(
    k: u64,
    omega: &Dist<P, S>,
    limits: &Limits,
) -> Result<Dist<Multiset<P>, S>> {
    let base: Vec<P> = omega.support().cloned().collect();
    let draws = enumerate_msets_capped(&base, k, limits.mset_cap)?;
    Ok(Dist::from_normalized(draws.into_iter().map(|phi| {
        let p = multinomial_prob(&phi, omega);
        (phi, p)
    })))
}

/// Marginal heads: the number of ones in each of the `dim` coordinates.
pub fn heads(phi: &Multiset<Point>, dim: usize) -> Result<Point> {
    let mut counts = vec![0i64; dim];
    for (p, n) in phi.iter() {
        if p.dim() != dim || !p.is_bits() {
            return Err(Error::WrongSpace(format!("{p} is not a {dim}-bit tuple")));
        }
        for (c, &b) in counts.iter_mut().zip(p.coords()) {
            *c += b * n as i64;
        }
    }
    Ok(Point(counts))
}

/// The multisets of size `k` over `2×2` whose heads are `(n1, n2)`, by the
/// closed-form parameterization of the fiber.
pub fn fiber(k: u64, n1: u64, n2: u64) -> Result<Vec<Multiset<Point>>> {
    if n1 > k || n2 > k {
        return Err(Error::OutOfRange(format!(
            "heads ({n1},{n2}) outside 0..={k}"
        )));
    }
    let cell = |a, b| Point::from([a, b]);
    let out = if n1 <= n2 {
        (0..=n1.min(k - n2))
            .map(|i| {
                Multiset::from_pairs([
                    (cell(0, 0), k - n2 - i),
                    (cell(0, 1), n2 - n1 + i),
                    (cell(1, 0), i),
                    (cell(1, 1), n1 - i),
                ])
            })
            .collect()
    } else {
        (0..=n2.min(k - n1))
            .map(|i| {
                Multiset::from_pairs([
                    (cell(0, 0), k - n1 - i),
                    (cell(0, 1), i),
                    (cell(1, 0), n1 - n2 + i),
                    (cell(1, 1), n2 - i),
                ])
            })
            .collect()
    };
    Ok(out)
}

/// Multivariate binomial as the heads image of the multinomial.
pub fn mvbin_functorial<S: Scalar>(k: u64, coin: &Coin<S>) -> Result<GridDist<S>> {
    mvbin_functorial_with(k, coin, &Limits::default())
}

pub fn mvbin_functorial_with<S: Scalar>(
    k: u64,
    coin: &Coin<S>,
    limits: &Limits,
) -> Result<GridDist<S>> {
    if coin.dim() > limits.max_dim {
        return Err(Error::OutOfRange(format!(
            "coin dimension {} exceeds the cap {}",
            coin.dim(),
            limits.max_dim
        )));
    }
    let dim = coin.dim();
    let mn = multinomial_with(k, coin.dist(), limits)?;
    // heads cannot fail: the multinomial is supported on multisets of coin points.
    let grid = mn.map(|phi| heads(phi, dim).expect("coin points are bit tuples"));
    GridDist::new(k, dim, grid)
}

/// Bivariate binomial by summing multinomial terms over each fiber.
pub fn bivbin_direct<S: Scalar>(k: u64, coin: &Coin<S>) -> Result<GridDist<S>> {
    if coin.dim() != 2 {
        return Err(Error::WrongSpace(format!(
            "bivariate binomial needs a two-coin, got dimension {}",
            coin.dim()
        )));
    }
    let mut cells = Vec::with_capacity(((k + 1) * (k + 1)) as usize);
    for n1 in 0..=k {
        for n2 in 0..=k {
            let p = S::sum(
                fiber(k, n1, n2)?
                    .iter()
                    .map(|phi| multinomial_prob(phi, coin.dist())),
            );
            cells.push((Point::from([n1 as i64, n2 as i64]), p));
        }
    }
    GridDist::new(k, 2, Dist::from_normalized(cells))
}

/// The bivariate binomial that counts zeros (tails) in each coordinate:
/// cell `(k, l)` collects `K!/(i!(k-i)!(l-i)!(K-k-l+i)!)·γ(0,0)^i·γ(0,1)^{k-i}·γ(1,0)^{l-i}·γ(1,1)^{K-k-l+i}`.
pub fn bivbin_tails<S: Scalar>(k: u64, coin: &Coin<S>) -> Result<GridDist<S>> {
    if coin.dim() != 2 {
        return Err(Error::WrongSpace(format!(
            "bivariate binomial needs a two-coin, got dimension {}",
            coin.dim()
        )));
    }
    let [g00, g01, g10, g11]: [S; 4] = coin.table().try_into().expect("two-coin has four cells");
    let mut cells = Vec::new();
    for a in 0..=k {
        for b in 0..=k {
            let lo = (a + b).saturating_sub(k);
            let mut p = S::zero();
            for i in lo..=a.min(b) {
                let counts = [i, a - i, b - i, k + i - a - b];
                let term = S::from_biguint(&multinomial_coefficient(counts))
                    * g00.powu(counts[0])
                    * g01.powu(counts[1])
                    * g10.powu(counts[2])
                    * g11.powu(counts[3]);
                p = p + term;
            }
            cells.push((Point::from([a as i64, b as i64]), p));
        }
    }
    GridDist::new(k, 2, Dist::from_normalized(cells))
}

/// Number of multisets the functorial construction enumerates.
pub fn functorial_cost<S: Scalar>(k: u64, coin: &Coin<S>) -> u128 {
    count_msets(coin.dist().len(), k)
}

fn check_recoverable<S: Scalar>(grid: &Dist<Point, S>, k: u64) -> Result<()> {
    if k == 0 {
        return Err(Error::OutOfRange("recovery needs K ≥ 1".into()));
    }
    GridDist::new(k, 2, grid.clone()).map(|_| ())
}

/// Two-coin entries `[γ00, γ01, γ10, γ11]` from the mean and covariance of a
/// grid distribution with `k` tosses, unclamped.
pub fn recover_raw<S: Scalar>(grid: &Dist<Point, S>, k: u64) -> Result<[S; 4]> {
    check_recoverable(grid, k)?;
    let m = grid.moments()?;
    let kk = S::from_u64(k);
    let (m1, m2) = (m.mean[0].clone(), m.mean[1].clone());
    let g11 =
        m.cov[0][1].clone() / kk.clone() + m1.clone() * m2.clone() / (kk.clone() * kk.clone());
    let g10 = m1 / kk.clone() - g11.clone();
    let g01 = m2 / kk - g11.clone();
    let g00 = S::one() - g10.clone() - g01.clone() - g11.clone();
    Ok([g00, g01, g10, g11])
}

/// Recovers the two-coin of a bivariate binomial from its mean and
/// covariance.
///
/// In rational mode the result is exact and any entry outside `[0,1]` is an
/// error. In float mode entries within `1e-9` of the interval are clamped
/// and the coin renormalized; anything further out is an error.
pub fn recover<S: Scalar>(grid: &Dist<Point, S>, k: u64) -> Result<Coin<S>> {
    let raw = recover_raw(grid, k)?;
    let tol = match S::MODE {
        crate::kernel::Mode::Rational => 0.0,
        crate::kernel::Mode::Float => RECOVER_TOLERANCE,
    };
    for (p, e) in Point::all_bits(2).iter().zip(&raw) {
        let v = e.to_f64();
        if v < -tol || v > 1.0 + tol || v.is_nan() {
            return Err(Error::InfeasibleMoments(format!("γ{p} = {v}")));
        }
    }
    let (coin, _) = clamp_coin(raw)?;
    Ok(coin)
}

/// Recovery that keeps the per-coordinate heads probabilities `m_i/K`
/// (clamped into `[0,1]`) and moves only `γ(1,1)` into its feasible range
/// `[max(0, p1+p2−1), min(p1, p2)]`. Returns whether anything moved.
pub fn recover_projected<S: Scalar>(grid: &Dist<Point, S>, k: u64) -> Result<(Coin<S>, bool)> {
    check_recoverable(grid, k)?;
    let m = grid.moments()?;
    let kk = S::from_u64(k);
    let unit = |x: S| {
        if x.is_negative() {
            (S::zero(), true)
        } else if x > S::one() {
            (S::one(), true)
        } else {
            (x, false)
        }
    };
    let (p1, c1) = unit(m.mean[0].clone() / kk.clone());
    let (p2, c2) = unit(m.mean[1].clone() / kk.clone());
    let raw = m.cov[0][1].clone() / kk + p1.clone() * p2.clone();
    let lo = {
        let s = p1.clone() + p2.clone() - S::one();
        if s.is_negative() {
            S::zero()
        } else {
            s
        }
    };
    let hi = if p1 < p2 { p1.clone() } else { p2.clone() };
    let (g11, c3) = if raw < lo {
        (lo, true)
    } else if raw > hi {
        (hi, true)
    } else {
        (raw, false)
    };
    let g10 = p1.clone() - g11.clone();
    let g01 = p2.clone() - g11.clone();
    let g00 = S::one() - p1 - p2 + g11.clone();
    let clamped = c1 || c2 || c3;
    if clamped {
        warn!("recovered two-coin projected onto the feasible set");
    }
    // Rounding can leave float entries a hair below zero.
    let entries = [g00, g01, g10, g11].map(|e| if e.is_negative() { S::zero() } else { e });
    let dist = Dist::from_weights(Point::all_bits(2).into_iter().zip(entries))?;
    Ok((Coin { dim: 2, dist }, clamped))
}

fn clamp_coin<S: Scalar>(raw: [S; 4]) -> Result<(Coin<S>, bool)> {
    let mut clamped = false;
    let entries: Vec<S> = raw
        .into_iter()
        .map(|e| {
            if e.is_negative() {
                clamped = true;
                S::zero()
            } else if e > S::one() {
                clamped = true;
                S::one()
            } else {
                e
            }
        })
        .collect();
    if clamped {
        warn!(
            "recovered two-coin clamped into [0,1]: {:?}",
            entries.iter().map(S::to_f64).collect::<Vec<_>>()
        );
    }
    let dist = Dist::from_weights(Point::all_bits(2).into_iter().zip(entries))?;
    Ok((Coin { dim: 2, dist }, clamped))
}
