//! Rules of succession: posterior means after conjugate updates, plus
//! Poisson-prior dagger means and a brute-force truncated oracle for them.

use std::borrow::Borrow;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use statrs::function::factorial::ln_factorial;

use crate::binomials::{fiber, Coin};
use crate::error::{Error, Result};
use crate::kernel::{mset_coefficient, ratio, Dist, Multiset, Point, Rational, Scalar};

/// Tail mass a truncated Poisson prior may drop.
pub const POISSON_TAIL: f64 = 1e-9;

/// Smallest normalizer [`truncated_dagger_mean`] accepts.
pub const DEGENERATE_MASS: f64 = 1e-300;

/// Parameters of a Beta prior, restricted to positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BetaParams {
    pub alpha: u64,
    pub beta: u64,
}

impl BetaParams {
    pub fn new(alpha: u64, beta: u64) -> Result<Self> {
        if alpha == 0 || beta == 0 {
            return Err(Error::OutOfRange(format!(
                "Beta parameters must be positive, got ({alpha},{beta})"
            )));
        }
        Ok(BetaParams { alpha, beta })
    }

    /// `α/(α+β)`.
    pub fn mean(&self) -> Rational {
        ratio(self.alpha as i64, (self.alpha + self.beta) as i64)
    }
}

fn check_count(n: u64, k: u64) -> Result<()> {
    if n > k {
        return Err(Error::OutOfRange(format!(
            "observed {n} successes in {k} trials"
        )));
    }
    Ok(())
}

/// Posterior after `n` successes in `k` binomial trials: `(α+n, β+K−n)`.
pub fn beta_update(b: BetaParams, k: u64, n: u64) -> Result<BetaParams> {
    check_count(n, k)?;
    Ok(BetaParams {
        alpha: b.alpha + n,
        beta: b.beta + k - n,
    })
}

/// `(α+n)/(α+β+K)`.
pub fn beta_succession_mean(b: BetaParams, k: u64, n: u64) -> Result<Rational> {
    check_count(n, k)?;
    Ok(ratio((b.alpha + n) as i64, (b.alpha + b.beta + k) as i64))
}

/// Dirichlet parameters: a multiset with positive multiplicity at every
/// point of its base.
#[derive(Clone, PartialEq)]
pub struct DirichletParams<P: Ord> {
    psi: Multiset<P>,
}

impl<P: Ord + Clone + fmt::Debug> DirichletParams<P> {
    /// The base is the listed points; `psi` must cover all of them and
    /// nothing else.
    pub fn new<I: IntoIterator<Item = P>>(psi: Multiset<P>, base: I) -> Result<Self> {
        let base: Vec<P> = base.into_iter().collect();
        if let Some(p) = base.iter().find(|p| psi.mult(p) == 0) {
            return Err(Error::OutOfRange(format!(
                "Dirichlet parameter is zero at {p:?}"
            )));
        }
        if let Some(p) = psi.support().find(|p| !base.contains(p)) {
            return Err(Error::WrongSpace(format!("{p:?} is outside the base")));
        }
        Ok(DirichletParams { psi })
    }

    /// `ψ` on its own support.
    pub fn from_psi(psi: Multiset<P>) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::EmptyMultiset);
        }
        Ok(DirichletParams { psi })
    }

    /// Every point of `base` with the same multiplicity.
    pub fn symmetric<I: IntoIterator<Item = P>>(base: I, c: u64) -> Result<Self> {
        if c == 0 {
            return Err(Error::OutOfRange(
                "Dirichlet parameter must be positive".into(),
            ));
        }
        Self::from_psi(Multiset::from_pairs(base.into_iter().map(|p| (p, c))))
    }

    pub fn psi(&self) -> &Multiset<P> {
        &self.psi
    }

    pub fn base(&self) -> impl Iterator<Item = &P> {
        self.psi.support()
    }

    /// `Flrn(ψ)`.
    pub fn mean(&self) -> Dist<P, Rational> {
        self.psi.flrn().expect("Dirichlet parameters are non-empty")
    }
}

impl<P: Ord + fmt::Debug> fmt::Debug for DirichletParams<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dir({:?})", self.psi)
    }
}

/// Posterior after observing the draw `phi`: `ψ + φ`.
pub fn dirichlet_update<P: Ord + Clone + fmt::Debug>(
    d: &DirichletParams<P>,
    phi: &Multiset<P>,
) -> Result<DirichletParams<P>> {
    if let Some(p) = phi.support().find(|p| d.psi.mult(p) == 0) {
        return Err(Error::WrongSpace(format!(
            "{p:?} is outside the Dirichlet base"
        )));
    }
    Ok(DirichletParams {
        psi: d.psi.plus(phi),
    })
}

/// `Flrn(ψ + φ)`.
pub fn dirichlet_succession_mean<P: Ord + Clone + fmt::Debug>(
    d: &DirichletParams<P>,
    phi: &Multiset<P>,
) -> Result<Dist<P, Rational>> {
    Ok(dirichlet_update(d, phi)?.mean())
}

fn check_two_by_two(d: &DirichletParams<Point>) -> Result<()> {
    let base: Vec<&Point> = d.base().collect();
    let cells = Point::all_bits(2);
    if base.len() != 4 || base.iter().zip(&cells).any(|(a, b)| *a != b) {
        return Err(Error::WrongSpace(
            "bivariate Dirichlet parameters need full support on 2×2".into(),
        ));
    }
    Ok(())
}

/// Succession for bivariate binomial observations by pooling the fiber:
/// `Flrn(Σ_{φ ∈ fiber(K,n1,n2)} ψ + φ)`.
pub fn bivbin_dirichlet_mean(
    d: &DirichletParams<Point>,
    k: u64,
    n1: u64,
    n2: u64,
) -> Result<Dist<Point, Rational>> {
    check_two_by_two(d)?;
    let pooled = fiber(k, n1, n2)?
        .iter()
        .fold(Multiset::empty(), |acc, phi| acc.plus(&d.psi.plus(phi)));
    pooled.flrn()
}

/// `a·(a+1)⋯(a+n−1)`.
fn rising(a: u64, n: u64) -> BigUint {
    (0..n).fold(BigUint::one(), |acc, j| acc * BigUint::from(a + j))
}

/// Dirichlet-multinomial weight of a draw, up to a factor that is constant
/// over draws of equal size.
fn dirichlet_multinomial_weight(psi: &Multiset<Point>, phi: &Multiset<Point>) -> BigUint {
    phi.iter().fold(mset_coefficient(phi), |acc, (x, n)| {
        acc * rising(psi.mult(x), n)
    })
}

/// Exact posterior mean of the bivariate Dirichlet model given heads
/// `(n1, n2)`: the fiber average of `Flrn(ψ+φ)`, each draw weighted by its
/// Dirichlet-multinomial probability.
pub fn bivbin_dirichlet_mean_oracle(
    d: &DirichletParams<Point>,
    k: u64,
    n1: u64,
    n2: u64,
) -> Result<Dist<Point, Rational>> {
    check_two_by_two(d)?;
    let draws = fiber(k, n1, n2)?;
    let mut parts = Vec::with_capacity(draws.len());
    let mut total = Rational::zero();
    for phi in &draws {
        let w = Rational::from_biguint(&dirichlet_multinomial_weight(&d.psi, phi));
        total += w.clone();
        parts.push((w, d.psi.plus(phi).flrn::<Rational>()?));
    }
    let parts: Vec<(Rational, &Dist<Point, Rational>)> = parts
        .iter()
        .map(|(w, dist)| (w.clone() / total.clone(), dist))
        .collect();
    Ok(Dist::mixture(parts))
}

/// A Poisson prior on the number of emitted particles, truncated to
/// `{0,…,M}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonParams {
    pub lambda: f64,
    pub m: u64,
}

impl PoissonParams {
    /// Truncation at `max(60, ⌈λ + 12√λ + 12⌉)`.
    pub fn new(lambda: f64) -> Result<Self> {
        check_rate(lambda)?;
        let m = (lambda + 12.0 * lambda.sqrt() + 12.0).ceil().max(60.0) as u64;
        Self::with_truncation(lambda, m)
    }

    /// Fails if the mass beyond `m` exceeds the allowed tail.
    pub fn with_truncation(lambda: f64, m: u64) -> Result<Self> {
        check_rate(lambda)?;
        let kept: f64 = (0..=m).map(|k| poisson_pmf(lambda, k)).sum();
        if kept < 1.0 - POISSON_TAIL {
            return Err(Error::OutOfRange(format!(
                "truncating Poisson({lambda}) at {m} keeps only {kept}"
            )));
        }
        Ok(PoissonParams { lambda, m })
    }

    pub fn pmf(&self, k: u64) -> f64 {
        poisson_pmf(self.lambda, k)
    }
}

fn check_rate(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::OutOfRange(format!("Poisson rate {lambda}")));
    }
    Ok(())
}

fn ln_poisson(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + k as f64 * lambda.ln() - ln_factorial(k)
}

/// `e^{−λ}·λᵏ/k!`.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    ln_poisson(lambda, k).exp()
}

/// Expected number of emitted particles after detecting `n` of them, each
/// detected independently with probability `r`: `n + (1−r)·λ`.
pub fn binomial_poisson_mean(r: f64, lambda: f64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfRange(format!("{r} is not a probability")));
    }
    check_rate(lambda)?;
    Ok(n as f64 + (1.0 - r) * lambda)
}

/// Expected number of emitted particles after observing heads `(n1, n2)`
/// from a two-coin detector. For `n1 ≤ n2` this is
/// `n2 + γ(0,0)·λ + Σᵢ ppp(i)·i / Σᵢ ppp(i)` with
/// `ppp(i) = pois[γ(0,1)λ](n2−n1+i)·pois[γ(1,0)λ](i)·pois[γ(1,1)λ](n1−i)`;
/// the other order swaps the coordinates.
pub fn bivbin_poisson_mean(coin: &Coin<f64>, lambda: f64, n1: u64, n2: u64) -> Result<f64> {
    if coin.dim() != 2 {
        return Err(Error::WrongSpace(format!(
            "expected a two-coin, got dimension {}",
            coin.dim()
        )));
    }
    check_rate(lambda)?;
    let [g00, g01, g10, g11]: [f64; 4] = coin.table().try_into().expect("two-coin");
    let (lo, hi, g_hi_only, g_lo_only) = if n1 <= n2 {
        (n1, n2, g01, g10)
    } else {
        (n2, n1, g10, g01)
    };
    let logs: Vec<f64> = (0..=lo)
        .map(|i| {
            ln_poisson(g_hi_only * lambda, hi - lo + i)
                + ln_poisson(g_lo_only * lambda, i)
                + ln_poisson(g11 * lambda, lo - i)
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::DegenerateObservation(format!(
            "heads ({n1},{n2}) impossible at rate {lambda}"
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (i, l) in logs.iter().enumerate() {
        let w = (l - top).exp();
        num += w * i as f64;
        den += w;
    }
    Ok(hi as f64 + g00 * lambda + num / den)
}

/// Posterior mean of the particle count under a truncated Poisson prior,
/// by direct Bayesian inversion over `{0,…,M}`:
/// `Σ_K K·pois(K)·chan(K)(obs) / Σ_K pois(K)·chan(K)(obs)`.
///
/// The channel may hand out owned or borrowed (e.g. cached) distributions.
pub fn truncated_dagger_mean<F, D>(mut chan: F, prior: &PoissonParams, obs: &Point) -> Result<f64>
where
    F: FnMut(u64) -> Result<D>,
    D: Borrow<Dist<Point, f64>>,
{
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=prior.m {
        let w = prior.pmf(k) * chan(k)?.borrow().prob(obs);
        num += k as f64 * w;
        den += w;
    }
    if den < DEGENERATE_MASS {
        return Err(Error::DegenerateObservation(format!(
            "{obs} has mass {den} under the truncated prior"
        )));
    }
    Ok(num / den)
}
