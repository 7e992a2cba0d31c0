//! Channels (conditional probability tables), pushforward and Bayesian
//! inversion.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::{Dist, Scalar};

/// A channel `X → D(Y)`, stored extensionally as one distribution per
/// domain point.
#[derive(Clone, PartialEq)]
pub struct Channel<X: Ord, Y: Ord, S> {
    kernel: BTreeMap<X, Dist<Y, S>>,
}

impl<X, Y, S> Channel<X, Y, S>
where
    X: Ord + Clone + fmt::Debug,
    Y: Ord + Clone + fmt::Debug,
    S: Scalar,
{
    /// Later entries for a repeated domain point replace earlier ones.
    pub fn new<I: IntoIterator<Item = (X, Dist<Y, S>)>>(entries: I) -> Self {
        Channel {
            kernel: entries.into_iter().collect(),
        }
    }

    /// Tabulates `f` on the given domain.
    pub fn from_fn<I, F>(domain: I, f: F) -> Self
    where
        I: IntoIterator<Item = X>,
        F: Fn(&X) -> Dist<Y, S>,
    {
        Channel {
            kernel: domain
                .into_iter()
                .map(|x| {
                    let d = f(&x);
                    (x, d)
                })
                .collect(),
        }
    }

    /// Fallible variant of [`Channel::from_fn`].
    pub fn try_from_fn<I, F>(domain: I, f: F) -> Result<Self>
    where
        I: IntoIterator<Item = X>,
        F: Fn(&X) -> Result<Dist<Y, S>>,
    {
        let mut kernel = BTreeMap::new();
        for x in domain {
            let d = f(&x)?;
            kernel.insert(x, d);
        }
        Ok(Channel { kernel })
    }

    pub fn domain(&self) -> impl Iterator<Item = &X> {
        self.kernel.keys()
    }

    pub fn apply(&self, x: &X) -> Option<&Dist<Y, S>> {
        self.kernel.get(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&X, &Dist<Y, S>)> {
        self.kernel.iter()
    }

    /// Pushforward `c ≫ ω = Σ_x ω(x)·c(x)`.
    pub fn push(&self, omega: &Dist<X, S>) -> Result<Dist<Y, S>> {
        let mut parts = Vec::with_capacity(omega.len());
        for (x, w) in omega.iter() {
            let d = self
                .kernel
                .get(x)
                .ok_or_else(|| Error::DomainMismatch(format!("{x:?}")))?;
            parts.push((w.clone(), d));
        }
        Ok(Dist::mixture(parts))
    }

    /// Bayesian inversion with prior `omega`, on the support of `c ≫ ω`:
    /// `c†(y)(x) = ω(x)·c(x)(y) / (c ≫ ω)(y)`.
    pub fn dagger(&self, omega: &Dist<X, S>) -> Result<Channel<Y, X, S>> {
        let predicted = self.push(omega)?;
        self.invert_on(omega, &predicted, predicted.support().cloned())
    }

    /// Bayesian inversion on a declared codomain; every point of `codomain`
    /// must carry positive predicted mass.
    pub fn dagger_on(&self, omega: &Dist<X, S>, codomain: &[Y]) -> Result<Channel<Y, X, S>> {
        let predicted = self.push(omega)?;
        self.invert_on(omega, &predicted, codomain.iter().cloned())
    }

    /// The inverted channel at a single observation.
    pub fn dagger_at(&self, omega: &Dist<X, S>, y: &Y) -> Result<Dist<X, S>> {
        let predicted = self.push(omega)?;
        self.invert_point(omega, &predicted, y)
    }

    fn invert_on<I: IntoIterator<Item = Y>>(
        &self,
        omega: &Dist<X, S>,
        predicted: &Dist<Y, S>,
        ys: I,
    ) -> Result<Channel<Y, X, S>> {
        let mut kernel = BTreeMap::new();
        for y in ys {
            let d = self.invert_point(omega, predicted, &y)?;
            kernel.insert(y, d);
        }
        Ok(Channel { kernel })
    }

    fn invert_point(
        &self,
        omega: &Dist<X, S>,
        predicted: &Dist<Y, S>,
        y: &Y,
    ) -> Result<Dist<X, S>> {
        let mass = predicted
            .get(y)
            .ok_or_else(|| Error::NotFullSupport(format!("{y:?}")))?;
        let entries = omega.iter().map(|(x, w)| {
            let likelihood = self
                .kernel
                .get(x)
                .map(|d| d.prob(y))
                .unwrap_or_else(S::zero);
            (x.clone(), w.clone() * likelihood / mass.clone())
        });
        Ok(Dist::from_normalized(entries))
    }
}

impl<X: Ord + fmt::Debug, Y: Ord + fmt::Debug, S: fmt::Debug> fmt::Debug for Channel<X, Y, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.kernel.iter()).finish()
    }
}
