//! Multivariate binomial distributions built as pushforwards of multinomials,
//! with channels and their Bayesian inversions, succession rules and
//! Expectation Maximisation for mixtures of bivariate binomials.
//!
//! Every computation runs either over exact rationals or over doubles,
//! selected by the [`Scalar`] type parameter.

pub mod binomials;
pub mod channels;
pub mod em;
pub mod error;
pub mod json;
pub mod kernel;
pub mod succession;

pub use binomials::{Coin, GridDist, Limits};
pub use channels::Channel;
pub use error::{Error, Result};
pub use kernel::{Dist, Multiset, Point, Rational, Scalar};
