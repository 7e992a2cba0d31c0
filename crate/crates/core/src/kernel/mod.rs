//! Multisets, finite distributions and their algebra.

pub mod dist;
pub mod multiset;
pub mod point;
pub mod sample;
pub mod scalar;

pub use dist::{kl_divergence, Dist, Moments};
pub use multiset::{
    count_msets, enumerate_msets, enumerate_msets_capped, mset_coefficient,
    multinomial_coefficient, Multiset, DEFAULT_MSET_CAP,
};
pub use point::Point;
pub use sample::{sample, SplitMix64};
pub use scalar::{format_rational, ratio, Mode, Rational, Scalar};
