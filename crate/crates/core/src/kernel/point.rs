use std::fmt;

use serde::{Deserialize, Serialize};

/// A point of a finite space: a tuple of small integers.
///
/// Bits for coin faces (`[0, 1]`), counts for grid cells (`[3, 5]`), or a
/// one-element tuple for plain labels. Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<i64>);

impl Point {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Point(coords.into())
    }

    /// One-dimensional point.
    pub fn scalar(x: i64) -> Self {
        Point(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn coord(&self, i: usize) -> i64 {
        self.0[i]
    }

    /// Juxtaposition of two tuples, `(a..., b...)`.
    pub fn concat(&self, other: &Point) -> Point {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Point(v)
    }

    /// Projection onto coordinate `i`, as a one-dimensional point.
    pub fn project(&self, i: usize) -> Point {
        Point(vec![self.0[i]])
    }

    /// Componentwise sum; the monoid structure of ℕᴺ.
    pub fn add(&self, other: &Point) -> Point {
        assert_eq!(
            self.dim(),
            other.dim(),
            "adding points of different dimension"
        );
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn zero(dim: usize) -> Point {
        Point(vec![0; dim])
    }

    pub fn is_bits(&self) -> bool {
        self.0.iter().all(|&b| b == 0 || b == 1)
    }

    /// Flips every bit: 0 ↔ 1.
    pub fn complement_bits(&self) -> Point {
        Point(self.0.iter().map(|b| 1 - b).collect())
    }

    /// All `2^n` bit tuples in lexicographic order.
    pub fn all_bits(n: usize) -> Vec<Point> {
        (0..1u64 << n)
            .map(|m| Point((0..n).map(|i| ((m >> (n - 1 - i)) & 1) as i64).collect()))
            .collect()
    }
}

impl From<Vec<i64>> for Point {
    fn from(v: Vec<i64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[i64; N]> for Point {
    fn from(v: [i64; N]) -> Self {
        Point(v.to_vec())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}
