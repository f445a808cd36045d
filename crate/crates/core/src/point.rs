//! Points of the model spaces.
//!
//! Every shipped structure lives on a low-dimensional coordinate space, so a
//! point is a short vector of `f64` stored inline.

use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(SmallVec<[f64; 4]>);

impl Point {
    pub fn zeros(dim: usize) -> Self {
        Point(SmallVec::from_elem(0.0, dim))
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn add(&self, other: &Point) -> Point {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Point) -> Point {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Point {
        Point(self.0.iter().map(|c| c * k).collect())
    }

    /// `self + k * dir`.
    pub fn axpy(&self, k: f64, dir: &Point) -> Point {
        self.zip_with(dir, |a, d| a + k * d)
    }

    /// Linear combination `wa * a + wb * b`.
    pub fn combine(a: &Point, wa: f64, b: &Point, wb: f64) -> Point {
        a.zip_with(b, |x, y| wa * x + wb * y)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn norm_p(&self, p: f64) -> f64 {
        if p.is_infinite() {
            self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
        } else if p == 2.0 {
            self.norm()
        } else if p == 1.0 {
            self.0.iter().map(|c| c.abs()).sum()
        } else {
            self.0.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    /// Euclidean distance between coordinate vectors.
    ///
    /// This is the model-space topology used to compare points produced by
    /// limits and exact identities; it is not the structure's distance.
    pub fn coord_dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn zip_with(&self, other: &Point, f: impl Fn(f64, f64) -> f64) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(other.0.iter()).map(|(&a, &b)| f(a, b)).collect())
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point::from_slice(&v)
    }
}

impl FromIterator<f64> for Point {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Point(iter.into_iter().collect())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}
