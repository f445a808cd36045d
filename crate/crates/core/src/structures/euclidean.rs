use crate::dilatation::DilatationStructure;
use crate::point::Point;

/// `ℝⁿ` with a p-norm distance and dilatations `x + ε(y − x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Euclidean {
    dim: usize,
    p: f64,
}

impl Euclidean {
    pub fn new(dim: usize) -> Self {
        Euclidean { dim, p: 2.0 }
    }

    /// `p >= 1`, with `f64::INFINITY` for the max norm.
    pub fn with_norm(dim: usize, p: f64) -> Self {
        Euclidean { dim, p }
    }

    pub fn norm_exponent(&self) -> f64 {
        self.p
    }
}

impl DilatationStructure for Euclidean {
    fn name(&self) -> String {
        if self.p == 2.0 {
            format!("euclidean:{}", self.dim)
        } else if self.p.is_infinite() {
            format!("euclidean:{}:inf", self.dim)
        } else {
            format!("euclidean:{}:{}", self.dim, self.p)
        }
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        y.sub(x).norm_p(self.p)
    }

    fn dilate_raw(&self, x: &Point, eps: f64, y: &Point) -> Point {
        x.axpy(eps, &y.sub(x))
    }
}
