use crate::dilatation::DilatationStructure;
use crate::point::Point;

/// Euclidean space with dilatations `x + ε²(y − x)`.
///
/// Satisfies A0–A2 and A4, but its rescaled distance `ε·d(u,v)` collapses,
/// so the tangent distance is degenerate. Kept as a negative fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Contracting {
    dim: usize,
}

impl Contracting {
    pub fn new(dim: usize) -> Self {
        Contracting { dim }
    }
}

impl DilatationStructure for Contracting {
    fn name(&self) -> String {
        format!("broken:{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        x.coord_dist(y)
    }

    fn dilate_raw(&self, x: &Point, eps: f64, y: &Point) -> Point {
        x.axpy(eps * eps, &y.sub(x))
    }
}
