use crate::dilatation::DilatationStructure;
use crate::point::Point;

/// The first Heisenberg group on `ℝ³` with the Cygan–Korányi gauge distance
/// and dilatations `δ^x_ε u = x·Δ_ε(x⁻¹·u)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Heisenberg;

/// `(p,q,r)·(p',q',r') = (p+p', q+q', r+r' + (pq' − qp')/2)`.
pub fn group_op(g: &Point, h: &Point) -> Point {
    Point::from([
        g[0] + h[0],
        g[1] + h[1],
        g[2] + h[2] + 0.5 * (g[0] * h[1] - g[1] * h[0]),
    ])
}

pub fn group_inv(g: &Point) -> Point {
    Point::from([-g[0], -g[1], -g[2]])
}

/// `g⁻¹·h`.
pub fn left_quotient(g: &Point, h: &Point) -> Point {
    group_op(&group_inv(g), h)
}

/// Graded dilation `Δ_ε(a,b,c) = (εa, εb, ε²c)`.
pub fn grade(eps: f64, g: &Point) -> Point {
    Point::from([eps * g[0], eps * g[1], eps * eps * g[2]])
}

/// `N(a,b,c) = ((a² + b²)² + 16c²)^{1/4}`.
pub fn gauge(g: &Point) -> f64 {
    let h = g[0] * g[0] + g[1] * g[1];
    (h * h + 16.0 * g[2] * g[2]).sqrt().sqrt()
}

impl Heisenberg {
    pub fn group_op(&self, g: &Point, h: &Point) -> Point {
        group_op(g, h)
    }

    pub fn group_inv(&self, g: &Point) -> Point {
        group_inv(g)
    }

    pub fn gauge(&self, g: &Point) -> f64 {
        gauge(g)
    }
}

impl DilatationStructure for Heisenberg {
    fn name(&self) -> String {
        "heisenberg".into()
    }

    fn dim(&self) -> usize {
        3
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        gauge(&left_quotient(x, y))
    }

    fn dilate_raw(&self, x: &Point, eps: f64, y: &Point) -> Point {
        group_op(x, &grade(eps, &left_quotient(x, y)))
    }
}

/// `ℝ³` with the left-invariant Euclidean distance `|x⁻¹·y|₂` of the
/// Heisenberg product and isotropic dilatations `x + ε(y − x)`.
///
/// Its tangent spaces are abelian, and near the origin its distance is
/// dominated by the gauge distance, which makes it the lower structure of
/// the Heisenberg lookdown pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeftEuclidean;

impl DilatationStructure for LeftEuclidean {
    fn name(&self) -> String {
        "left-euclidean".into()
    }

    fn dim(&self) -> usize {
        3
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        left_quotient(x, y).norm()
    }

    fn dilate_raw(&self, x: &Point, eps: f64, y: &Point) -> Point {
        x.axpy(eps, &y.sub(x))
    }
}
