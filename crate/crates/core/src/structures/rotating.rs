use num_complex::Complex64;

use crate::dilatation::DilatationStructure;
use crate::point::Point;

/// The plane with Euclidean distance and dilatations `x + ε^z (y − x)`,
/// `z = 1 + iθ`: scaling by ε combined with rotation by `θ·ln ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotating {
    theta: f64,
}

impl Rotating {
    pub fn new(theta: f64) -> Self {
        Rotating { theta }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// The complex factor `ε^{1+iθ}`.
    pub fn factor(&self, eps: f64) -> Complex64 {
        Complex64::from_polar(eps, self.theta * eps.ln())
    }
}

pub fn to_complex(p: &Point) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn from_complex(z: Complex64) -> Point {
    Point::from([z.re, z.im])
}

impl DilatationStructure for Rotating {
    fn name(&self) -> String {
        format!("rotating:{}", self.theta)
    }

    fn dim(&self) -> usize {
        2
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        x.coord_dist(y)
    }

    fn dilate_raw(&self, x: &Point, eps: f64, y: &Point) -> Point {
        let (cx, cy) = (to_complex(x), to_complex(y));
        from_complex(cx + self.factor(eps) * (cy - cx))
    }
}
