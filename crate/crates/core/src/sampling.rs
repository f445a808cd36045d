//! Seeded sampling helpers. Every random choice in the crate goes through a
//! [`Sampler`], so identical seeds give identical sample sets on every
//! platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dilatation::DilatationStructure;
use crate::point::Point;

/// Sample count, base-point ball radius and seed for a randomized check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            count: 10,
            radius: 0.5,
            seed: 0,
        }
    }
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.gen::<f64>()
    }

    /// Log-uniform in `[lo, hi]`, `0 < lo < hi`.
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// Uniform point in the coordinate ball of radius `r` around `center`.
    pub fn in_coord_ball(&mut self, center: &Point, r: f64) -> Point {
        let dim = center.dim();
        loop {
            let offset: Point = (0..dim).map(|_| self.uniform(-1.0, 1.0)).collect();
            if offset.norm() <= 1.0 {
                return center.axpy(r, &offset);
            }
        }
    }

    /// Random unit vector in coordinates.
    pub fn direction(&mut self, dim: usize) -> Point {
        loop {
            let v: Point = (0..dim).map(|_| self.uniform(-1.0, 1.0)).collect();
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                return v.scale(1.0 / n);
            }
        }
    }

    /// Point `u` with `d(x, u) <= r` for the structure's own distance.
    ///
    /// Walks out from `x` along a random coordinate ray, locates the
    /// distance-`r` crossing by bisection and picks a uniform fraction of it.
    /// The distance is assumed nondecreasing along coordinate rays from `x`,
    /// which holds for every shipped structure.
    pub fn in_metric_ball(&mut self, s: &dyn DilatationStructure, x: &Point, r: f64) -> Point {
        let dir = self.direction(x.dim());
        let reach = ray_reach(s, x, &dir, r);
        let t = reach * self.uniform(0.0, 1.0);
        x.axpy(t, &dir)
    }
}

/// Largest `t` with `d(x, x + t·dir) <= r`, to bisection accuracy.
pub fn ray_reach(s: &dyn DilatationStructure, x: &Point, dir: &Point, r: f64) -> f64 {
    let d = |t: f64| s.distance(x, &x.axpy(t, dir));
    let mut hi = r;
    let mut guard = 0;
    while d(hi) < r && guard < 200 {
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if d(mid) <= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
