//! Parametrized curves and their calculus: variation, upper dilatation,
//! length, arc-length reparametrization and derivability.

mod derive;
mod length;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

pub use derive::{
    derivative_at, derivative_scaling, length_formula_check, metric_derivative, rn_probe, DerivabilityResult,
    LengthFormula, RnOptions, RnProbe,
};
pub use length::{
    curve_length, hausdorff_length_estimate, length_via_dilatation, reparametrize_arclength, upper_dilatation,
    variation, CurveLength, LengthMethod, Variation, VariationOptions, DEFAULT_QUAD_INTERVALS, DEFAULT_WINDOW,
};

use crate::error::{Error, Result};
use crate::point::Point;

type EvalFn = dyn Fn(f64) -> Point + Send + Sync;

/// A curve `[a, b] → ℝⁿ`, evaluated exactly by a closure.
#[derive(Clone)]
pub struct Curve {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub dim: usize,
    /// Known Lipschitz constant for the distance the fixture is meant for.
    pub lip_bound: Option<f64>,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("dim", &self.dim)
            .field("lip_bound", &self.lip_bound)
            .finish()
    }
}

impl Curve {
    pub fn new(
        name: impl Into<String>,
        a: f64,
        b: f64,
        dim: usize,
        eval: impl Fn(f64) -> Point + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!(
                "curve interval must satisfy a < b, got [{a}, {b}]"
            )));
        }
        Ok(Curve {
            name: name.into(),
            a,
            b,
            dim,
            lip_bound: None,
            eval: Arc::new(eval),
        })
    }

    pub fn with_lip_bound(mut self, l: f64) -> Self {
        self.lip_bound = Some(l);
        self
    }

    /// `c(t)`, with `t` clamped to `[a, b]`.
    pub fn eval(&self, t: f64) -> Point {
        (self.eval)(t.clamp(self.a, self.b))
    }

    pub fn span(&self) -> f64 {
        self.b - self.a
    }

    /// `s ↦ c(φ(s))` on `[a, b]`.
    pub fn reparametrized(
        &self,
        name: impl Into<String>,
        a: f64,
        b: f64,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Curve> {
        let inner = self.clone();
        Curve::new(name, a, b, self.dim, move |s| inner.eval(phi(s)))
    }

    /// `t ↦ t·v` on `[0, 1]`.
    pub fn segment(v: Point) -> Curve {
        let n = v.norm();
        let dim = v.dim();
        Curve::new("segment", 0.0, 1.0, dim, move |t| v.scale(t))
            .expect("valid interval")
            .with_lip_bound(n)
    }

    /// `t ↦ (t, sign t)` on `[-1, 1]`, with `sign 0 = 0`.
    pub fn sign() -> Curve {
        Curve::new("sign", -1.0, 1.0, 2, |t| Point::from([t, sign(t)])).expect("valid interval")
    }

    /// `t ↦ (t, |t|)` on `[-1, 1]`.
    pub fn corner() -> Curve {
        Curve::new("corner", -1.0, 1.0, 2, |t| Point::from([t, t.abs()]))
            .expect("valid interval")
            .with_lip_bound(2f64.sqrt())
    }

    /// Piecewise-linear Cantor staircase of construction depth `m` on
    /// `[0, 1]`, as a curve into the line.
    pub fn cantor(depth: u32) -> Curve {
        Curve::new(format!("cantor:{depth}"), 0.0, 1.0, 1, move |t| {
            Point::from([cantor_staircase(t, depth)])
        })
        .expect("valid interval")
    }

    /// The graph `t ↦ (t, cantor_m(t))`.
    pub fn cantor_graph(depth: u32) -> Curve {
        Curve::new(format!("cantor-graph:{depth}"), 0.0, 1.0, 2, move |t| {
            Point::from([t, cantor_staircase(t, depth)])
        })
        .expect("valid interval")
    }

    /// Circle of radius `r` traversed once at angular speed `w`.
    pub fn circle(r: f64, w: f64) -> Curve {
        let period = 2.0 * std::f64::consts::PI / w.abs();
        Curve::new(format!("circle:{r}:{w}"), 0.0, period, 2, move |t| {
            Point::from([r * (w * t).cos(), r * (w * t).sin()])
        })
        .expect("valid interval")
        .with_lip_bound((r * w).abs())
    }

    /// Unit-speed polyline through `vertices`, parametrized on `[0, L]`.
    pub fn polyline(vertices: Vec<Point>) -> Result<Curve> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("polyline needs at least two vertices".into()));
        }
        let dim = vertices[0].dim();
        let mut knots = vec![0.0];
        for w in vertices.windows(2) {
            let last = *knots.last().expect("non-empty");
            knots.push(last + w[0].coord_dist(&w[1]));
        }
        let total = *knots.last().expect("non-empty");
        if total.is_nan() || total <= 0.0 {
            return Err(Error::ZeroLength);
        }
        Ok(Curve::new("polyline", 0.0, total, dim, move |t| {
            piecewise_linear(&knots, &vertices, t)
        })?
        .with_lip_bound(1.0))
    }

    /// The default polyline fixture: four unit segments with three corners.
    pub fn staircase_polyline() -> Curve {
        Curve::polyline(vec![
            Point::from([0.0, 0.0]),
            Point::from([1.0, 0.0]),
            Point::from([1.0, 1.0]),
            Point::from([2.0, 1.0]),
            Point::from([2.0, 2.0]),
        ])
        .expect("valid polyline")
    }

    /// Horizontal line `t ↦ (t, 0, 0)` of the Heisenberg group on `[0, 1]`.
    pub fn heisenberg_line() -> Curve {
        Curve::new("hline", 0.0, 1.0, 3, |t| Point::from([t, 0.0, 0.0]))
            .expect("valid interval")
            .with_lip_bound(1.0)
    }

    /// Horizontal lift of the unit circle, `t ↦ (cos t, sin t, t/2)` on
    /// `[0, 2π]`: the third coordinate tracks the swept area.
    pub fn heisenberg_circle_lift() -> Curve {
        Curve::new("hlift", 0.0, 2.0 * std::f64::consts::PI, 3, |t| {
            Point::from([t.cos(), t.sin(), 0.5 * t])
        })
        .expect("valid interval")
        .with_lip_bound(1.0)
    }

    /// Vertical segment `t ↦ (0, 0, t)` on `[0, 1]`.
    pub fn vertical_segment() -> Curve {
        Curve::new("vsegment", 0.0, 1.0, 3, |t| Point::from([0.0, 0.0, t])).expect("valid interval")
    }

    /// Linear interpolation of `(t, coords…)` samples with increasing `t`.
    pub fn from_samples(name: impl Into<String>, samples: Vec<(f64, Point)>) -> Result<Curve> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("need at least two samples".into()));
        }
        let dim = samples[0].1.dim();
        if let Some((_, p)) = samples.iter().find(|(_, p)| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        if samples
            .windows(2)
            .any(|w| w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidInput(
                "sample parameters must be strictly increasing".into(),
            ));
        }
        let (knots, points): (Vec<f64>, Vec<Point>) = samples.into_iter().unzip();
        let (a, b) = (knots[0], knots[knots.len() - 1]);
        Curve::new(name, a, b, dim, move |t| piecewise_linear(&knots, &points, t))
    }

    /// Reads `t,x1,x2,…` rows; blank lines and lines starting with `#` or a
    /// non-numeric header are skipped.
    pub fn from_csv(path: &Path) -> Result<Curve> {
        let text = std::fs::read_to_string(path)?;
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() >= 2 && v.iter().all(|x| x.is_finite()) => {
                    samples.push((v[0], Point::from_slice(&v[1..])));
                }
                Ok(_) => {
                    return Err(Error::InvalidInput(format!(
                        "{}:{}: expected t and at least one finite coordinate",
                        path.display(),
                        i + 1
                    )))
                }
                Err(_) if samples.is_empty() => continue,
                Err(e) => {
                    return Err(Error::InvalidInput(format!("{}:{}: {e}", path.display(), i + 1)));
                }
            }
        }
        Curve::from_samples(path.display().to_string(), samples)
    }
}

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Depth-`m` approximant of the Cantor function: constant on the removed
/// middle thirds, linear on each of the `2^m` remaining intervals.
pub fn cantor_staircase(t: f64, depth: u32) -> f64 {
    let mut t = t.clamp(0.0, 1.0);
    let mut offset = 0.0;
    let mut weight = 1.0;
    for _ in 0..depth {
        weight *= 0.5;
        if t < 1.0 / 3.0 {
            t *= 3.0;
        } else if t <= 2.0 / 3.0 {
            return offset + weight;
        } else {
            offset += weight;
            t = 3.0 * t - 2.0;
        }
    }
    offset + weight * t
}

fn piecewise_linear(knots: &[f64], points: &[Point], t: f64) -> Point {
    let k = match knots.partition_point(|&s| s <= t) {
        0 => 0,
        k if k >= knots.len() => knots.len() - 2,
        k => k - 1,
    };
    let (t0, t1) = (knots[k], knots[k + 1]);
    let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    Point::combine(&points[k], 1.0 - w, &points[k + 1], w)
}

/// Builds a named fixture for a model space of dimension `dim`.
///
/// Names: `segment`, `sign`, `corner`, `cantor[:m]`, `cantor-graph[:m]`,
/// `circle[:speed]`, `polyline`, `hline`, `hlift`, `vsegment`; anything
/// else that names an existing file is read as CSV.
pub fn make_curve(spec: &str, dim: usize) -> Result<Curve> {
    let spec = spec.trim();
    let (head, param) = match spec.split_once(':') {
        Some((h, p)) => (h, Some(p)),
        None => (spec, None),
    };
    let depth = |p: Option<&str>| -> Result<u32> {
        match p {
            None => Ok(12),
            Some(s) => s
                .parse::<u32>()
                .ok()
                .filter(|&m| m <= 40)
                .ok_or_else(|| Error::MalformedParameter {
                    spec: spec.to_string(),
                    reason: format!("depth must be an integer in 0..=40, got `{s}`"),
                }),
        }
    };
    let no_param = || -> Result<()> {
        if param.is_some() {
            Err(Error::MalformedParameter {
                spec: spec.to_string(),
                reason: "this curve takes no parameter".into(),
            })
        } else {
            Ok(())
        }
    };
    let curve = match head {
        "segment" => {
            no_param()?;
            let mut v = Point::zeros(dim.max(1));
            v[0] = 1.0;
            Curve::segment(v)
        }
        "sign" => {
            no_param()?;
            Curve::sign()
        }
        "corner" => {
            no_param()?;
            Curve::corner()
        }
        "cantor" => Curve::cantor(depth(param)?),
        "cantor-graph" => Curve::cantor_graph(depth(param)?),
        "circle" => {
            let w = match param {
                None => 1.0,
                Some(s) => crate::structures::parse_decimal(s, spec).and_then(|w| {
                    if w != 0.0 {
                        Ok(w)
                    } else {
                        Err(Error::MalformedParameter {
                            spec: spec.to_string(),
                            reason: "speed must be nonzero".into(),
                        })
                    }
                })?,
            };
            Curve::circle(1.0, w)
        }
        "polyline" => {
            no_param()?;
            Curve::staircase_polyline()
        }
        "hline" => {
            no_param()?;
            Curve::heisenberg_line()
        }
        "hlift" => {
            no_param()?;
            Curve::heisenberg_circle_lift()
        }
        "vsegment" => {
            no_param()?;
            Curve::vertical_segment()
        }
        _ => {
            let path = Path::new(spec);
            if path.is_file() {
                Curve::from_csv(path)?
            } else {
                return Err(Error::UnknownName(spec.to_string()));
            }
        }
    };
    if curve.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: curve.dim,
        });
    }
    Ok(curve)
}
