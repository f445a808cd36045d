use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Curve;
use crate::dilatation::DilatationStructure;
use crate::error::{Error, Result};
use crate::point::Point;

pub const DEFAULT_QUAD_INTERVALS: usize = 1024;

/// Initial half-width of the upper-dilatation window, as a fraction of the
/// parameter span.
pub const DEFAULT_WINDOW: f64 = 1e-2;

const WINDOW_SCALES: usize = 6;
const WINDOW_PAIRS: usize = 16;
const PAR_THRESHOLD: usize = 2048;
const GROWTH: f64 = 1.3;
const OFF_CENTER: f64 = 0.381_966_011_250_105;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationOptions {
    /// Refinement stops once a level adds less than this.
    pub refine_tol: f64,
    /// Levels of uniform bisection before any interval is frozen.
    pub min_depth: usize,
    pub max_depth: usize,
}

impl Default for VariationOptions {
    fn default() -> Self {
        VariationOptions {
            refine_tol: 1e-9,
            min_depth: 10,
            max_depth: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Variation {
    pub value: f64,
    /// False when `max_depth` was reached first; `value` is then a lower
    /// bound.
    pub exact: bool,
    pub depth: usize,
    pub intervals: usize,
}

#[derive(Clone)]
struct Cell {
    l: f64,
    r: f64,
    pl: Point,
    pr: Point,
    chord: f64,
}

struct Split {
    gain: f64,
    mid: Point,
    left: f64,
    right: f64,
}

fn split(c: &Curve, s: &dyn DilatationStructure, cell: &Cell) -> Split {
    let m = 0.5 * (cell.l + cell.r);
    let mid = c.eval(m);
    let left = s.distance(&cell.pl, &mid);
    let right = s.distance(&mid, &cell.pr);
    Split {
        gain: left + right - cell.chord,
        mid,
        left,
        right,
    }
}

/// Gain of splitting `cell` at a point away from its midpoint, so that
/// symmetric features centered on the midpoint are not mistaken for flat
/// stretches.
fn off_center_gain(c: &Curve, s: &dyn DilatationStructure, cell: &Cell) -> f64 {
    let q = c.eval(cell.l + OFF_CENTER * (cell.r - cell.l));
    s.distance(&cell.pl, &q) + s.distance(&q, &cell.pr) - cell.chord
}

/// Variation along dyadic partitions of `[a, b]`.
///
/// Every interval is bisected for `min_depth` levels; after that, intervals
/// whose bisection gains less than their share of `refine_tol / 100`, both
/// at the midpoint and at an off-center probe, are frozen. The partition
/// sum never decreases from one level to the next.
pub fn variation(c: &Curve, s: &dyn DilatationStructure, opts: &VariationOptions) -> Variation {
    let (pa, pb) = (c.eval(c.a), c.eval(c.b));
    let chord = s.distance(&pa, &pb);
    let mut active = vec![Cell {
        l: c.a,
        r: c.b,
        pl: pa,
        pr: pb,
        chord,
    }];
    let mut value = chord;
    let span = c.span();
    let mut depth = 0;
    let mut frozen = 0usize;

    while depth < opts.max_depth {
        depth += 1;
        let splits: Vec<Split> = if active.len() > PAR_THRESHOLD {
            active.par_iter().map(|cell| split(c, s, cell)).collect()
        } else {
            active.iter().map(|cell| split(c, s, cell)).collect()
        };
        let level_gain: f64 = splits.iter().map(|sp| sp.gain.max(0.0)).sum();
        let mut next = Vec::with_capacity(2 * active.len());
        for (cell, sp) in active.into_iter().zip(splits) {
            let share = opts.refine_tol * 1e-2 * (cell.r - cell.l) / span;
            if depth > opts.min_depth && sp.gain <= share && off_center_gain(c, s, &cell) <= share {
                frozen += 1;
                continue;
            }
            value += sp.gain.max(0.0);
            let m = 0.5 * (cell.l + cell.r);
            next.push(Cell {
                l: cell.l,
                r: m,
                pl: cell.pl,
                pr: sp.mid.clone(),
                chord: sp.left,
            });
            next.push(Cell {
                l: m,
                r: cell.r,
                pl: sp.mid,
                pr: cell.pr,
                chord: sp.right,
            });
        }
        active = next;
        if depth >= opts.min_depth && level_gain < opts.refine_tol {
            return Variation {
                value,
                exact: true,
                depth,
                intervals: active.len() + frozen,
            };
        }
        if active.is_empty() {
            break;
        }
    }
    Variation {
        value,
        exact: active.is_empty(),
        depth,
        intervals: active.len() + frozen,
    }
}

/// Upper dilatation `Lip(c)(t)`: the largest difference quotient of
/// consecutive samples in windows of half-width `window·2^{-j}` around `t`,
/// read off at the smallest window. Quotients that keep growing by 30% per
/// halving of the window give `+∞`.
pub fn upper_dilatation(c: &Curve, t: f64, s: &dyn DilatationStructure, window: f64) -> f64 {
    let mut sups = [0.0; WINDOW_SCALES];
    let mut w = window;
    for sup in sups.iter_mut() {
        let lo = (t - w).max(c.a);
        let hi = (t + w).min(c.b);
        let h = (hi - lo) / WINDOW_PAIRS as f64;
        if h.is_nan() || h <= 0.0 {
            return 0.0;
        }
        let pts: Vec<(f64, Point)> = (0..=WINDOW_PAIRS)
            .map(|i| {
                let v = if i == WINDOW_PAIRS { hi } else { lo + i as f64 * h };
                (v, c.eval(v))
            })
            .collect();
        for p in pts.windows(2) {
            let q = s.distance(&p[0].1, &p[1].1) / (p[1].0 - p[0].0);
            if !q.is_finite() {
                return f64::INFINITY;
            }
            *sup = f64::max(*sup, q);
        }
        w *= 0.5;
    }
    let n = WINDOW_SCALES;
    let growing = sups[n - 1] > 0.0 && (n - 3..n).all(|j| sups[j] >= GROWTH * sups[j - 1]);
    if growing {
        f64::INFINITY
    } else {
        sups[n - 1]
    }
}

fn simpson_nodes(a: f64, b: f64, intervals: usize) -> (Vec<f64>, Vec<f64>) {
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / n as f64;
    let nodes = (0..=n).map(|i| if i == n { b } else { a + i as f64 * h }).collect();
    let weights = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// Composite Simpson quadrature of `f` on `[a, b]`, nodes evaluated in
/// parallel and summed in order.
pub(crate) fn simpson<F>(a: f64, b: f64, intervals: usize, f: F) -> Vec<(f64, f64, f64)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let (nodes, weights) = simpson_nodes(a, b, intervals);
    nodes
        .par_iter()
        .zip(weights.par_iter())
        .map(|(&t, &w)| (t, w, f(t)))
        .collect()
}

/// `∫ Lip(c)(t) dt` by composite Simpson with `intervals` subintervals.
pub fn length_via_dilatation(c: &Curve, s: &dyn DilatationStructure, intervals: usize) -> Result<f64> {
    let window = DEFAULT_WINDOW * c.span();
    let values = simpson(c.a, c.b, intervals, |t| upper_dilatation(c, t, s, window));
    let mut total = 0.0;
    for (t, w, v) in values {
        if !v.is_finite() {
            return Err(Error::NotLipschitz { t });
        }
        total += w * v;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthMethod {
    Dilatation,
    Variation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveLength {
    pub value: f64,
    pub method: LengthMethod,
    pub variation: Variation,
}

/// Length of `c`: the dilatation integral when `c` is Lipschitz, the
/// variation otherwise.
pub fn curve_length(c: &Curve, s: &dyn DilatationStructure, intervals: usize, opts: &VariationOptions) -> CurveLength {
    let var = variation(c, s, opts);
    match length_via_dilatation(c, s, intervals) {
        Ok(value) => CurveLength {
            value,
            method: LengthMethod::Dilatation,
            variation: var,
        },
        Err(_) => CurveLength {
            value: var.value,
            method: LengthMethod::Variation,
            variation: var,
        },
    }
}

fn diameter(pts: &[Point], s: &dyn DilatationStructure) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(s.distance(&pts[i], &pts[j]));
        }
    }
    d
}

/// Locates a jump of `c` inside `[l, r]` by bisection toward the larger
/// half-chord. Returns the bracketing parameters if the gap stays above
/// `gap`.
fn find_jump(c: &Curve, s: &dyn DilatationStructure, l: f64, r: f64, gap: f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (l, r);
    let (mut plo, mut phi) = (c.eval(lo), c.eval(hi));
    for _ in 0..64 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let pm = c.eval(m);
        if s.distance(&plo, &pm) >= s.distance(&pm, &phi) {
            hi = m;
            phi = pm;
        } else {
            lo = m;
            plo = pm;
        }
    }
    (s.distance(&plo, &phi) > gap).then_some((lo, hi))
}

fn piece_diameter(c: &Curve, s: &dyn DilatationStructure, l: f64, r: f64, mesh: f64, depth: u32) -> f64 {
    let pl = c.eval(l);
    let pr = c.eval(r);
    if depth < 8 && r > l && s.distance(&pl, &pr) > 4.0 * mesh {
        if let Some((lo, hi)) = find_jump(c, s, l, r, 4.0 * mesh) {
            return piece_diameter(c, s, l, lo, mesh, depth + 1) + piece_diameter(c, s, hi, r, mesh, depth + 1);
        }
    }
    let pm = c.eval(0.5 * (l + r));
    diameter(&[pl, pm, pr], s)
}

/// Sum of the diameters of the images of a uniform partition with cell width
/// at most `mesh`. Cells whose image jumps are split at the jump, so the
/// estimate measures the path rather than the parametrization.
pub fn hausdorff_length_estimate(c: &Curve, s: &dyn DilatationStructure, mesh: f64) -> Result<f64> {
    if !(mesh > 0.0 && mesh.is_finite()) {
        return Err(Error::InvalidInput(format!("mesh must be positive, got {mesh}")));
    }
    let n = (c.span() / mesh).ceil().max(1.0) as usize;
    let h = c.span() / n as f64;
    let cells: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let l = c.a + i as f64 * h;
            let r = if i + 1 == n { c.b } else { c.a + (i + 1) as f64 * h };
            piece_diameter(c, s, l, r, h, 0)
        })
        .collect();
    Ok(cells.iter().sum())
}

const REPARAM_CELLS: usize = 4096;

fn chord_sum(c: &Curve, s: &dyn DilatationStructure, l: f64, r: f64, parts: usize) -> f64 {
    let h = (r - l) / parts as f64;
    let mut prev = c.eval(l);
    let mut total = 0.0;
    for i in 1..=parts {
        let t = if i == parts { r } else { l + i as f64 * h };
        let p = c.eval(t);
        total += s.distance(&prev, &p);
        prev = p;
    }
    total
}

fn cell_length(c: &Curve, s: &dyn DilatationStructure, l: f64, r: f64) -> f64 {
    let s1 = chord_sum(c, s, l, r, 1);
    let s2 = chord_sum(c, s, l, r, 2);
    let s4 = chord_sum(c, s, l, r, 4);
    let (d1, d2) = (s2 - s1, s4 - s2);
    if d2 > 1e-14 * s4 && (3.0..=5.0).contains(&(d1 / d2)) {
        s4 + d2 / 3.0
    } else {
        s4
    }
}

/// Arc-length reparametrization `s ↦ c(φ(s))` on `[0, L]`, with `φ` the
/// piecewise-linear inverse of the cumulative length.
pub fn reparametrize_arclength(c: &Curve, s: &dyn DilatationStructure) -> Result<Curve> {
    let n = REPARAM_CELLS;
    let h = c.span() / n as f64;
    let knots: Vec<f64> = (0..=n).map(|i| if i == n { c.b } else { c.a + i as f64 * h }).collect();
    let lengths: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| cell_length(c, s, knots[i], knots[i + 1]))
        .collect();
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    for l in &lengths {
        let last = *cumulative.last().expect("non-empty");
        cumulative.push(last + l);
    }
    let total = cumulative[n];
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::ZeroLength);
    }
    let table = Arc::new((knots, cumulative));
    let phi = move |sigma: f64| {
        let (knots, cum) = &*table;
        let k = cum.partition_point(|&v| v <= sigma).clamp(1, cum.len() - 1) - 1;
        let (s0, s1) = (cum[k], cum[k + 1]);
        if s1 > s0 {
            knots[k] + ((sigma - s0) / (s1 - s0)).clamp(0.0, 1.0) * (knots[k + 1] - knots[k])
        } else {
            knots[k]
        }
    };
    c.reparametrized(format!("{}@arclength", c.name), 0.0, total, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{Euclidean, Heisenberg};

    fn e2() -> Euclidean {
        Euclidean::new(2)
    }

    #[test]
    fn variation_of_constant_is_zero() {
        let c = Curve::new("const", 0.0, 1.0, 2, |_| Point::from([1.0, 2.0])).unwrap();
        let v = variation(&c, &e2(), &VariationOptions::default());
        assert_eq!(v.value, 0.0);
        assert!(v.exact);
    }

    #[test]
    fn variation_of_circle() {
        let v = variation(&Curve::circle(1.0, 1.0), &e2(), &VariationOptions::default());
        assert!((v.value - 2.0 * std::f64::consts::PI).abs() < 1e-8, "{v:?}");
        assert!(v.exact);
    }

    #[test]
    fn sign_curve_variation_approaches_four() {
        let v = variation(&Curve::sign(), &e2(), &VariationOptions::default());
        assert!(v.value <= 4.0 && v.value > 4.0 - 1e-5, "{v:?}");
        let deep = VariationOptions {
            max_depth: 40,
            ..Default::default()
        };
        let v = variation(&Curve::sign(), &e2(), &deep);
        assert!(v.exact && (v.value - 4.0).abs() < 1e-8, "{v:?}");
    }

    #[test]
    fn variation_is_monotone_in_depth() {
        let c = Curve::cantor_graph(6);
        let mut prev = 0.0;
        for d in 1..12 {
            let opts = VariationOptions {
                refine_tol: 0.0,
                min_depth: d,
                max_depth: d,
            };
            let v = variation(&c, &e2(), &opts).value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn corner_dilatation() {
        let l = upper_dilatation(&Curve::corner(), 0.0, &e2(), 0.02);
        assert!((l - 2f64.sqrt()).abs() < 1e-3);
        let seg = Curve::segment(Point::from([3.0, 4.0]));
        assert!((upper_dilatation(&seg, 0.3, &e2(), 0.01) - 5.0).abs() < 1e-12);
        assert!(upper_dilatation(&Curve::sign(), 0.0, &e2(), 0.02).is_infinite());
    }

    #[test]
    fn circle_length_by_quadrature() {
        let l = length_via_dilatation(&Curve::circle(1.0, 1.0), &e2(), DEFAULT_QUAD_INTERVALS).unwrap();
        assert!((l - 2.0 * std::f64::consts::PI).abs() < 1e-4);
        assert!(matches!(
            length_via_dilatation(&Curve::sign(), &e2(), DEFAULT_QUAD_INTERVALS),
            Err(Error::NotLipschitz { .. })
        ));
        let cl = curve_length(&Curve::sign(), &e2(), DEFAULT_QUAD_INTERVALS, &Default::default());
        assert_eq!(cl.method, LengthMethod::Variation);
    }

    #[test]
    fn sign_path_length() {
        let h = hausdorff_length_estimate(&Curve::sign(), &e2(), 1e-3).unwrap();
        assert!((h - 2.0).abs() < 1e-2, "{h}");
        let seg = Curve::segment(Point::from([3.0, 4.0]));
        assert!((hausdorff_length_estimate(&seg, &e2(), 1e-2).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn reparametrized_circle_has_unit_speed() {
        let c = reparametrize_arclength(&Curve::circle(1.0, 3.0), &e2()).unwrap();
        assert!((c.b - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        for t in [0.3, 1.7, 4.0] {
            let l = upper_dilatation(&c, t, &e2(), DEFAULT_WINDOW * c.span());
            assert!((l - 1.0).abs() < 1e-2, "{l}");
        }
    }

    #[test]
    fn reparametrized_scaled_segment() {
        let c = Curve::new("2tv", 0.0, 1.0, 2, |t| Point::from([2.0 * t, 0.0])).unwrap();
        let r = reparametrize_arclength(&c, &e2()).unwrap();
        assert!((r.b - 2.0).abs() < 1e-12);
        assert!(r.eval(0.5).coord_dist(&Point::from([0.5, 0.0])) < 1e-12);
        let constant = Curve::new("k", 0.0, 1.0, 2, |_| Point::zeros(2)).unwrap();
        assert!(matches!(
            reparametrize_arclength(&constant, &e2()),
            Err(Error::ZeroLength)
        ));
    }

    #[test]
    fn heisenberg_line_dilatation() {
        let l = upper_dilatation(&Curve::heisenberg_line(), 0.5, &Heisenberg, 0.01);
        assert!((l - 1.0).abs() < 1e-12);
        let v = upper_dilatation(&Curve::vertical_segment(), 0.5, &Heisenberg, 0.01);
        assert!(v.is_infinite());
    }
}
