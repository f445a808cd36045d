//! Tangent spaces: rescaled distances, the finite-scale operators and their
//! limits, and checks of the conical-group laws.
//!
//! Two finite-scale operators are built from dilatations:
//!
//! * `Δ^x_ε(u,v) = δ^{δ^x_ε u}_{1/ε} δ^x_ε v`, whose limit ([`tangent_sum`])
//!   is `x·u⁻¹·v` in group terms (`x + v − u` in a vector space);
//! * `Σ^x_ε(u,v) = δ^x_{1/ε} δ^{δ^x_ε u}_ε v`, whose limit
//!   ([`tangent_product`]) is the group operation with neutral element `x`
//!   (`u·x⁻¹·v`, or `u + v − x`).
//!
//! The inverse is `inv^x(u) = lim Δ^x_ε(u, x)`, and the two limits are tied
//! by `lim Δ^x_ε(u,v) = Σ^x(inv^x(u), v)`.

use serde::Serialize;

use crate::dilatation::{DilatationStructure, Scale};
use crate::limits::{classify, estimate_limit, fit_decay, DecayFit, EpsSchedule, LimitEstimate, LimitOptions};
use crate::point::Point;
use crate::report::{limit_status_check, CheckRecord, CheckStatus, Report, Witness, Worst};
use crate::sampling::Sampler;

pub fn coord_metric(a: &Point, b: &Point) -> f64 {
    a.coord_dist(b)
}

pub fn abs_metric(a: &f64, b: &f64) -> f64 {
    (a - b).abs()
}

/// `(1/ε)·d(δ^x_ε u, δ^x_ε v)`.
pub fn rescaled_distance(s: &dyn DilatationStructure, x: &Point, eps: Scale, u: &Point, v: &Point) -> f64 {
    s.distance(&s.dilate(x, eps, u), &s.dilate(x, eps, v)) / eps.value()
}

/// The tangent distance `d^x(u,v)` as a limit of rescaled distances.
pub fn tangent_distance(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    v: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<f64> {
    estimate_limit(|e| rescaled_distance(s, x, e, u, v), abs_metric, schedule, opts)
}

/// `Δ^x_ε(u,v)`.
pub fn delta_op(s: &dyn DilatationStructure, x: &Point, eps: Scale, u: &Point, v: &Point) -> Point {
    s.dilate(&s.dilate(x, eps, u), eps.inv(), &s.dilate(x, eps, v))
}

/// `Σ^x_ε(u,v)`.
pub fn sum_op(s: &dyn DilatationStructure, x: &Point, eps: Scale, u: &Point, v: &Point) -> Point {
    s.dilate(x, eps.inv(), &s.dilate(&s.dilate(x, eps, u), eps, v))
}

/// `lim Δ^x_ε(u,v)`.
pub fn tangent_sum(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    v: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<Point> {
    estimate_limit(|e| delta_op(s, x, e, u, v), coord_metric, schedule, opts)
}

/// The tangent group operation `Σ^x(u,v) = lim Σ^x_ε(u,v)`.
pub fn tangent_product(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    v: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<Point> {
    estimate_limit(|e| sum_op(s, x, e, u, v), coord_metric, schedule, opts)
}

/// `inv^x(u) = lim Δ^x_ε(u, x)`.
pub fn tangent_inv(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<Point> {
    tangent_sum(s, x, u, x, schedule, opts)
}

/// An element of the tangent space at `base`, represented by a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentVector {
    pub base: Point,
    pub rep: Point,
    /// `d^x(x, rep)`.
    pub magnitude: f64,
}

impl TangentVector {
    pub fn new(ts: &TangentSpace<'_>, rep: Point) -> Self {
        let magnitude = ts.distance(&ts.base, &rep).value;
        TangentVector {
            base: ts.base.clone(),
            rep,
            magnitude,
        }
    }
}

/// The tangent space of a structure at a base point, with the schedule
/// used for its limits.
#[derive(Debug, Clone)]
pub struct TangentSpace<'a> {
    pub structure: &'a dyn DilatationStructure,
    pub base: Point,
    pub schedule: EpsSchedule,
    pub opts: LimitOptions,
}

impl<'a> TangentSpace<'a> {
    pub fn new(structure: &'a dyn DilatationStructure, base: Point, schedule: EpsSchedule, opts: LimitOptions) -> Self {
        TangentSpace {
            structure,
            base,
            schedule,
            opts,
        }
    }

    pub fn distance(&self, u: &Point, v: &Point) -> LimitEstimate<f64> {
        tangent_distance(self.structure, &self.base, u, v, &self.schedule, &self.opts)
    }

    pub fn difference(&self, u: &Point, v: &Point) -> LimitEstimate<Point> {
        tangent_sum(self.structure, &self.base, u, v, &self.schedule, &self.opts)
    }

    pub fn product(&self, u: &Point, v: &Point) -> LimitEstimate<Point> {
        tangent_product(self.structure, &self.base, u, v, &self.schedule, &self.opts)
    }

    pub fn inverse(&self, u: &Point) -> LimitEstimate<Point> {
        tangent_inv(self.structure, &self.base, u, &self.schedule, &self.opts)
    }

    pub fn dilate(&self, eps: Scale, u: &Point) -> Point {
        self.structure.dilate(&self.base, eps, u)
    }
}

/// `d^x(u,v) = (1/μ)·d^x(δ^x_μ u, δ^x_μ v)` for each `μ`.
pub fn check_cone_property(ts: &TangentSpace<'_>, u: &Point, v: &Point, mus: &[f64]) -> Report {
    let mut worst = Worst::default();
    let base = ts.distance(u, v);
    for &mu in mus {
        let m = Scale::of(mu);
        let scaled = ts.distance(&ts.dilate(m, u), &ts.dilate(m, v));
        let residual = (base.value - scaled.value / mu).abs();
        let status = if !base.converged() {
            limit_status_check(base.status)
        } else if !scaled.converged() {
            limit_status_check(scaled.status)
        } else {
            CheckStatus::from_bool(residual < ts.opts.tol)
        };
        worst.observe(residual, status, || Witness::new("u,v,mu").point(u).point(v).scalar(mu));
    }
    let mut r = Report::new("cone property");
    r.push(worst.into_record("cone"));
    r
}

/// `d^x(Σ^x(w,u), Σ^x(w,v)) = d^x(u,v)` on each `(w, u, v)`.
pub fn check_left_invariance(ts: &TangentSpace<'_>, triples: &[(Point, Point, Point)]) -> Report {
    let mut worst = Worst::default();
    for (w, u, v) in triples {
        let wu = ts.product(w, u);
        let wv = ts.product(w, v);
        let before = ts.distance(u, v);
        let after = ts.distance(&wu.value, &wv.value);
        let residual = (before.value - after.value).abs();
        let status = [&wu.status, &wv.status]
            .into_iter()
            .map(|s| limit_status_check(*s))
            .chain([limit_status_check(before.status), limit_status_check(after.status)])
            .fold(CheckStatus::from_bool(residual < ts.opts.tol), CheckStatus::worst);
        worst.observe(residual, status, || Witness::new("w,u,v").point(w).point(u).point(v));
    }
    let mut r = Report::new("left invariance");
    r.push(worst.into_record("left-invariance"));
    r
}

/// `δ^x_ε Σ^x(u,v) = Σ^x(δ^x_ε u, δ^x_ε v)` for `ε <= 1`.
pub fn check_automorphism(ts: &TangentSpace<'_>, pairs: &[(Point, Point)], eps: &[f64]) -> Report {
    let mut worst = Worst::default();
    for (u, v) in pairs {
        let uv = ts.product(u, v);
        for &e in eps {
            let s = Scale::of(e);
            let rhs = ts.product(&ts.dilate(s, u), &ts.dilate(s, v));
            let lhs = ts.dilate(s, &uv.value);
            let residual = lhs.coord_dist(&rhs.value);
            let status = limit_status_check(uv.status)
                .worst(limit_status_check(rhs.status))
                .worst(CheckStatus::from_bool(residual < ts.opts.tol));
            worst.observe(residual, status, || Witness::new("u,v,eps").point(u).point(v).scalar(e));
        }
    }
    let mut r = Report::new("dilatation automorphism");
    r.push(worst.into_record("automorphism"));
    r
}

/// Group laws in the limit: neutral element, inverse and associativity.
pub fn check_group_laws(ts: &TangentSpace<'_>, triples: &[(Point, Point, Point)]) -> Report {
    let x = &ts.base;
    let mut neutral = Worst::default();
    let mut inverse = Worst::default();
    let mut assoc = Worst::default();
    for (u, v, w) in triples {
        let wit = |label: &str| Witness::new(label).point(u).point(v).point(w);

        let xu = ts.product(x, u);
        let r = xu.value.coord_dist(u);
        neutral.observe(
            r,
            limit_status_check(xu.status).worst(CheckStatus::from_bool(r < ts.opts.tol)),
            || wit("u,v,w"),
        );

        let inv = ts.inverse(u);
        let back = ts.product(u, &inv.value);
        let r = back.value.coord_dist(x);
        let st = limit_status_check(inv.status)
            .worst(limit_status_check(back.status))
            .worst(CheckStatus::from_bool(r < ts.opts.tol));
        inverse.observe(r, st, || wit("u,v,w"));

        let uv = ts.product(u, v);
        let vw = ts.product(v, w);
        let left = ts.product(&uv.value, w);
        let right = ts.product(u, &vw.value);
        let d = ts.distance(&left.value, &right.value);
        let r = d.value.abs();
        let st = [uv.status, vw.status, left.status, right.status]
            .into_iter()
            .map(limit_status_check)
            .fold(CheckStatus::from_bool(r < ts.opts.tol), CheckStatus::worst);
        assoc.observe(r, st, || wit("u,v,w"));
    }
    let mut r = Report::new("group laws");
    r.push(neutral.into_record("neutral"));
    r.push(inverse.into_record("inverse"));
    r.push(assoc.into_record("associativity"));
    r
}

/// Per-scale values of `(1/ε)·sup |d(u,v) − d^x(u,v)|` over sampled `u, v`
/// in the ε-ball around `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTangentTrace {
    pub trace: Vec<(f64, f64)>,
    pub fit: DecayFit,
    pub report: Report,
}

pub fn check_metric_tangent(
    s: &dyn DilatationStructure,
    x: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
    pairs_per_scale: usize,
    seed: u64,
) -> MetricTangentTrace {
    let mut rng = Sampler::new(seed);
    let mut trace = Vec::with_capacity(schedule.steps);
    let mut witness = None;
    let mut worst_val = -1.0;
    for eps in schedule.points() {
        let e = eps.value();
        let mut sup: f64 = 0.0;
        for _ in 0..pairs_per_scale.max(1) {
            let u = rng.in_metric_ball(s, x, e);
            let v = rng.in_metric_ball(s, x, e);
            let dx = tangent_distance(s, x, &u, &v, schedule, opts);
            let gap = if dx.converged() {
                (s.distance(&u, &v) - dx.value).abs() / e
            } else {
                f64::INFINITY
            };
            if gap > sup {
                sup = gap;
            }
            if gap > worst_val {
                worst_val = gap;
                witness = Some(Witness::new("u,v,eps").point(&u).point(&v).scalar(e));
            }
        }
        trace.push((e, sup));
    }
    let fit = fit_decay(&trace, opts.tol, opts.tail_len);
    let status = CheckStatus::from_bool(fit.vanishes);
    let mut rec = CheckRecord::new("metric-tangent", status, trace.last().map_or(0.0, |t| t.1));
    if let Some(w) = witness {
        rec = rec.with_witness(w);
    }
    let mut report = Report::new("metric tangent");
    report.push(rec);
    MetricTangentTrace { trace, fit, report }
}

/// Default `(α, β)` grid for one-parameter membership.
pub fn membership_pairs() -> Vec<(f64, f64)> {
    let g = [0.25, 0.5, 1.0];
    g.iter().flat_map(|&a| g.iter().map(move |&b| (a, b))).collect()
}

/// Whether `α ↦ δ^x_α u` is a one-parameter semigroup of the tangent group:
/// `δ_{α+β} u = Σ^x(δ_α u, δ_β u)` within `tol` on every pair.
pub fn one_param_membership(ts: &TangentSpace<'_>, u: &Point, pairs: &[(f64, f64)], tol: f64) -> Report {
    let mut worst = Worst::default();
    for &(a, b) in pairs {
        let lhs = ts.dilate(Scale::of(a + b), u);
        let rhs = ts.product(&ts.dilate(Scale::of(a), u), &ts.dilate(Scale::of(b), u));
        let residual = lhs.coord_dist(&rhs.value);
        let ok = rhs.converged() && residual < tol;
        worst.observe(residual, CheckStatus::from_bool(ok), || {
            Witness::new("u,alpha,beta").point(u).scalar(a).scalar(b)
        });
    }
    let mut r = Report::new("one-parameter membership");
    r.push(worst.into_record("membership"));
    r
}

/// Classifies an explicit trace of points, for callers that build their own
/// sequences.
pub fn classify_points(samples: Vec<(f64, Point)>, q: f64, opts: &LimitOptions) -> LimitEstimate<Point> {
    classify(samples, &coord_metric, q, opts)
}
