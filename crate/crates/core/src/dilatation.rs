//! The dilatation-structure abstraction and the axiom audit.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{EpsSchedule, LimitOptions, LimitStatus};
use crate::point::Point;
use crate::report::{limit_status_check, CheckStatus, Report, Witness, Worst};
use crate::sampling::Sampler;
use crate::tangent;

/// A scale factor ε in `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Scale(f64);

impl Scale {
    pub const ONE: Scale = Scale(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Scale(value))
        } else {
            Err(Error::InvalidInput(format!(
                "scale must be a positive finite number, got {value}"
            )))
        }
    }

    /// Panics on a non-positive value. For scales built from validated
    /// schedules and literals.
    pub fn of(value: f64) -> Self {
        assert!(value.is_finite() && value > 0.0, "scale must be positive, got {value}");
        Scale(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn inv(self) -> Scale {
        Scale(1.0 / self.0)
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for Scale {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Scale::new(v)
    }
}

impl From<Scale> for f64 {
    fn from(s: Scale) -> f64 {
        s.0
    }
}

impl std::ops::Mul for Scale {
    type Output = Scale;
    fn mul(self, rhs: Scale) -> Scale {
        Scale(self.0 * rhs.0)
    }
}

/// A metric space with a family of base-point dilatations `δ^x_ε`.
///
/// Every shipped instance is globally defined on its model space, so the
/// domain radii only bound sampling.
pub trait DilatationStructure: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn distance(&self, x: &Point, y: &Point) -> f64;

    /// Closed-form `δ^x_ε y` for arbitrary `ε > 0`.
    fn dilate_raw(&self, x: &Point, eps: f64, y: &Point) -> Point;

    /// `δ^x_ε y`, exact on the identities `δ^x_1 = id` and `δ^x_ε x = x`.
    fn dilate(&self, x: &Point, eps: Scale, y: &Point) -> Point {
        if eps.is_one() || x == y {
            return y.clone();
        }
        self.dilate_raw(x, eps.value(), y)
    }

    fn domain_radius_a(&self) -> f64 {
        2.0
    }

    fn domain_radius_b(&self) -> f64 {
        1.5
    }
}

pub type SharedStructure = Arc<dyn DilatationStructure>;

/// Validates inputs, then evaluates `δ^x_ε y`.
pub fn dilate(s: &dyn DilatationStructure, x: &Point, eps: f64, y: &Point) -> Result<Point> {
    let eps = Scale::new(eps)?;
    check_point(s, x)?;
    check_point(s, y)?;
    Ok(s.dilate(x, eps, y))
}

pub fn check_point(s: &dyn DilatationStructure, p: &Point) -> Result<()> {
    if p.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: p.dim(),
        });
    }
    if !p.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite coordinates in {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub samples: usize,
    /// Base points are drawn from the coordinate ball of this radius around
    /// the origin.
    pub radius: f64,
    pub seed: u64,
    pub schedule: EpsSchedule,
    pub tol_exact: f64,
    pub tol_limit: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            samples: 50,
            radius: 1.0,
            seed: 0,
            schedule: EpsSchedule::default(),
            tol_exact: 1e-10,
            tol_limit: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub structure: String,
    pub config: AuditConfig,
    pub report: Report,
}

impl AxiomReport {
    pub fn status(&self, axiom: &str) -> Option<CheckStatus> {
        self.report.record(axiom).map(|r| r.status)
    }

    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

struct AxiomSample {
    x: Point,
    u: Point,
    v: Point,
    w: Point,
    eps: f64,
    mu: f64,
}

struct SampleOutcome {
    a0: f64,
    a1: f64,
    a2: f64,
    metric: f64,
    a3: (f64, CheckStatus),
    a4: (f64, CheckStatus),
}

/// Audits axioms A0–A4 and the metric axioms on seeded samples.
///
/// A0–A2 are exact identities measured in coordinates; A3 and A4 are limits
/// along the schedule. A3 is reported degenerate when the rescaled distance
/// of two distinct points tends to zero.
pub fn audit_axioms(s: &dyn DilatationStructure, cfg: &AuditConfig) -> Result<AxiomReport> {
    if cfg.samples == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    if cfg.radius.is_nan() || cfg.radius <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {}",
            cfg.radius
        )));
    }
    cfg.schedule.validate()?;

    let mut rng = Sampler::new(cfg.seed);
    let origin = Point::zeros(s.dim());
    let local = 0.5 * s.domain_radius_a();
    let samples: Vec<AxiomSample> = (0..cfg.samples)
        .map(|_| {
            let x = rng.in_coord_ball(&origin, cfg.radius);
            let u = rng.in_metric_ball(s, &x, local);
            let v = rng.in_metric_ball(s, &x, local);
            let w = rng.in_metric_ball(s, &x, local);
            let eps = rng.log_uniform(1e-2, 1.0);
            let mu = rng.log_uniform(1e-2, 1.0);
            AxiomSample { x, u, v, w, eps, mu }
        })
        .collect();

    let opts = LimitOptions::with_tol(cfg.tol_limit);
    let outcomes: Vec<SampleOutcome> = samples
        .par_iter()
        .map(|p| evaluate_sample(s, p, &cfg.schedule, &opts))
        .collect();

    let mut a0 = Worst::default();
    let mut a1 = Worst::default();
    let mut a2 = Worst::default();
    let mut metric = Worst::default();
    let mut a3 = Worst::default();
    let mut a4 = Worst::default();
    for (p, o) in samples.iter().zip(&outcomes) {
        let wit = |label: &str| {
            Witness::new(label)
                .point(&p.x)
                .point(&p.u)
                .point(&p.v)
                .scalar(p.eps)
                .scalar(p.mu)
        };
        a0.observe(o.a0, exact_status(o.a0, cfg.tol_exact), || wit("x,u,v,eps,mu"));
        a1.observe(o.a1, exact_status(o.a1, cfg.tol_exact), || wit("x,u,v,eps,mu"));
        a2.observe(o.a2, exact_status(o.a2, cfg.tol_exact), || wit("x,u,v,eps,mu"));
        metric.observe(o.metric, exact_status(o.metric, cfg.tol_exact), || {
            wit("x,u,v,eps,mu").point(&p.w)
        });
        a3.observe(o.a3.0, o.a3.1, || wit("x,u,v"));
        a4.observe(o.a4.0, o.a4.1, || wit("x,u,v"));
    }

    let mut report = Report::new(format!("axioms {}", s.name()));
    report.push(a0.into_record("A0"));
    report.push(a1.into_record("A1"));
    report.push(a2.into_record("A2"));
    report.push(a3.into_record("A3"));
    report.push(a4.into_record("A4"));
    report.push(metric.into_record("metric"));
    Ok(AxiomReport {
        structure: s.name(),
        config: *cfg,
        report,
    })
}

fn exact_status(residual: f64, tol: f64) -> CheckStatus {
    CheckStatus::from_bool(residual < tol)
}

fn evaluate_sample(
    s: &dyn DilatationStructure,
    p: &AxiomSample,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> SampleOutcome {
    let (x, u, v, w) = (&p.x, &p.u, &p.v, &p.w);
    let eps = Scale::of(p.eps);
    let mu = Scale::of(p.mu);

    let a0 = s.dilate(x, eps.inv(), &s.dilate(x, eps, u)).coord_dist(u);

    let a1 = s
        .dilate(x, Scale::ONE, u)
        .coord_dist(u)
        .max(s.dilate(x, eps, x).coord_dist(x));

    let lhs = s.dilate(x, eps, &s.dilate(x, mu, u));
    let a2 = lhs.coord_dist(&s.dilate(x, eps * mu, u));

    let (duv, dvu, dvw, duw) = (s.distance(u, v), s.distance(v, u), s.distance(v, w), s.distance(u, w));
    let metric = [
        (duv - dvu).abs(),
        s.distance(u, u),
        (duw - duv - dvw).max(0.0),
        (-duv).max(0.0),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let dx = tangent::tangent_distance(s, x, u, v, schedule, opts);
    let a3 = if !dx.converged() {
        (dx.residual, limit_status_check(dx.status))
    } else if duv > 100.0 * opts.tol && dx.value.abs() <= opts.tol * duv.max(1.0) {
        (dx.residual, CheckStatus::Degenerate)
    } else {
        (dx.residual, exact_status(dx.residual, opts.tol))
    };

    let sum = tangent::tangent_sum(s, x, u, v, schedule, opts);
    let a4 = match sum.status {
        LimitStatus::Converged => (sum.residual, exact_status(sum.residual, opts.tol)),
        st => (sum.residual, limit_status_check(st)),
    };

    SampleOutcome {
        a0,
        a1,
        a2,
        metric,
        a3,
        a4,
    }
}
