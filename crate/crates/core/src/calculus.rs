//! Differentiation between dilatation structures: Pansu-type derivatives,
//! conical-morphism checks, the chain rule, equivalence of structures and
//! transport of a structure along a map.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dilatation::{check_point, DilatationStructure, Scale, SharedStructure};
use crate::error::{Error, Result};
use crate::limits::{estimate_limit, EpsSchedule, LimitEstimate, LimitOptions, LimitStatus};
use crate::point::Point;
use crate::report::{limit_status_check, CheckRecord, CheckStatus, Report, Witness, Worst};
use crate::sampling::{SampleConfig, Sampler};
use crate::structures::{from_complex, grade, to_complex, Heisenberg};
use crate::tangent::{coord_metric, tangent_product};

type PointFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// A map between two dilatation structures on model spaces of equal
/// dimension, with an optional inverse.
#[derive(Clone)]
pub struct StructureMap {
    pub name: String,
    pub source: SharedStructure,
    pub target: SharedStructure,
    eval: PointFn,
    inverse: Option<PointFn>,
}

impl fmt::Debug for StructureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructureMap")
            .field("name", &self.name)
            .field("source", &self.source.name())
            .field("target", &self.target.name())
            .field("invertible", &self.inverse.is_some())
            .finish()
    }
}

impl StructureMap {
    pub fn new(
        name: impl Into<String>,
        source: SharedStructure,
        target: SharedStructure,
        eval: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        StructureMap {
            name: name.into(),
            source,
            target,
            eval: Arc::new(eval),
            inverse: None,
        }
    }

    pub fn with_inverse(mut self, inv: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    pub fn eval(&self, p: &Point) -> Point {
        (self.eval)(p)
    }

    pub fn inverse(&self, p: &Point) -> Option<Point> {
        self.inverse.as_ref().map(|g| g(p))
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse.is_some()
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &StructureMap) -> StructureMap {
        let (f, g) = (self.eval.clone(), next.eval.clone());
        let mut out = StructureMap::new(
            format!("{}∘{}", next.name, self.name),
            self.source.clone(),
            next.target.clone(),
            move |p| g(&f(p)),
        );
        if let (Some(fi), Some(gi)) = (self.inverse.clone(), next.inverse.clone()) {
            out.inverse = Some(Arc::new(move |p| fi(&gi(p))));
        }
        out
    }

    /// The inverse as a map from the target to the source.
    pub fn inverted(&self) -> Option<StructureMap> {
        let inv = self.inverse.clone()?;
        Some(StructureMap {
            name: format!("{}⁻¹", self.name),
            source: self.target.clone(),
            target: self.source.clone(),
            eval: inv,
            inverse: Some(self.eval.clone()),
        })
    }

    /// Worst `|f⁻¹(f(p)) − p|` over `points`.
    pub fn round_trip(&self, points: &[Point]) -> CheckRecord {
        let Some(inv) = &self.inverse else {
            return CheckRecord::new("round-trip", CheckStatus::Vacuous, 0.0).with_note("no inverse");
        };
        let mut worst = Worst::default();
        for p in points {
            let r = inv(&self.eval(p)).coord_dist(p);
            worst.observe(r, CheckStatus::from_bool(r < 1e-10), || Witness::new("p").point(p));
        }
        worst.into_record("round-trip")
    }

    pub fn identity(s: SharedStructure) -> Self {
        StructureMap::new("identity", s.clone(), s, |p| p.clone()).with_inverse(|p| p.clone())
    }

    /// `p ↦ M·p + b`.
    pub fn affine(s: SharedStructure, matrix: Vec<Vec<f64>>, shift: Point) -> Result<Self> {
        let n = s.dim();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) || shift.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.len(),
            });
        }
        let inv = invert(&matrix).ok_or_else(|| Error::InvalidInput("affine matrix is singular".into()))?;
        let (m, b) = (matrix, shift);
        let b2 = b.clone();
        Ok(
            StructureMap::new("affine", s.clone(), s, move |p| mat_vec(&m, p).add(&b))
                .with_inverse(move |q| mat_vec(&inv, &q.sub(&b2))),
        )
    }

    /// Graded automorphism `(a, b, c) ↦ (λa, λb, λ²c)` of the Heisenberg
    /// group.
    pub fn hgraded(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "graded factor must be positive, got {lambda}"
            )));
        }
        let h: SharedStructure = Arc::new(Heisenberg);
        Ok(
            StructureMap::new(format!("hgraded:{lambda}"), h.clone(), h, move |p| grade(lambda, p))
                .with_inverse(move |p| grade(1.0 / lambda, p)),
        )
    }

    /// Complex square `w ↦ w²` on the plane.
    pub fn square(s: SharedStructure) -> Result<Self> {
        require_dim(&s, 2)?;
        Ok(StructureMap::new("square", s.clone(), s, |p| {
            let z = to_complex(p);
            from_complex(z * z)
        }))
    }

    /// Complex conjugation on the plane.
    pub fn conjugate(s: SharedStructure) -> Result<Self> {
        require_dim(&s, 2)?;
        Ok(
            StructureMap::new("conjugate", s.clone(), s, |p| from_complex(to_complex(p).conj()))
                .with_inverse(|p| from_complex(to_complex(p).conj())),
        )
    }

    /// Componentwise `w ↦ w + w³`.
    pub fn cubic(s: SharedStructure) -> Self {
        StructureMap::new("cubic", s.clone(), s, |p| p.iter().map(|&w| w + w * w * w).collect())
            .with_inverse(|p| p.iter().map(|&y| solve_cubic(y)).collect())
    }

    /// Componentwise `w ↦ w + w²`.
    pub fn quadratic(s: SharedStructure) -> Self {
        StructureMap::new("quadratic", s.clone(), s, |p| p.iter().map(|&w| w + w * w).collect())
    }
}

fn require_dim(s: &SharedStructure, dim: usize) -> Result<()> {
    if s.dim() == dim {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: dim,
            got: s.dim(),
        })
    }
}

fn mat_vec(m: &[Vec<f64>], p: &Point) -> Point {
    m.iter()
        .map(|row| row.iter().zip(p.iter()).map(|(a, b)| a * b).sum())
        .collect()
}

fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= p);
        for row in 0..n {
            if row != col {
                let k = a[row][col];
                if k != 0.0 {
                    let pivot_row = a[col].clone();
                    a[row].iter_mut().zip(pivot_row).for_each(|(v, pv)| *v -= k * pv);
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Real root of `w³ + w = y`.
fn solve_cubic(y: f64) -> f64 {
    let mut w = y.signum() * (y.abs()).cbrt().min(y.abs());
    for _ in 0..60 {
        let step = (w * w * w + w - y) / (3.0 * w * w + 1.0);
        w -= step;
        if step.abs() <= 1e-17 * w.abs().max(1e-300) {
            break;
        }
    }
    w
}

/// Builds a named endomap of `s`.
///
/// Names: `identity`, `square`, `conjugate`, `cubic`, `quadratic`,
/// `hgraded:<λ>`, `affine:<matrix>` or `affine:<matrix>+<vector>` with JSON
/// literals, e.g. `affine:[[2,1],[0,1]]+[1,0]`.
pub fn make_map(spec: &str, s: SharedStructure) -> Result<StructureMap> {
    let spec = spec.trim();
    let (head, param) = match spec.split_once(':') {
        Some((h, p)) => (h, Some(p)),
        None => (spec, None),
    };
    let malformed = |reason: String| Error::MalformedParameter {
        spec: spec.to_string(),
        reason,
    };
    let no_param = || match param {
        Some(_) => Err(malformed("this map takes no parameter".into())),
        None => Ok(()),
    };
    match head {
        "identity" => no_param().map(|_| StructureMap::identity(s)),
        "square" => no_param().and_then(|_| StructureMap::square(s)),
        "conjugate" => no_param().and_then(|_| StructureMap::conjugate(s)),
        "cubic" => no_param().map(|_| StructureMap::cubic(s)),
        "quadratic" => no_param().map(|_| StructureMap::quadratic(s)),
        "hgraded" => {
            require_dim(&s, 3)?;
            let lambda = match param {
                Some(p) => crate::structures::parse_decimal(p, spec)?,
                None => return Err(malformed("missing graded factor".into())),
            };
            StructureMap::hgraded(lambda).map_err(|e| malformed(e.to_string()))
        }
        "affine" => {
            let p = param.ok_or_else(|| malformed("missing matrix literal".into()))?;
            let (m, b) = match p.split_once('+') {
                Some((m, b)) => (m, Some(b)),
                None => (p, None),
            };
            let matrix: Vec<Vec<f64>> =
                serde_json::from_str(m).map_err(|e| malformed(format!("bad matrix literal: {e}")))?;
            let shift = match b {
                Some(b) => Point::from(
                    serde_json::from_str::<Vec<f64>>(b).map_err(|e| malformed(format!("bad vector literal: {e}")))?,
                ),
                None => Point::zeros(s.dim()),
            };
            StructureMap::affine(s, matrix, shift)
        }
        _ => Err(Error::UnknownName(spec.to_string())),
    }
}

/// `δ̄^{f(x)}_{1/ε} f(δ^x_ε u)`.
pub fn pansu_quotient(f: &StructureMap, x: &Point, fx: &Point, eps: Scale, u: &Point) -> Point {
    let moved = f.eval(&f.source.dilate(x, eps, u));
    f.target.dilate(fx, eps.inv(), &moved)
}

/// Estimates `Df(x)(u) = lim δ̄^{f(x)}_{1/ε} f(δ^x_ε u)`.
pub fn pansu_derivative(
    f: &StructureMap,
    x: &Point,
    u: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<Point> {
    let fx = f.eval(x);
    estimate_limit(|e| pansu_quotient(f, x, &fx, e, u), coord_metric, schedule, opts)
}

/// `(1/ε)·d̄(f(δ^x_ε u), δ̄^{f(x)}_ε q)` at scale `eps`.
pub fn resubstitution_residual(f: &StructureMap, x: &Point, u: &Point, q: &Point, eps: f64) -> f64 {
    let e = Scale::of(eps);
    let fx = f.eval(x);
    let lhs = f.eval(&f.source.dilate(x, e, u));
    let rhs = f.target.dilate(&fx, e, q);
    f.target.distance(&lhs, &rhs) / eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Pansu,
    Exact,
}

/// A candidate conical morphism at `x`, evaluated pointwise: either the
/// Pansu derivative of a map or the map itself.
#[derive(Debug, Clone)]
pub struct DerivativeEstimate {
    pub map: StructureMap,
    pub x: Point,
    pub fx: Point,
    pub schedule: EpsSchedule,
    pub opts: LimitOptions,
    mode: Mode,
}

impl DerivativeEstimate {
    pub fn pansu(map: &StructureMap, x: &Point, schedule: &EpsSchedule, opts: &LimitOptions) -> Self {
        DerivativeEstimate {
            map: map.clone(),
            x: x.clone(),
            fx: map.eval(x),
            schedule: *schedule,
            opts: *opts,
            mode: Mode::Pansu,
        }
    }

    /// Treats the map itself as the candidate morphism.
    pub fn exact(map: &StructureMap, x: &Point, schedule: &EpsSchedule, opts: &LimitOptions) -> Self {
        DerivativeEstimate {
            mode: Mode::Exact,
            ..DerivativeEstimate::pansu(map, x, schedule, opts)
        }
    }

    pub fn apply(&self, u: &Point) -> LimitEstimate<Point> {
        match self.mode {
            Mode::Pansu => pansu_derivative(&self.map, &self.x, u, &self.schedule, &self.opts),
            Mode::Exact => exact_estimate(self.map.eval(u)),
        }
    }
}

fn exact_estimate(v: Point) -> LimitEstimate<Point> {
    LimitEstimate {
        samples: vec![(1.0, v.clone())],
        value: v,
        status: LimitStatus::Converged,
        residual: 0.0,
        tail_diameter: 0.0,
        refinements: 0,
        witness_eps: None,
    }
}

fn close(a: &Point, b: &Point, tol: f64) -> (f64, CheckStatus) {
    let r = a.coord_dist(b);
    (r, CheckStatus::from_bool(r <= tol * b.norm().max(1.0)))
}

type Observation = (f64, CheckStatus, Witness);

/// Homogeneity `Q(δ^x_ε u) = δ̄^{f(x)}_ε Q(u)` for `ε ∈ {0.25, 0.5, 1}` and
/// additivity `Q(Σ^x(u,v)) = Σ^{f(x)}(Q(u), Q(v))` on `pairs`.
pub fn check_conical_morphism(q: &DerivativeEstimate, pairs: &[(Point, Point)]) -> Report {
    let (src, tgt) = (&q.map.source, &q.map.target);
    let tol = 10.0 * q.opts.tol;
    let outcomes: Vec<(Observation, Observation)> = pairs
        .par_iter()
        .map(|(u, v)| {
            let qu = q.apply(u);
            let mut hom = (0.0, CheckStatus::Pass, Witness::new("u").point(u));
            for eps in [0.25, 0.5, 1.0] {
                let e = Scale::of(eps);
                let lhs = q.apply(&src.dilate(&q.x, e, u));
                let (r, st) = if lhs.converged() && qu.converged() {
                    close(&lhs.value, &tgt.dilate(&q.fx, e, &qu.value), tol)
                } else {
                    (
                        f64::INFINITY,
                        limit_status_check(lhs.status).worst(limit_status_check(qu.status)),
                    )
                };
                if st.worst(hom.1) != hom.1 || (st == hom.1 && r > hom.0) {
                    hom = (r, st, Witness::new("u,eps").point(u).scalar(eps));
                }
            }
            let qv = q.apply(v);
            let sum = tangent_product(src.as_ref(), &q.x, u, v, &q.schedule, &q.opts);
            let add = if !(sum.converged() && qu.converged() && qv.converged()) {
                let st = [sum.status, qu.status, qv.status]
                    .into_iter()
                    .map(limit_status_check)
                    .fold(CheckStatus::Pass, CheckStatus::worst);
                (f64::INFINITY, st)
            } else {
                let lhs = q.apply(&sum.value);
                let rhs = tangent_product(tgt.as_ref(), &q.fx, &qu.value, &qv.value, &q.schedule, &q.opts);
                if lhs.converged() && rhs.converged() {
                    close(&lhs.value, &rhs.value, tol)
                } else {
                    (f64::INFINITY, CheckStatus::Inconclusive)
                }
            };
            (hom, (add.0, add.1, Witness::new("u,v").point(u).point(v)))
        })
        .collect();

    let mut hom = Worst::default();
    let mut add = Worst::default();
    for (h, a) in outcomes {
        hom.observe(h.0, h.1, || h.2);
        add.observe(a.0, a.1, || a.2);
    }
    let mut report = Report::new(format!("conical morphism {} at {}", q.map.name, q.x));
    report.push(hom.into_record("homogeneity"));
    report.push(add.into_record("additivity"));
    report
}

/// Seeded `(u, v)` pairs in the metric ball of radius `r` around `x`.
pub fn sample_pairs(s: &dyn DilatationStructure, x: &Point, n: usize, r: f64, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = Sampler::new(seed);
    (0..n)
        .map(|_| (rng.in_metric_ball(s, x, r), rng.in_metric_ball(s, x, r)))
        .collect()
}

/// Seeded `(x, u)` probes: `x` in the coordinate ball of `cfg.radius`, `u`
/// in the metric ball of radius `0.5` around `x`.
pub fn sample_probes(s: &dyn DilatationStructure, cfg: &SampleConfig) -> Vec<(Point, Point)> {
    let mut rng = Sampler::new(cfg.seed);
    let origin = Point::zeros(s.dim());
    (0..cfg.count)
        .map(|_| {
            let x = rng.in_coord_ball(&origin, cfg.radius);
            let u = rng.in_metric_ball(s, &x, 0.5);
            (x, u)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeSurvey {
    pub map: String,
    pub probes: usize,
    pub converged: usize,
    pub oscillating: usize,
    pub diverging: usize,
    pub inconclusive: usize,
    pub report: Report,
}

impl DerivativeSurvey {
    pub fn fraction(&self, status: LimitStatus) -> f64 {
        let n = match status {
            LimitStatus::Converged => self.converged,
            LimitStatus::Oscillating => self.oscillating,
            LimitStatus::Diverging => self.diverging,
            LimitStatus::Inconclusive => self.inconclusive,
        };
        n as f64 / self.probes.max(1) as f64
    }
}

/// Pansu derivative of `f` at seeded probes, with the re-substitution check
/// and the conical-morphism laws at each base point.
///
/// The convergence record is the max over the grid of base points, a spot
/// check of uniform differentiability.
pub fn survey_derivative(
    f: &StructureMap,
    cfg: &SampleConfig,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Result<DerivativeSurvey> {
    if cfg.count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    schedule.validate()?;
    let probes = sample_probes(f.source.as_ref(), cfg);
    let smallest = schedule.smallest();
    let results: Vec<(LimitEstimate<Point>, f64)> = probes
        .par_iter()
        .map(|(x, u)| {
            let q = pansu_derivative(f, x, u, schedule, opts);
            let resub = if q.converged() {
                resubstitution_residual(f, x, u, &q.value, smallest)
            } else {
                f64::INFINITY
            };
            (q, resub)
        })
        .collect();

    let mut survey = DerivativeSurvey {
        map: f.name.clone(),
        probes: probes.len(),
        converged: 0,
        oscillating: 0,
        diverging: 0,
        inconclusive: 0,
        report: Report::new(format!("derivative of {} on {}", f.name, f.source.name())),
    };
    let mut conv = Worst::default();
    let mut resub = Worst::default();
    for ((x, u), (q, r)) in probes.iter().zip(&results) {
        match q.status {
            LimitStatus::Converged => survey.converged += 1,
            LimitStatus::Oscillating => survey.oscillating += 1,
            LimitStatus::Diverging => survey.diverging += 1,
            LimitStatus::Inconclusive => survey.inconclusive += 1,
        }
        let wit = || Witness::new("x,u").point(x).point(u);
        conv.observe(q.residual, limit_status_check(q.status), wit);
        if q.converged() {
            resub.observe(*r, CheckStatus::from_bool(*r < 1e-5), wit);
        }
    }
    survey.report.push(conv.into_record("convergence").with_note(format!(
        "{} converged, {} oscillating, {} diverging, {} inconclusive",
        survey.converged, survey.oscillating, survey.diverging, survey.inconclusive
    )));
    if survey.converged == 0 {
        survey
            .report
            .push(CheckRecord::new("resubstitution", CheckStatus::Vacuous, 0.0));
        return Ok(survey);
    }
    survey.report.push(resub.into_record("resubstitution"));

    let mut hom = Worst::default();
    let mut add = Worst::default();
    let bases: Vec<&Point> = probes.iter().map(|(x, _)| x).take(3).collect();
    for (i, x) in bases.into_iter().enumerate() {
        let d = DerivativeEstimate::pansu(f, x, schedule, opts);
        let pairs = sample_pairs(f.source.as_ref(), x, 10, 0.5, cfg.seed.wrapping_add(1 + i as u64));
        let r = check_conical_morphism(&d, &pairs);
        for rec in r.records {
            let target = if rec.name == "homogeneity" { &mut hom } else { &mut add };
            let w = rec.witness.clone().unwrap_or_else(|| Witness::new("x").point(x));
            target.observe(rec.residual, rec.status, || w);
        }
    }
    survey.report.push(hom.into_record("homogeneity"));
    survey.report.push(add.into_record("additivity"));
    Ok(survey)
}

/// Compares `D(g∘f)(x)(u)` with `Dg(f(x))(Df(x)(u))` on `us`.
///
/// Refuses when either factor fails to converge.
pub fn chain_rule_check(
    f: &StructureMap,
    g: &StructureMap,
    x: &Point,
    us: &[Point],
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Result<Report> {
    if f.target.dim() != g.source.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.target.dim(),
            got: g.source.dim(),
        });
    }
    check_point(f.source.as_ref(), x)?;
    let gf = f.then(g);
    let fx = f.eval(x);
    let rows: Vec<Result<(f64, Point)>> = us
        .par_iter()
        .map(|u| {
            let df = pansu_derivative(f, x, u, schedule, opts);
            if !df.converged() {
                return Err(Error::NonConvergent(format!(
                    "Df at {x} in direction {u}: {}",
                    df.status
                )));
            }
            let dg = pansu_derivative(g, &fx, &df.value, schedule, opts);
            if !dg.converged() {
                return Err(Error::NonConvergent(format!(
                    "Dg at {fx} in direction {}: {}",
                    df.value, dg.status
                )));
            }
            let dgf = pansu_derivative(&gf, x, u, schedule, opts);
            if !dgf.converged() {
                return Err(Error::NonConvergent(format!(
                    "D(g∘f) at {x} in direction {u}: {}",
                    dgf.status
                )));
            }
            Ok((dgf.value.coord_dist(&dg.value), u.clone()))
        })
        .collect();
    let mut worst = Worst::default();
    for row in rows {
        let (r, u) = row?;
        worst.observe(r, CheckStatus::from_bool(r <= opts.tol), || Witness::new("u").point(&u));
    }
    let mut report = Report::new(format!("chain rule {} then {} at {x}", f.name, g.name));
    report.push(worst.into_record("chain-rule"));
    Ok(report)
}

/// `Q^x(u) = lim δ̄^x_{1/ε} δ^x_ε u`, with `δ` from `s1` and `δ̄` from `s2`.
pub fn equivalence_q(
    s1: &dyn DilatationStructure,
    s2: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<Point> {
    estimate_limit(
        |e| s2.dilate(x, e.inv(), &s1.dilate(x, e, u)),
        coord_metric,
        schedule,
        opts,
    )
}

/// Largest ratio `max(d₁/d₂, d₂/d₁)` accepted as bilipschitz on samples.
pub const BILIPSCHITZ_BOUND: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub report: Report,
}

/// Tests whether two structures on one model space are equivalent: the
/// identity is bilipschitz on samples and both `Q^x` and `P^x` converge.
pub fn equivalence_check(
    s1: &dyn DilatationStructure,
    s2: &dyn DilatationStructure,
    cfg: &SampleConfig,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Result<EquivalenceReport> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch {
            expected: s1.dim(),
            got: s2.dim(),
        });
    }
    if cfg.count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    schedule.validate()?;
    let probes = sample_probes(s1, cfg);

    let mut bilip = Worst::default();
    for (x, u) in &probes {
        for eps in [1.0, 1e-2, 1e-4] {
            let w = s1.dilate(x, Scale::of(eps), u);
            let (d1, d2) = (s1.distance(x, &w), s2.distance(x, &w));
            if d1 == 0.0 && d2 == 0.0 {
                continue;
            }
            let ratio = (d1 / d2).max(d2 / d1);
            bilip.observe(ratio, CheckStatus::from_bool(ratio <= BILIPSCHITZ_BOUND), || {
                Witness::new("x,u").point(x).point(&w)
            });
        }
    }

    let limits: Vec<(LimitEstimate<Point>, LimitEstimate<Point>)> = probes
        .par_iter()
        .map(|(x, u)| {
            (
                equivalence_q(s1, s2, x, u, schedule, opts),
                equivalence_q(s2, s1, x, u, schedule, opts),
            )
        })
        .collect();
    let mut q = Worst::default();
    let mut p = Worst::default();
    for ((x, u), (lq, lp)) in probes.iter().zip(&limits) {
        q.observe(lq.residual, limit_status_check(lq.status), || {
            Witness::new("x,u,Q").point(x).point(u).point(&lq.value)
        });
        p.observe(lp.residual, limit_status_check(lp.status), || {
            Witness::new("x,u,P").point(x).point(u).point(&lp.value)
        });
    }
    let mut report = Report::new(format!("equivalence of {} and {}", s1.name(), s2.name()));
    report.push(bilip.into_record("bilipschitz"));
    report.push(q.into_record("Q"));
    report.push(p.into_record("P"));
    Ok(EquivalenceReport {
        equivalent: report.passed(),
        report,
    })
}

/// Checks `Σ̄^x(u,v) = Q^x(Σ^x(P^x(u), P^x(v)))` on seeded samples.
pub fn tangent_iso_check(
    s1: &dyn DilatationStructure,
    s2: &dyn DilatationStructure,
    cfg: &SampleConfig,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
    tol: f64,
) -> Result<Report> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch {
            expected: s1.dim(),
            got: s2.dim(),
        });
    }
    let mut rng = Sampler::new(cfg.seed);
    let origin = Point::zeros(s1.dim());
    let triples: Vec<(Point, Point, Point)> = (0..cfg.count)
        .map(|_| {
            let x = rng.in_coord_ball(&origin, cfg.radius);
            let u = rng.in_metric_ball(s2, &x, 0.5);
            let v = rng.in_metric_ball(s2, &x, 0.5);
            (x, u, v)
        })
        .collect();
    let rows: Vec<(f64, CheckStatus)> = triples
        .par_iter()
        .map(|(x, u, v)| {
            let lhs = tangent_product(s2, x, u, v, schedule, opts);
            let pu = equivalence_q(s2, s1, x, u, schedule, opts);
            let pv = equivalence_q(s2, s1, x, v, schedule, opts);
            if !(lhs.converged() && pu.converged() && pv.converged()) {
                return (f64::INFINITY, CheckStatus::Inconclusive);
            }
            let inner = tangent_product(s1, x, &pu.value, &pv.value, schedule, opts);
            if !inner.converged() {
                return (f64::INFINITY, CheckStatus::Inconclusive);
            }
            let rhs = equivalence_q(s1, s2, x, &inner.value, schedule, opts);
            if !rhs.converged() {
                return (f64::INFINITY, CheckStatus::Inconclusive);
            }
            let r = lhs.value.coord_dist(&rhs.value);
            (r, CheckStatus::from_bool(r <= tol))
        })
        .collect();
    let mut worst = Worst::default();
    for ((x, u, v), (r, st)) in triples.iter().zip(rows) {
        worst.observe(r, st, || Witness::new("x,u,v").point(x).point(u).point(v));
    }
    let mut report = Report::new(format!("tangent isomorphism {} / {}", s1.name(), s2.name()));
    report.push(worst.into_record("tangent-iso"));
    Ok(report)
}

/// The structure `f*δ`: distance of the target model space and dilatations
/// `(f*δ)^{f(x)}_ε f(u) = f(δ^x_ε u)`.
#[derive(Debug, Clone)]
pub struct Transported {
    pub base: SharedStructure,
    pub map: StructureMap,
}

impl DilatationStructure for Transported {
    fn name(&self) -> String {
        format!("transport({}, {})", self.map.name, self.base.name())
    }

    fn dim(&self) -> usize {
        self.map.target.dim()
    }

    fn distance(&self, x: &Point, y: &Point) -> f64 {
        self.map.target.distance(x, y)
    }

    fn dilate_raw(&self, x: &Point, eps: f64, y: &Point) -> Point {
        let inv = self.map.inverse.as_ref().expect("transport requires an invertible map");
        let (px, py) = (inv(x), inv(y));
        self.map.eval(&self.base.dilate_raw(&px, eps, &py))
    }

    fn domain_radius_a(&self) -> f64 {
        self.base.domain_radius_a()
    }

    fn domain_radius_b(&self) -> f64 {
        self.base.domain_radius_b()
    }
}

/// Transports `s` along the invertible map `f`, after checking round trips
/// on seeded points of the unit coordinate ball.
pub fn transport_structure(s: SharedStructure, f: &StructureMap) -> Result<Transported> {
    if !f.is_invertible() {
        return Err(Error::Precondition(format!("map {} has no inverse", f.name)));
    }
    if f.source.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: f.source.dim(),
        });
    }
    let mut rng = Sampler::new(0);
    let origin = Point::zeros(s.dim());
    let points: Vec<Point> = (0..20).map(|_| rng.in_coord_ball(&origin, 1.0)).collect();
    let rt = f.round_trip(&points);
    if !rt.status.is_ok() {
        return Err(Error::Precondition(format!(
            "inverse of {} fails to round-trip (error {:e})",
            f.name, rt.residual
        )));
    }
    Ok(Transported {
        base: s,
        map: f.clone(),
    })
}

/// Complex derivative oracle for tests and reports: `(z ↦ z²)'(x) = 2x`.
pub fn square_derivative(x: &Point, u: &Point) -> Point {
    let (z, w) = (to_complex(x), to_complex(u));
    from_complex(z * z + Complex64::new(2.0, 0.0) * z * (w - z))
}
