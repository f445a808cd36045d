//! The "looking down" relation `A ≥ B` between two dilatation structures on
//! one model space, the topological distribution it induces, and the
//! transfer of derivability from the lower structure to the upper one.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{derivative_at, reparametrize_arclength, upper_dilatation, variation, Curve, DEFAULT_WINDOW};
use crate::dilatation::{DilatationStructure, Scale, SharedStructure};
use crate::error::{Error, Result};
use crate::limits::{estimate_limit, fit_decay, DecayFit, EpsSchedule, LimitEstimate, LimitOptions};
use crate::point::Point;
use crate::report::{limit_status_check, CheckRecord, CheckStatus, Report, Witness, Worst};
use crate::sampling::{SampleConfig, Sampler};
use crate::structures::{group_op, left_quotient, Euclidean, Heisenberg, LeftEuclidean};
use crate::tangent::{coord_metric, tangent_distance};

/// Default bound on `d^x_A(x, z)` for distribution probes.
pub const DEFAULT_PROBE_RADIUS: f64 = 2.0;

/// Bound on `d^x_A(x, z(0))` for condition (c) probe curves.
pub const CONDITION_C_RADIUS: f64 = 1.5;

/// An upper structure `A` (distance `d_A`, dilatations `δ`) and a lower
/// structure `B` (`d_B`, `δ̄`) on the same model space.
#[derive(Debug, Clone)]
pub struct LookdownPair {
    pub name: String,
    pub upper: SharedStructure,
    pub lower: SharedStructure,
}

impl LookdownPair {
    pub fn new(name: impl Into<String>, upper: SharedStructure, lower: SharedStructure) -> Result<Self> {
        if upper.dim() != lower.dim() {
            return Err(Error::DimensionMismatch {
                expected: upper.dim(),
                got: lower.dim(),
            });
        }
        Ok(LookdownPair {
            name: name.into(),
            upper,
            lower,
        })
    }

    /// Heisenberg gauge structure over the left-invariant Euclidean one.
    pub fn heisenberg_euclidean() -> Self {
        LookdownPair {
            name: "heisenberg-euclidean".into(),
            upper: Arc::new(Heisenberg),
            lower: Arc::new(LeftEuclidean),
        }
    }

    pub fn dim(&self) -> usize {
        self.upper.dim()
    }
}

/// Names: `heisenberg-euclidean`, `euclidean-heisenberg` (reversed),
/// `euclidean-euclidean`.
pub fn make_pair(spec: &str) -> Result<LookdownPair> {
    match spec.trim() {
        "heisenberg-euclidean" => Ok(LookdownPair::heisenberg_euclidean()),
        "euclidean-heisenberg" => {
            LookdownPair::new("euclidean-heisenberg", Arc::new(LeftEuclidean), Arc::new(Heisenberg))
        }
        "euclidean-euclidean" => {
            let e: SharedStructure = Arc::new(Euclidean::new(3));
            LookdownPair::new("euclidean-euclidean", e.clone(), e)
        }
        other => Err(Error::UnknownName(other.to_string())),
    }
}

/// `Q^x_ε z = δ̄^x_{1/ε} δ^x_ε z`.
pub fn q_eps(p: &LookdownPair, x: &Point, eps: Scale, z: &Point) -> Point {
    p.lower.dilate(x, eps.inv(), &p.upper.dilate(x, eps, z))
}

/// Closed form of `D id(x)(u)` for the Heisenberg pair:
/// `x + (a₁, a₂, (x₁a₂ − x₂a₁)/2)` with `a = x⁻¹u`.
pub fn heisenberg_identity_derivative(x: &Point, u: &Point) -> Point {
    let a = left_quotient(x, u);
    x.add(&Point::from([a[0], a[1], 0.5 * (x[0] * a[1] - x[1] * a[0])]))
}

fn tangent_value(
    s: &dyn DilatationStructure,
    x: &Point,
    u: &Point,
    v: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Result<f64> {
    let d = tangent_distance(s, x, u, v, schedule, opts);
    if d.converged() {
        Ok(d.value)
    } else {
        Err(Error::NonConvergent(format!("tangent distance at {x}: {}", d.status)))
    }
}

/// `d^x_A(x, z) − (1/ε)·d^x_B(x, δ^x_ε z)`, refused when `d^x_A(x, z)`
/// exceeds `radius`.
pub fn distribution_gap(
    p: &LookdownPair,
    x: &Point,
    eps: Scale,
    z: &Point,
    radius: f64,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Result<f64> {
    let da = tangent_value(p.upper.as_ref(), x, x, z, schedule, opts)?;
    if da > radius {
        return Err(Error::Precondition(format!(
            "d^x_A(x, z) = {da} exceeds the probe radius {radius}"
        )));
    }
    let moved = p.upper.dilate(x, eps, z);
    let db = tangent_value(p.lower.as_ref(), x, x, &moved, schedule, opts)?;
    Ok(da - db / eps.value())
}

/// Membership of `z` in the filter set `F(x, ε, λ)`.
pub fn in_distribution(
    p: &LookdownPair,
    x: &Point,
    eps: Scale,
    lambda: f64,
    z: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Result<bool> {
    distribution_gap(p, x, eps, z, DEFAULT_PROBE_RADIUS, schedule, opts).map(|g| g <= lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionC {
    /// `(ε, gap, vertical part)` along the schedule.
    pub trace: Vec<(f64, f64, f64)>,
    pub gap_fit: DecayFit,
    pub vertical_fit: DecayFit,
    pub report: Report,
}

/// Condition (c) along a probe curve `ε ↦ z(ε)`: if the distribution gap
/// tends to zero, so must the vertical part `d^x_A(Q^x_ε z(ε), z(ε))`.
///
/// The record is vacuous when the gap does not vanish. A probe that
/// leaves the radius-3/2 ball is reported as inconclusive rather than
/// refused.
pub fn check_condition_c(
    p: &LookdownPair,
    x: &Point,
    z: &(dyn Fn(Scale) -> Point + Sync),
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> ConditionC {
    let mut report = Report::new(format!("condition (c) for {} at {x}", p.name));
    let smallest = Scale::of(schedule.smallest());
    let reach = tangent_distance(p.upper.as_ref(), x, x, &z(smallest), schedule, opts);
    let within = reach.converged() && reach.value <= CONDITION_C_RADIUS;
    let mut pre = CheckRecord::new(
        "probe-radius",
        if within {
            CheckStatus::Pass
        } else {
            CheckStatus::Inconclusive
        },
        reach.value,
    );
    if !within {
        pre = pre.with_note(format!(
            "d^x_A(x, z(0)) = {} is not within {CONDITION_C_RADIUS}",
            reach.value
        ));
    }
    report.push(pre);

    let trace: Vec<(f64, f64, f64)> = schedule
        .points()
        .par_iter()
        .map(|&e| {
            let ze = z(e);
            let gap = distribution_gap(p, x, e, &ze, f64::INFINITY, schedule, opts).unwrap_or(f64::INFINITY);
            let q = q_eps(p, x, e, &ze);
            let vertical = tangent_distance(p.upper.as_ref(), x, &q, &ze, schedule, opts);
            let v = if vertical.converged() {
                vertical.value
            } else {
                f64::INFINITY
            };
            (e.value(), gap, v)
        })
        .collect();
    let gaps: Vec<(f64, f64)> = trace.iter().map(|t| (t.0, t.1.abs())).collect();
    let verticals: Vec<(f64, f64)> = trace.iter().map(|t| (t.0, t.2)).collect();
    let gap_fit = fit_decay(&gaps, opts.tol, opts.tail_len);
    let vertical_fit = fit_decay(&verticals, opts.tol, opts.tail_len);

    let rec = if !gap_fit.vanishes {
        CheckRecord::new("condition-c", CheckStatus::Vacuous, gap_fit.last)
            .with_note("hypothesis not met: gap does not tend to 0")
    } else {
        let st = CheckStatus::from_bool(vertical_fit.vanishes);
        let mut r = CheckRecord::new("condition-c", st, vertical_fit.last).with_note(format!(
            "gap decay exponent {:.3}, vertical decay exponent {:.3}",
            gap_fit.exponent, vertical_fit.exponent
        ));
        if st == CheckStatus::Fail {
            r = r.with_witness(Witness::new("x,z(eps_min)").point(x).point(&z(smallest)));
        }
        r
    };
    report.push(rec);
    ConditionC {
        trace,
        gap_fit,
        vertical_fit,
        report,
    }
}

/// `D id(x)(u) = lim Q^x_ε u`.
pub fn identity_derivative(
    p: &LookdownPair,
    x: &Point,
    u: &Point,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<Point> {
    estimate_limit(|e| q_eps(p, x, e, u), coord_metric, schedule, opts)
}

const COMMUTATION_SCALES: [f64; 4] = [0.1, 0.25, 0.5, 0.75];

/// Idempotence of `D id(x)` on `us`, and agreement of the two dilatations
/// on its image points.
pub fn check_projector(
    p: &LookdownPair,
    x: &Point,
    us: &[Point],
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Report {
    let rows: Vec<(LimitEstimate<Point>, Option<LimitEstimate<Point>>)> = us
        .par_iter()
        .map(|u| {
            let d = identity_derivative(p, x, u, schedule, opts);
            let dd = d
                .converged()
                .then(|| identity_derivative(p, x, &d.value, schedule, opts));
            (d, dd)
        })
        .collect();
    let mut conv = Worst::default();
    let mut idem = Worst::default();
    let mut comm = Worst::default();
    for (u, (d, dd)) in us.iter().zip(&rows) {
        conv.observe(d.residual, limit_status_check(d.status), || {
            Witness::new("x,u").point(x).point(u)
        });
        let Some(dd) = dd else {
            idem.observe(f64::INFINITY, CheckStatus::Inconclusive, || {
                Witness::new("x,u").point(x).point(u)
            });
            continue;
        };
        let (r, st) = if dd.converged() {
            let r = dd.value.coord_dist(&d.value);
            (r, CheckStatus::from_bool(r <= opts.tol))
        } else {
            (f64::INFINITY, limit_status_check(dd.status))
        };
        idem.observe(r, st, || Witness::new("x,u").point(x).point(u));
        for eps in COMMUTATION_SCALES {
            let e = Scale::of(eps);
            let r = p
                .upper
                .dilate(x, e, &d.value)
                .coord_dist(&p.lower.dilate(x, e, &d.value));
            comm.observe(r, CheckStatus::from_bool(r <= opts.tol), || {
                Witness::new("x,Did(u),eps").point(x).point(&d.value).scalar(eps)
            });
        }
    }
    let mut report = Report::new(format!("projector D id for {} at {x}", p.name));
    report.push(conv.into_record("identity-derivative"));
    report.push(idem.into_record("idempotence"));
    report.push(comm.into_record("dilatation-commutation"));
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferOptions {
    pub samples: usize,
    pub seed: u64,
    pub schedule: EpsSchedule,
    pub limit: LimitOptions,
    /// Minimal fraction of sampled parameters at which each stage must pass.
    pub threshold: f64,
    /// Agreement required between the A-candidate and the B-derivative.
    pub match_tol: f64,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            samples: 100,
            seed: 0,
            schedule: EpsSchedule::default(),
            limit: LimitOptions::default(),
            threshold: 0.97,
            match_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferSample {
    pub t: f64,
    pub b_derivable: bool,
    pub gap_vanishes: bool,
    pub vertical_vanishes: bool,
    pub a_derivable: bool,
    /// Coordinate distance between the A-candidate and the B-derivative.
    pub mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferProbe {
    pub curve: String,
    pub length_a: f64,
    pub length_b: f64,
    pub samples: Vec<TransferSample>,
    /// Fraction of samples where the A-derivative matches the B-derivative.
    pub agreement: f64,
    pub report: Report,
}

const LIPSCHITZ_PROBES: usize = 33;

/// Runs the derivability transfer pipeline on `c` at seeded parameters:
/// B-derivability, vanishing of the length gap, vanishing of the vertical
/// part, and A-derivability with the A-candidate compared to the
/// B-derivative.
pub fn transfer_probe(p: &LookdownPair, c: &Curve, opts: &TransferOptions) -> Result<TransferProbe> {
    if opts.samples == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    opts.schedule.validate()?;
    let (a, b) = (p.upper.as_ref(), p.lower.as_ref());
    let window = DEFAULT_WINDOW * c.span();
    for i in 0..LIPSCHITZ_PROBES {
        let t = c.a + c.span() * (i as f64 + 0.5) / LIPSCHITZ_PROBES as f64;
        if !upper_dilatation(c, t, a, window).is_finite() {
            return Err(Error::NotLipschitz { t });
        }
    }
    let arc = reparametrize_arclength(c, a)?;
    let var_a = variation(c, a, &Default::default()).value;
    let var_b = variation(c, b, &Default::default()).value;

    let mut rng = Sampler::new(opts.seed);
    let ts: Vec<f64> = (0..opts.samples).map(|_| rng.uniform(arc.a, arc.b)).collect();
    let (sched, lim) = (&opts.schedule, &opts.limit);
    let samples: Vec<TransferSample> = ts
        .par_iter()
        .map(|&t| {
            let x = arc.eval(t);
            let db = derivative_at(&arc, t, b, sched, lim);
            let forward = sched.starting_below(arc.b - t);
            let (gap_vanishes, vertical_vanishes) = match forward {
                Some(fs) => {
                    let mut gaps = Vec::with_capacity(fs.steps);
                    let mut verticals = Vec::with_capacity(fs.steps);
                    for e in fs.points() {
                        let y = arc.eval(t + e.value());
                        let g = (a.distance(&y, &x) - b.distance(&y, &x)) / e.value();
                        gaps.push((e.value(), g.abs()));
                        let back = a.dilate(&x, e, &b.dilate(&x, e.inv(), &y));
                        verticals.push((e.value(), a.distance(&back, &y) / e.value()));
                    }
                    (
                        fit_decay(&gaps, lim.tol, lim.tail_len).vanishes,
                        fit_decay(&verticals, lim.tol, lim.tail_len).vanishes,
                    )
                }
                None => (false, false),
            };
            let da = derivative_at(&arc, t, a, sched, lim);
            let mismatch = if da.forward.converged() && db.forward.converged() {
                da.forward.value.coord_dist(&db.forward.value)
            } else {
                f64::INFINITY
            };
            TransferSample {
                t,
                b_derivable: db.derivable,
                gap_vanishes,
                vertical_vanishes,
                a_derivable: da.derivable,
                mismatch,
            }
        })
        .collect();

    let n = samples.len() as f64;
    let frac = |f: &dyn Fn(&TransferSample) -> bool| samples.iter().filter(|s| f(s)).count() as f64 / n;
    let first_fail = |f: &dyn Fn(&TransferSample) -> bool| samples.iter().find(|s| !f(s)).map(|s| s.t);
    let stage = |name: &str, f: &dyn Fn(&TransferSample) -> bool| {
        let fr = frac(f);
        let mut r = CheckRecord::new(name, CheckStatus::from_bool(fr >= opts.threshold), 1.0 - fr)
            .with_note(format!("{:.1}% of samples", 100.0 * fr));
        if let Some(t) = first_fail(f) {
            r = r.with_witness(Witness::new("t").scalar(t).point(&arc.eval(t)));
        }
        r
    };

    let mut report = Report::new(format!("transfer probe of {} for {}", c.name, p.name));
    let rel = (var_a - var_b).abs() / var_a.max(f64::MIN_POSITIVE);
    report.push(CheckRecord::threshold("equal-lengths", rel, 1e-6).with_note(format!("l_A = {var_a}, l_B = {var_b}")));
    report.push(stage("b-derivability", &|s| s.b_derivable));
    report.push(stage("length-gap", &|s| s.gap_vanishes));
    report.push(stage("vertical-part", &|s| s.vertical_vanishes));
    report.push(stage("a-derivability", &|s| {
        s.a_derivable && s.mismatch <= opts.match_tol
    }));
    let agreement = frac(&|s| s.mismatch <= opts.match_tol);
    Ok(TransferProbe {
        curve: c.name.clone(),
        length_a: var_a,
        length_b: var_b,
        samples,
        agreement,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookdownConfig {
    pub sampling: SampleConfig,
    pub schedule: EpsSchedule,
    pub limit: LimitOptions,
    /// Probe curves per sampled base point for condition (c).
    pub curves: usize,
}

impl Default for LookdownConfig {
    fn default() -> Self {
        LookdownConfig {
            sampling: SampleConfig {
                count: 20,
                radius: 0.5,
                seed: 0,
            },
            schedule: EpsSchedule::default(),
            limit: LimitOptions::default(),
            curves: 2,
        }
    }
}

const VERTICAL_PROBES: [f64; 4] = [0.01, 0.1, 0.5, 0.9];

/// Audits conditions (a), (b) and (c) on seeded samples.
///
/// (a) compares `d_B ≤ d_A` on random pairs in the coordinate ball plus
/// pairs along the last coordinate axis; (b) checks the projector at
/// sampled base points; (c) runs probe curves `z(ε) = D id(x)(u) + ε·w`,
/// skipping those whose gap does not vanish.
pub fn lookdown_audit(p: &LookdownPair, cfg: &LookdownConfig) -> Result<Report> {
    let s = &cfg.sampling;
    if s.count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    cfg.schedule.validate()?;
    let (sched, lim) = (&cfg.schedule, &cfg.limit);
    let mut rng = Sampler::new(s.seed);
    let origin = Point::zeros(p.dim());
    let mut pairs: Vec<(Point, Point)> = (0..s.count)
        .map(|_| {
            (
                rng.in_coord_ball(&origin, s.radius),
                rng.in_coord_ball(&origin, s.radius),
            )
        })
        .collect();
    let mut axis = origin.clone();
    let last = p.dim() - 1;
    for c in VERTICAL_PROBES {
        axis[last] = c * s.radius;
        pairs.push((origin.clone(), axis.clone()));
    }

    let mut a = Worst::default();
    for (x, y) in &pairs {
        let (da, db) = (p.upper.distance(x, y), p.lower.distance(x, y));
        let excess = if da > 0.0 {
            (db / da - 1.0).max(0.0)
        } else if db > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        a.observe(excess, CheckStatus::from_bool(db <= da * (1.0 + 1e-9)), || {
            Witness::new("x,y").point(x).point(y)
        });
    }
    let mut report = Report::new(format!("lookdown audit {}", p.name));
    report.push(a.into_record("a-lipschitz"));

    let bases: Vec<Point> = (0..s.count.min(10))
        .map(|_| rng.in_coord_ball(&origin, s.radius))
        .collect();
    let us: Vec<Vec<Point>> = bases
        .iter()
        .map(|x| (0..5).map(|_| rng.in_coord_ball(x, s.radius)).collect())
        .collect();
    let ws: Vec<Vec<(Point, Point)>> = bases
        .iter()
        .map(|x| {
            (0..cfg.curves)
                .map(|_| (rng.in_coord_ball(x, 0.5 * s.radius), rng.in_coord_ball(&origin, 0.5)))
                .collect()
        })
        .collect();

    let mut b_records: Vec<Worst> = vec![Worst::default(), Worst::default(), Worst::default()];
    let mut c_rec = Worst::default();
    let mut hypothesis_met = 0usize;
    for ((x, us), ws) in bases.iter().zip(&us).zip(&ws) {
        let proj = check_projector(p, x, us, sched, lim);
        for (w, rec) in b_records.iter_mut().zip(proj.records) {
            let wit = rec.witness.clone().unwrap_or_else(|| Witness::new("x").point(x));
            w.observe(rec.residual, rec.status, || wit);
        }
        for (u, dir) in ws {
            let d = identity_derivative(p, x, u, sched, lim);
            if !d.converged() {
                c_rec.observe(f64::INFINITY, CheckStatus::Inconclusive, || {
                    Witness::new("x,u").point(x).point(u)
                });
                continue;
            }
            let base = d.value.clone();
            let dir = dir.clone();
            let z = move |e: Scale| base.axpy(e.value(), &dir);
            let cc = check_condition_c(p, x, &z, sched, lim);
            let rec = cc.report.record("condition-c").expect("condition-c record").clone();
            if rec.status == CheckStatus::Vacuous {
                continue;
            }
            hypothesis_met += 1;
            let wit = rec
                .witness
                .clone()
                .unwrap_or_else(|| Witness::new("x,u").point(x).point(u));
            c_rec.observe(rec.residual, rec.status, || wit);
        }
    }
    for (name, w) in ["identity-derivative", "idempotence", "dilatation-commutation"]
        .iter()
        .zip(b_records)
    {
        report.push(w.into_record(format!("b-{name}")));
    }
    let probes: usize = ws.iter().map(Vec::len).sum();
    let mut c = c_rec.into_record("c-vertical-part").with_note(format!(
        "{hypothesis_met} of {probes} probe curves met the gap hypothesis"
    ));
    if hypothesis_met == 0 {
        c.status = c.status.worst(CheckStatus::Vacuous);
    }
    report.push(c);
    Ok(report)
}

/// Gauge-coordinate oracle for the condition (a) boundary of the Heisenberg
/// pair: `d_B ≤ d_A` at `x⁻¹y = (a, b, c)` iff `2(a² + b²) + c² ≤ 16`.
pub fn heisenberg_condition_a(x: &Point, y: &Point) -> bool {
    let q = left_quotient(x, y);
    2.0 * (q[0] * q[0] + q[1] * q[1]) + q[2] * q[2] <= 16.0
}

/// `x·(h₁, h₂, ε·k)`, the probe curve family approaching the horizontal
/// point `x·(h₁, h₂, 0)`.
pub fn heisenberg_probe_curve(x: &Point, h: (f64, f64), k: f64) -> impl Fn(Scale) -> Point + Sync {
    let x = x.clone();
    move |e| group_op(&x, &Point::from([h.0, h.1, e.value() * k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched() -> EpsSchedule {
        EpsSchedule::default()
    }
    fn opts() -> LimitOptions {
        LimitOptions::default()
    }

    #[test]
    fn q_eps_closed_form() {
        let p = LookdownPair::heisenberg_euclidean();
        let z = Point::from([0.3, -0.7, 0.9]);
        let o = Point::zeros(3);
        for eps in [0.5, 0.1, 1e-3] {
            let q = q_eps(&p, &o, Scale::of(eps), &z);
            assert!(q.coord_dist(&Point::from([0.3, -0.7, eps * 0.9])) < 1e-14);
        }
        let h = Point::from([0.3, -0.7, 0.0]);
        assert_eq!(q_eps(&p, &o, Scale::of(0.125), &h), h);
        assert_eq!(q_eps(&p, &o, Scale::ONE, &z), z);
    }

    #[test]
    fn gaps() {
        let p = LookdownPair::heisenberg_euclidean();
        let o = Point::zeros(3);
        let e = Scale::of(0.01);
        let g = distribution_gap(&p, &o, e, &Point::from([1.0, 0.0, 0.0]), 2.0, &sched(), &opts()).unwrap();
        assert_eq!(g, 0.0);
        let g = distribution_gap(&p, &o, e, &Point::from([1.0, 0.0, 0.5]), 2.0, &sched(), &opts()).unwrap();
        let oracle = 5f64.powf(0.25) - (1.0f64 + 1e-4 * 0.25).sqrt();
        assert!((g - oracle).abs() < 1e-9, "{g} {oracle}");
        assert!(matches!(
            distribution_gap(&p, &o, e, &Point::from([1.0, 0.0, 1.0]), 2.0, &sched(), &opts()),
            Err(Error::Precondition(_))
        ));
        let g = distribution_gap(&p, &o, e, &Point::from([1.0, 0.0, 1.0]), 2.5, &sched(), &opts()).unwrap();
        assert!((g - (17f64.powf(0.25) - (1.0f64 + 1e-4).sqrt())).abs() < 1e-9);
        assert_eq!(distribution_gap(&p, &o, e, &o, 2.0, &sched(), &opts()).unwrap(), 0.0);
    }

    #[test]
    fn gap_vanishes_on_fixed_points() {
        let p = LookdownPair::heisenberg_euclidean();
        let mut rng = Sampler::new(11);
        let o = Point::zeros(3);
        for _ in 0..20 {
            let x = rng.in_coord_ball(&o, 0.5);
            let u = heisenberg_identity_derivative(&x, &rng.in_coord_ball(&x, 0.5));
            for eps in [0.5, 0.1, 1e-3] {
                let e = Scale::of(eps);
                let g = distribution_gap(&p, &x, e, &u, 2.0, &sched(), &opts()).unwrap();
                assert!(g.abs() < 1e-10, "{x} {u} {eps}: {g}");
                assert!(p.upper.dilate(&x, e, &u).coord_dist(&p.lower.dilate(&x, e, &u)) < 1e-14);
            }
        }
    }

    #[test]
    fn condition_c_examples() {
        let p = LookdownPair::heisenberg_euclidean();
        let o = Point::zeros(3);
        let cc = check_condition_c(
            &p,
            &o,
            &|e: Scale| Point::from([1.0, 0.0, e.value()]),
            &sched(),
            &opts(),
        );
        assert_eq!(
            cc.report.record("condition-c").unwrap().status,
            CheckStatus::Pass,
            "{:?}",
            cc.report
        );
        for &(e, _, v) in cc.trace.iter().take(10) {
            assert!((v - 2.0 * (e * (1.0 - e)).sqrt()).abs() < 1e-9, "{e} {v}");
        }
        assert!((cc.vertical_fit.exponent - 0.5).abs() < 0.05);
        let flat = check_condition_c(&p, &o, &|_| Point::from([1.0, 0.0, 0.0]), &sched(), &opts());
        assert!(flat.trace.iter().all(|t| t.1 == 0.0 && t.2 == 0.0));
        let far = check_condition_c(&p, &o, &|_| Point::from([1.0, 0.0, 1.0]), &sched(), &opts());
        assert_eq!(far.report.record("condition-c").unwrap().status, CheckStatus::Vacuous);
    }

    #[test]
    fn identity_derivative_matches_closed_form() {
        let p = LookdownPair::heisenberg_euclidean();
        let x = Point::from([0.2, -0.3, 0.1]);
        let u = Point::from([0.5, 0.1, -0.2]);
        let d = identity_derivative(&p, &x, &u, &sched(), &opts());
        assert!(d.converged());
        assert!(d.value.coord_dist(&heisenberg_identity_derivative(&x, &u)) < 1e-9);
        let o = Point::zeros(3);
        let d = identity_derivative(&p, &o, &Point::from([0.4, 0.5, 0.6]), &sched(), &opts());
        assert!(d.value.coord_dist(&Point::from([0.4, 0.5, 0.0])) < 1e-12);
        assert_eq!(identity_derivative(&p, &x, &x, &sched(), &opts()).value, x);
    }

    #[test]
    fn projector() {
        let p = LookdownPair::heisenberg_euclidean();
        let x = Point::from([0.2, -0.3, 0.1]);
        let us = vec![Point::from([0.5, 0.1, -0.2]), Point::from([0.0, 0.3, 0.4]), x.clone()];
        let r = check_projector(&p, &x, &us, &sched(), &opts());
        assert!(r.passed(), "{r:?}");
        assert!(r.record("idempotence").unwrap().residual < 1e-9);
    }

    #[test]
    fn transfer_on_horizontal_line() {
        let p = LookdownPair::heisenberg_euclidean();
        let opts = TransferOptions {
            samples: 20,
            ..Default::default()
        };
        let t = transfer_probe(&p, &Curve::heisenberg_line(), &opts).unwrap();
        assert!(t.report.passed(), "{:?}", t.report);
        assert_eq!(t.agreement, 1.0);
        assert!(matches!(
            transfer_probe(&p, &Curve::vertical_segment(), &opts),
            Err(Error::NotLipschitz { .. })
        ));
    }

    #[test]
    fn audits() {
        let cfg = LookdownConfig::default();
        let r = lookdown_audit(&LookdownPair::heisenberg_euclidean(), &cfg).unwrap();
        assert!(r.passed(), "{r:#?}");
        let r = lookdown_audit(&make_pair("euclidean-euclidean").unwrap(), &cfg).unwrap();
        assert!(r.passed(), "{r:#?}");
        let r = lookdown_audit(&make_pair("euclidean-heisenberg").unwrap(), &cfg).unwrap();
        let a = r.record("a-lipschitz").unwrap();
        assert_eq!(a.status, CheckStatus::Fail);
        let w = &a.witness.as_ref().unwrap().points;
        assert_eq!(w[0], vec![0.0; 3]);
        assert!(w[1][0] == 0.0 && w[1][1] == 0.0 && w[1][2].abs() < 1.0);
    }

    #[test]
    fn condition_a_oracle() {
        let p = LookdownPair::heisenberg_euclidean();
        let mut rng = Sampler::new(4);
        let o = Point::zeros(3);
        for _ in 0..500 {
            let x = rng.in_coord_ball(&o, 3.0);
            let y = rng.in_coord_ball(&o, 3.0);
            let holds = p.lower.distance(&x, &y) <= p.upper.distance(&x, &y) * (1.0 + 1e-12);
            let margin = {
                let q = left_quotient(&x, &y);
                (2.0 * (q[0] * q[0] + q[1] * q[1]) + q[2] * q[2] - 16.0).abs()
            };
            if margin > 1e-6 {
                assert_eq!(holds, heisenberg_condition_a(&x, &y));
            }
        }
    }
}
