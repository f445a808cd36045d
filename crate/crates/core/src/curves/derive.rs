use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::length::{reparametrize_arclength, simpson, variation, VariationOptions};
use super::Curve;
use crate::dilatation::{DilatationStructure, Scale};
use crate::error::{Error, Result};
use crate::limits::{estimate_limit, EpsSchedule, LimitEstimate, LimitOptions, LimitStatus};
use crate::point::Point;
use crate::report::{CheckRecord, CheckStatus, Report, Witness, Worst};
use crate::sampling::Sampler;
use crate::tangent::{abs_metric, coord_metric, tangent_distance, tangent_inv};

fn unavailable<V: Clone>(value: V) -> LimitEstimate<V> {
    LimitEstimate {
        samples: Vec::new(),
        value,
        status: LimitStatus::Inconclusive,
        residual: f64::INFINITY,
        tail_diameter: f64::INFINITY,
        refinements: 0,
        witness_eps: None,
    }
}

fn one_sided_quotient(
    c: &Curve,
    t: f64,
    s: &dyn DilatationStructure,
    sign: f64,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Option<LimitEstimate<f64>> {
    let room = if sign > 0.0 { c.b - t } else { t - c.a };
    let sched = schedule.starting_below(room)?;
    let x = c.eval(t);
    Some(estimate_limit(
        |e| s.distance(&x, &c.eval(t + sign * e.value())) / e.value(),
        abs_metric,
        &sched,
        opts,
    ))
}

/// Metric derivative `lim d(c(t+h), c(t))/|h|`, from both sides where the
/// interval allows. Sides that converge to different values make the result
/// inconclusive.
pub fn metric_derivative(
    c: &Curve,
    t: f64,
    s: &dyn DilatationStructure,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<f64> {
    let fwd = one_sided_quotient(c, t, s, 1.0, schedule, opts);
    let bwd = one_sided_quotient(c, t, s, -1.0, schedule, opts);
    match (fwd, bwd) {
        (Some(mut f), Some(b)) => {
            if f.converged() && b.converged() {
                let gap = (f.value - b.value).abs();
                if gap > opts.tol * f.value.abs().max(1.0) {
                    f.status = LimitStatus::Inconclusive;
                    f.residual = f.residual.max(gap);
                }
            } else if !f.converged() {
                return f;
            } else {
                return b;
            }
            f
        }
        (Some(f), None) => f,
        (None, Some(b)) => b,
        (None, None) => unavailable(0.0),
    }
}

/// Outcome of a two-sided derivability probe at `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivabilityResult {
    pub t: f64,
    /// Limit of `δ^{c(t)}_{1/ε} c(t+ε)`: the candidate `ċ(t)`.
    pub forward: LimitEstimate<Point>,
    /// Limit of `δ^{c(t)}_{1/ε} c(t−ε)`, expected to be `inv^{c(t)}(ċ(t))`.
    pub backward: LimitEstimate<Point>,
    pub derivable: bool,
    /// Distance between the backward candidate and `inv^{c(t)}(ċ(t))`.
    pub mismatch: f64,
}

impl DerivabilityResult {
    /// The estimate with the least favourable status.
    pub fn status(&self) -> LimitStatus {
        use LimitStatus::*;
        let rank = |s: LimitStatus| match s {
            Converged => 0,
            Inconclusive => 1,
            Oscillating => 2,
            Diverging => 3,
        };
        if rank(self.forward.status) >= rank(self.backward.status) {
            self.forward.status
        } else {
            self.backward.status
        }
    }
}

fn candidate(
    c: &Curve,
    t: f64,
    s: &dyn DilatationStructure,
    sign: f64,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> LimitEstimate<Point> {
    let x = c.eval(t);
    let room = if sign > 0.0 { c.b - t } else { t - c.a };
    match schedule.starting_below(room) {
        Some(sched) => estimate_limit(
            |e| s.dilate(&x, e.inv(), &c.eval(t + sign * e.value())),
            coord_metric,
            &sched,
            opts,
        ),
        None => unavailable(x),
    }
}

/// Tests whether `c` is derivable at `t` in the dilatation sense.
pub fn derivative_at(
    c: &Curve,
    t: f64,
    s: &dyn DilatationStructure,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> DerivabilityResult {
    let forward = candidate(c, t, s, 1.0, schedule, opts);
    let backward = candidate(c, t, s, -1.0, schedule, opts);
    let mut mismatch = f64::INFINITY;
    if forward.converged() && backward.converged() {
        let x = c.eval(t);
        let inv = tangent_inv(s, &x, &forward.value, schedule, opts);
        if inv.converged() {
            mismatch = inv.value.coord_dist(&backward.value);
        }
    }
    let scale = forward.value.norm().max(1.0);
    DerivabilityResult {
        t,
        derivable: mismatch <= 10.0 * opts.tol * scale,
        forward,
        backward,
        mismatch,
    }
}

/// Checks `lim δ^{c(t)}_{1/ε} c(t+aε) = δ^{c(t)}_{|a|} ċ(t)` for
/// `a ∈ {1, 0.5}`, and the same with `inv^{c(t)}(ċ(t))` for negative `a`.
pub fn derivative_scaling(
    c: &Curve,
    t: f64,
    s: &dyn DilatationStructure,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Report {
    let mut report = Report::new(format!("derivative scaling of {} at t = {t}", c.name));
    let x = c.eval(t);
    let d = derivative_at(c, t, s, schedule, opts);
    if !d.forward.converged() {
        report.push(
            CheckRecord::new("scaling", CheckStatus::Inconclusive, f64::INFINITY)
                .with_note(format!("no derivative candidate: forward limit {}", d.forward.status)),
        );
        return report;
    }
    let inv = tangent_inv(s, &x, &d.forward.value, schedule, opts);
    let mut worst = Worst::default();
    for a in [1.0f64, -1.0, 0.5, -0.5] {
        let room = if a > 0.0 { c.b - t } else { t - c.a };
        let Some(sched) = schedule.starting_below(room / a.abs()) else {
            worst.observe(f64::INFINITY, CheckStatus::Inconclusive, || Witness::new("a").scalar(a));
            continue;
        };
        let lhs = estimate_limit(
            |e| s.dilate(&x, e.inv(), &c.eval(t + a * e.value())),
            coord_metric,
            &sched,
            opts,
        );
        let base = if a > 0.0 { &d.forward } else { &inv };
        let rhs = s.dilate(&x, Scale::of(a.abs()), &base.value);
        let (residual, status) = if lhs.converged() && base.converged() {
            let r = lhs.value.coord_dist(&rhs);
            (r, CheckStatus::from_bool(r <= 10.0 * opts.tol * rhs.norm().max(1.0)))
        } else {
            (f64::INFINITY, CheckStatus::Inconclusive)
        };
        worst.observe(residual, status, || {
            Witness::new("a").scalar(a).point(&lhs.value).point(&rhs)
        });
    }
    report.push(worst.into_record("scaling"));
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RnOptions {
    pub samples: usize,
    pub seed: u64,
    pub schedule: EpsSchedule,
    pub limit: LimitOptions,
    /// Minimal derivable fraction for the probe to pass.
    pub threshold: f64,
}

impl Default for RnOptions {
    fn default() -> Self {
        RnOptions {
            samples: 100,
            seed: 0,
            schedule: EpsSchedule::default(),
            limit: LimitOptions::default(),
            threshold: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnProbe {
    pub curve: String,
    pub length: f64,
    pub samples: usize,
    pub derivable: usize,
    pub fraction: f64,
    pub oscillating: usize,
    pub diverging: usize,
    pub inconclusive: usize,
    /// Arc-length parameters at which derivability failed.
    pub failures: Vec<f64>,
    pub report: Report,
}

/// Radon–Nikodym probe: reparametrizes `c` by arc length and tests
/// derivability at seeded parameters.
pub fn rn_probe(s: &dyn DilatationStructure, c: &Curve, opts: &RnOptions) -> Result<RnProbe> {
    if opts.samples == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    opts.schedule.validate()?;
    let arc = reparametrize_arclength(c, s)?;
    let mut rng = Sampler::new(opts.seed);
    let ts: Vec<f64> = (0..opts.samples).map(|_| rng.uniform(arc.a, arc.b)).collect();
    let results: Vec<DerivabilityResult> = ts
        .par_iter()
        .map(|&t| derivative_at(&arc, t, s, &opts.schedule, &opts.limit))
        .collect();

    let mut probe = RnProbe {
        curve: c.name.clone(),
        length: arc.b,
        samples: opts.samples,
        derivable: 0,
        fraction: 0.0,
        oscillating: 0,
        diverging: 0,
        inconclusive: 0,
        failures: Vec::new(),
        report: Report::new(format!("Radon-Nikodym probe of {} in {}", c.name, s.name())),
    };
    for r in &results {
        if r.derivable {
            probe.derivable += 1;
            continue;
        }
        probe.failures.push(r.t);
        match r.status() {
            LimitStatus::Oscillating => probe.oscillating += 1,
            LimitStatus::Diverging => probe.diverging += 1,
            _ => probe.inconclusive += 1,
        }
    }
    probe.fraction = probe.derivable as f64 / opts.samples as f64;
    let mut record = CheckRecord::new(
        "derivable-fraction",
        CheckStatus::from_bool(probe.fraction >= opts.threshold),
        1.0 - probe.fraction,
    )
    .with_note(format!(
        "{} of {} derivable; {} oscillating, {} diverging, {} inconclusive",
        probe.derivable, opts.samples, probe.oscillating, probe.diverging, probe.inconclusive
    ));
    if let Some(&t) = probe.failures.first() {
        record = record.with_witness(Witness::new("t").scalar(t).point(&arc.eval(t)));
    }
    probe.report.push(record);
    Ok(probe)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthFormula {
    /// Length as variation.
    pub lhs: f64,
    /// `∫ d^{c(t)}(c(t), ċ(t)) dt`.
    pub rhs: f64,
    pub rel_err: f64,
    pub derivable_fraction: f64,
}

impl LengthFormula {
    pub fn report(&self, tol: f64) -> Report {
        let mut r = Report::new("length formula");
        r.push(
            CheckRecord::threshold("length-formula", self.rel_err, tol)
                .with_note(format!("variation {} vs integral {}", self.lhs, self.rhs)),
        );
        r
    }
}

const MIN_DERIVABLE_NODES: f64 = 0.95;

/// Compares the variation of `c` with the integral of the tangent norm of
/// its derivative over Simpson nodes. Refuses when fewer than 95% of the
/// nodes are derivable.
pub fn length_formula_check(
    s: &dyn DilatationStructure,
    c: &Curve,
    intervals: usize,
    schedule: &EpsSchedule,
    opts: &LimitOptions,
) -> Result<LengthFormula> {
    schedule.validate()?;
    let lhs = variation(c, s, &VariationOptions::default()).value;
    let nodes = simpson(c.a, c.b, intervals, |t| {
        let x = c.eval(t);
        let d = derivative_at(c, t, s, schedule, opts);
        let endpoint = t <= c.a || t >= c.b;
        let dir = if d.forward.converged() {
            Some(&d.forward)
        } else if endpoint && d.backward.converged() {
            Some(&d.backward)
        } else {
            None
        };
        let ok = d.derivable || (endpoint && dir.is_some());
        let value = match (ok, dir) {
            (true, Some(dir)) => tangent_distance(s, &x, &x, &dir.value, schedule, opts).value,
            _ => metric_derivative(c, t, s, schedule, opts).value,
        };
        if ok {
            value
        } else {
            -1.0 - value
        }
    });
    let good = nodes.iter().filter(|n| n.2 >= 0.0).count();
    let fraction = good as f64 / nodes.len() as f64;
    if fraction < MIN_DERIVABLE_NODES {
        let first_bad = nodes.iter().find(|n| n.2 < 0.0).map(|n| n.0).unwrap_or(c.a);
        return Err(Error::Precondition(format!(
            "{} is derivable at only {:.1}% of quadrature nodes (first failure at t = {first_bad})",
            c.name,
            100.0 * fraction
        )));
    }
    let rhs: f64 = nodes
        .iter()
        .map(|&(_, w, v)| w * if v >= 0.0 { v } else { -1.0 - v })
        .sum();
    let rel_err = (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE);
    Ok(LengthFormula {
        lhs,
        rhs,
        rel_err: if lhs == 0.0 && rhs == 0.0 { 0.0 } else { rel_err },
        derivable_fraction: fraction,
    })
}
