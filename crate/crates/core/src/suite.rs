//! The full check battery and the run report emitted by the runner.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{chain_rule_check, equivalence_check, survey_derivative, tangent_iso_check, StructureMap};
use crate::config::ExperimentConfig;
use crate::curves::{
    hausdorff_length_estimate, length_formula_check, length_via_dilatation, rn_probe, variation, Curve, RnOptions,
    VariationOptions, DEFAULT_QUAD_INTERVALS,
};
use crate::dilatation::{audit_axioms, AuditConfig, DilatationStructure, Scale, SharedStructure};
use crate::error::Result;
use crate::limits::{EpsSchedule, LimitOptions, LimitStatus};
use crate::lookdown::{
    check_condition_c, check_projector, heisenberg_identity_derivative, identity_derivative, lookdown_audit, make_pair,
    transfer_probe, LookdownConfig, LookdownPair, TransferOptions,
};
use crate::point::Point;
use crate::report::{CheckRecord, CheckStatus, Report, Witness, Worst};
use crate::sampling::{SampleConfig, Sampler};
use crate::structures::{
    group_inv, group_op, left_quotient, make_structure, Contracting, Euclidean, Heisenberg, Rotating,
};
use crate::tangent::{
    check_cone_property, check_metric_tangent, delta_op, membership_pairs, one_param_membership, tangent_distance,
    tangent_sum, TangentSpace,
};

/// Runner output: the configuration, one record per check, and timing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub status: CheckStatus,
    pub records: Vec<CheckRecord>,
    /// Excluded from the determinism contract.
    pub wall_clock_secs: f64,
}

impl RunReport {
    pub fn new(command: impl Into<String>, config: ExperimentConfig) -> Self {
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            config,
            status: CheckStatus::Pass,
            records: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    /// Appends the records of `r`, prefixing each name with `prefix/` when
    /// `prefix` is non-empty.
    pub fn absorb(&mut self, prefix: &str, r: Report) {
        for mut rec in r.records {
            if !prefix.is_empty() {
                rec.name = format!("{prefix}/{}", rec.name);
            }
            self.status = self.status.worst(rec.status);
            self.records.push(rec);
        }
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.status.is_ok())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the wall-clock field zeroed, for reproducibility checks.
    pub fn to_canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_secs = 0.0;
        r.to_json()
    }
}

/// One entry of the battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub report: Report,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "axiom-audit"),
    (2, "euclidean-tangent"),
    (3, "heisenberg-tangent"),
    (4, "curve-calculus"),
    (5, "length-formula"),
    (6, "radon-nikodym"),
    (7, "pansu-rotating"),
    (8, "equivalence"),
    (9, "chain-rule"),
    (10, "lookdown-pair"),
    (11, "transfer"),
    (12, "determinism"),
];

fn sched() -> EpsSchedule {
    EpsSchedule::default()
}

fn lim() -> LimitOptions {
    LimitOptions::default()
}

fn from_result(name: &str, r: Result<Report>) -> Report {
    r.unwrap_or_else(|e| {
        let mut rep = Report::new(name);
        rep.push(CheckRecord::new(name, CheckStatus::Fail, f64::INFINITY).with_note(e.to_string()));
        rep
    })
}

fn bool_record(name: &str, ok: bool, residual: f64, note: String) -> CheckRecord {
    CheckRecord::new(name, CheckStatus::from_bool(ok), residual).with_note(note)
}

/// Axiom audits of the shipped structures and the degenerate fixture.
pub fn axiom_audit(seed: u64) -> Report {
    let cfg = AuditConfig {
        seed,
        ..AuditConfig::default()
    };
    let mut out = Report::new("axiom audit");
    for name in ["euclidean:2", "euclidean:3", "rotating:0", "rotating:0.5", "heisenberg"] {
        let s = make_structure(name).expect("registered structure");
        match audit_axioms(s.as_ref(), &cfg) {
            Ok(a) => {
                for mut rec in a.report.records {
                    rec.name = format!("{name}/{}", rec.name);
                    out.push(rec);
                }
            }
            Err(e) => out.push(CheckRecord::new(name, CheckStatus::Fail, f64::INFINITY).with_note(e.to_string())),
        }
    }
    let broken = audit_axioms(&Contracting::new(2), &cfg);
    let st = broken.as_ref().ok().and_then(|a| a.status("A3"));
    out.push(bool_record(
        "broken/A3-degenerate",
        st == Some(CheckStatus::Degenerate),
        0.0,
        format!("A3 status {}", st.map_or("error".to_string(), |s| s.to_string())),
    ));
    out
}

/// Smallest schedule scale at which `Δ^x_ε` keeps 1e-12 agreement in double
/// precision for unit-size inputs.
pub const EXACT_DELTA_MIN_EPS: f64 = 1e-4;

pub fn euclidean_tangent(seed: u64) -> Report {
    let e = Euclidean::new(2);
    let mut rng = Sampler::new(seed);
    let o = Point::zeros(2);
    let triples: Vec<(Point, Point, Point)> = (0..50)
        .map(|_| {
            (
                rng.in_coord_ball(&o, 1.0),
                rng.in_coord_ball(&o, 1.0),
                rng.in_coord_ball(&o, 1.0),
            )
        })
        .collect();
    let (mut delta, mut sum, mut dist) = (Worst::default(), Worst::default(), Worst::default());
    for (x, u, v) in &triples {
        for eps in sched()
            .points()
            .into_iter()
            .filter(|e| e.value() >= EXACT_DELTA_MIN_EPS)
        {
            let got = delta_op(&e, x, eps, u, v);
            let want = x.axpy(eps.value(), &u.sub(x)).add(&v.sub(u));
            let r = got.coord_dist(&want);
            delta.observe(r, CheckStatus::from_bool(r <= 1e-12), || {
                Witness::new("x,u,v,eps").point(x).point(u).point(v).scalar(eps.value())
            });
        }
        let s = tangent_sum(&e, x, u, v, &sched(), &lim());
        let r = s.value.coord_dist(&x.add(&v.sub(u)));
        let st = CheckStatus::from_bool(s.converged() && r <= 1e-9);
        sum.observe(r, st, || Witness::new("x,u,v").point(x).point(u).point(v));
        let d = tangent_distance(&e, x, u, v, &sched(), &lim());
        let r = (d.value - e.distance(u, v)).abs();
        dist.observe(r, CheckStatus::from_bool(r <= 1e-15), || {
            Witness::new("x,u,v").point(x).point(u).point(v)
        });
    }
    let mut out = Report::new("euclidean tangent operations");
    out.push(delta.into_record("delta-closed-form"));
    out.push(sum.into_record("sum-limit"));
    out.push(dist.into_record("tangent-distance"));
    out
}

pub fn heisenberg_tangent(seed: u64) -> Report {
    let h = Heisenberg;
    let mut rng = Sampler::new(seed);
    let o = Point::zeros(3);
    let mut sum = Worst::default();
    for _ in 0..100 {
        let (x, u, v) = (
            rng.in_coord_ball(&o, 1.0),
            rng.in_coord_ball(&o, 1.0),
            rng.in_coord_ball(&o, 1.0),
        );
        let s = tangent_sum(&h, &x, &u, &v, &sched(), &lim());
        let want = group_op(&group_op(&x, &group_inv(&u)), &v);
        let r = s.value.coord_dist(&want);
        sum.observe(r, CheckStatus::from_bool(s.converged() && r <= 1e-6), || {
            Witness::new("x,u,v").point(&x).point(&u).point(&v)
        });
    }

    let mut cone = Worst::default();
    for _ in 0..10 {
        let x = rng.in_coord_ball(&o, 1.0);
        let ts = TangentSpace::new(&h, x.clone(), sched(), lim());
        let (u, v) = (rng.in_coord_ball(&x, 1.0), rng.in_coord_ball(&x, 1.0));
        let r = check_cone_property(&ts, &u, &v, &[0.1, 0.5, 2.0]).worst_residual();
        cone.observe(r, CheckStatus::from_bool(r <= 1e-12), || {
            Witness::new("x,u,v").point(&x).point(&u).point(&v)
        });
    }
    // Left translations are isometries, so the origin stands for every base
    // point; elsewhere the ε-ball coordinates cancel against x.
    let mt = check_metric_tangent(&h, &o, &sched(), &lim(), 8, seed);
    let sup = mt.trace.iter().fold(0.0f64, |m, t| m.max(t.1));

    let mut members = Worst::default();
    for i in 0..100 {
        let x = rng.in_coord_ball(&o, 1.0);
        let mut q = rng.in_coord_ball(&o, 1.0);
        if i % 2 == 0 {
            q[2] = 0.0;
        }
        let u = group_op(&x, &q);
        let truth = left_quotient(&x, &u)[2].abs() <= 1e-12;
        let ts = TangentSpace::new(&h, x.clone(), sched(), lim());
        let got = one_param_membership(&ts, &u, &membership_pairs(), 1e-8).passed();
        members.observe(0.0, CheckStatus::from_bool(got == truth), || {
            Witness::new("x,u").point(&x).point(&u)
        });
    }

    let mut out = Report::new("heisenberg tangent operations");
    out.push(sum.into_record("sum-closed-form"));
    out.push(cone.into_record("cone"));
    out.push(CheckRecord::threshold("metric-tangent-sup", sup, 1e-12));
    out.push(members.into_record("membership-classifier"));
    out
}

fn lipschitz_fixtures() -> Vec<(Curve, SharedStructure)> {
    let e2: SharedStructure = Arc::new(Euclidean::new(2));
    let e3: SharedStructure = Arc::new(Euclidean::new(3));
    let h: SharedStructure = Arc::new(Heisenberg);
    vec![
        (Curve::segment(Point::from([3.0, -4.0])), e2.clone()),
        (Curve::corner(), e2.clone()),
        (Curve::circle(1.0, 1.0), e2.clone()),
        (Curve::staircase_polyline(), e2),
        (Curve::heisenberg_line(), h.clone()),
        (Curve::heisenberg_circle_lift(), h),
        (Curve::segment(Point::from([1.0, 2.0, 2.0])), e3),
    ]
}

pub fn curve_calculus(_seed: u64) -> Report {
    let e = Euclidean::new(2);
    let vopts = VariationOptions::default();
    let mut out = Report::new("curve calculus");
    let sign = variation(&Curve::sign(), &e, &vopts);
    out.push(CheckRecord::threshold("sign-variation", (sign.value - 4.0).abs(), 1e-5));
    match hausdorff_length_estimate(&Curve::sign(), &e, 1e-3) {
        Ok(l) => out.push(CheckRecord::threshold("sign-path-length", (l - 2.0).abs(), 1e-2)),
        Err(err) => {
            out.push(CheckRecord::new("sign-path-length", CheckStatus::Fail, f64::INFINITY).with_note(err.to_string()))
        }
    }
    let cantor = variation(&Curve::cantor(12), &crate::structures::Euclidean::new(1), &vopts);
    out.push(bool_record(
        "cantor-variation",
        (0.999..=1.0).contains(&cantor.value),
        (cantor.value - 1.0).abs(),
        format!("Var = {}", cantor.value),
    ));
    let graph = variation(&Curve::cantor_graph(12), &e, &vopts);
    out.push(
        CheckRecord::threshold("cantor-graph-length", (graph.value - 2.0).abs(), 5e-3)
            .with_note(format!("length = {}", graph.value)),
    );
    let mut lv = Worst::default();
    for (c, s) in lipschitz_fixtures() {
        let var = variation(&c, s.as_ref(), &vopts).value;
        let (r, st) = match length_via_dilatation(&c, s.as_ref(), DEFAULT_QUAD_INTERVALS) {
            Ok(l) => {
                let r = (l - var).abs() / var;
                (r, CheckStatus::from_bool(r <= 1e-3))
            }
            Err(_) => (f64::INFINITY, CheckStatus::Fail),
        };
        lv.observe(r, st, || Witness::new(format!("{} in {}", c.name, s.name())));
    }
    out.push(lv.into_record("length-equals-variation"));
    out
}

pub fn length_formula(_seed: u64) -> Report {
    let mut out = Report::new("length formula");
    let cases: [(Curve, SharedStructure, f64, &str); 2] = [
        (Curve::circle(1.0, 1.0), Arc::new(Euclidean::new(2)), 1e-4, "circle"),
        (
            Curve::heisenberg_circle_lift(),
            Arc::new(Heisenberg),
            1e-3,
            "circle-lift",
        ),
    ];
    for (c, s, tol, name) in cases {
        match length_formula_check(s.as_ref(), &c, DEFAULT_QUAD_INTERVALS, &sched(), &lim()) {
            Ok(f) => {
                out.push(CheckRecord::threshold(name, f.rel_err, tol).with_note(format!("lhs {} rhs {}", f.lhs, f.rhs)))
            }
            Err(e) => out.push(CheckRecord::new(name, CheckStatus::Fail, f64::INFINITY).with_note(e.to_string())),
        }
    }
    out
}

pub fn radon_nikodym(seed: u64) -> Report {
    let opts = RnOptions {
        seed,
        ..RnOptions::default()
    };
    let mut out = Report::new("radon-nikodym contrast");
    match rn_probe(&Euclidean::new(2), &Curve::staircase_polyline(), &opts) {
        Ok(p) => out.push(bool_record(
            "polyline-derivable",
            p.fraction >= 0.97,
            1.0 - p.fraction,
            format!("fraction {}", p.fraction),
        )),
        Err(e) => {
            out.push(CheckRecord::new("polyline-derivable", CheckStatus::Fail, f64::INFINITY).with_note(e.to_string()))
        }
    }
    let seg = Curve::segment(Point::from([1.0, 0.0]));
    match rn_probe(&Rotating::new(0.5), &seg, &opts) {
        Ok(p) => {
            let failures = p.samples - p.derivable;
            let ok = p.fraction <= 0.05 && failures > 0 && p.oscillating * 2 > failures;
            let mut rec = bool_record(
                "rotating-segment-not-derivable",
                ok,
                p.fraction,
                format!(
                    "fraction {}, oscillating {} of {}",
                    p.fraction, p.oscillating, p.samples
                ),
            );
            if let Some(&t) = p.failures.first() {
                rec = rec.with_witness(Witness::new("t").scalar(t));
            }
            out.push(rec)
        }
        Err(e) => out.push(
            CheckRecord::new("rotating-segment-not-derivable", CheckStatus::Fail, f64::INFINITY)
                .with_note(e.to_string()),
        ),
    }
    out
}

pub fn pansu_rotating(seed: u64) -> Report {
    let s: SharedStructure = Arc::new(Rotating::new(0.5));
    let cfg = SampleConfig {
        count: 20,
        radius: 0.5,
        seed,
    };
    let mut out = Report::new("pansu derivatives on rotating:0.5");
    let sq = StructureMap::square(s.clone()).expect("plane structure");
    match survey_derivative(&sq, &cfg, &sched(), &lim()) {
        Ok(sv) => {
            for mut rec in sv.report.records {
                rec.name = format!("square/{}", rec.name);
                out.push(rec);
            }
        }
        Err(e) => out.push(CheckRecord::new("square", CheckStatus::Fail, f64::INFINITY).with_note(e.to_string())),
    }
    let conj = StructureMap::conjugate(s).expect("plane structure");
    match survey_derivative(&conj, &cfg, &sched(), &lim()) {
        Ok(sv) => {
            let f = sv.fraction(LimitStatus::Oscillating);
            out.push(bool_record(
                "conjugate/oscillating",
                f >= 0.95,
                1.0 - f,
                format!("fraction {f}"),
            ));
        }
        Err(e) => out.push(CheckRecord::new("conjugate", CheckStatus::Fail, f64::INFINITY).with_note(e.to_string())),
    }
    out
}

type EquivalenceRow = (f64, f64, Result<bool>, Option<Result<Report>>);

pub fn equivalence(seed: u64) -> Report {
    let cfg = SampleConfig {
        seed,
        ..SampleConfig::default()
    };
    let thetas = [0.0, 0.3, 0.7];
    let rows: Vec<EquivalenceRow> = thetas
        .iter()
        .flat_map(|&a| thetas.iter().map(move |&b| (a, b)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(a, b)| {
            let (s1, s2) = (Rotating::new(a), Rotating::new(b));
            let eq = equivalence_check(&s1, &s2, &cfg, &sched(), &lim()).map(|r| r.equivalent);
            let iso = (a == b).then(|| tangent_iso_check(&s1, &s2, &cfg, &sched(), &lim(), 1e-8));
            (a, b, eq, iso)
        })
        .collect();
    let mut cls = Worst::default();
    let mut iso = Worst::default();
    for (a, b, eq, tiso) in rows {
        let ok = matches!(eq, Ok(v) if v == (a == b));
        cls.observe(0.0, CheckStatus::from_bool(ok), || {
            Witness::new("theta,theta'").scalar(a).scalar(b)
        });
        if let Some(r) = tiso {
            let (res, st) = match r {
                Ok(r) => (r.worst_residual(), r.status()),
                Err(_) => (f64::INFINITY, CheckStatus::Fail),
            };
            iso.observe(res, st, || Witness::new("theta").scalar(a));
        }
    }
    let mut out = Report::new("rotating equivalence");
    out.push(cls.into_record("classification"));
    out.push(iso.into_record("tangent-iso"));
    out
}

pub fn chain_rule(seed: u64) -> Report {
    let mut rng = Sampler::new(seed);
    let e: SharedStructure = Arc::new(Euclidean::new(2));
    let mut out = Report::new("chain rule");
    let affine = StructureMap::affine(e.clone(), vec![vec![2.0, 1.0], vec![0.0, 1.0]], Point::from([1.0, 0.0]))
        .and_then(|f| {
            StructureMap::affine(
                e.clone(),
                vec![vec![0.0, -1.0], vec![1.0, 3.0]],
                Point::from([0.0, -2.0]),
            )
            .map(|g| (f, g))
        });
    let o2 = Point::zeros(2);
    let us: Vec<Point> = (0..5).map(|_| rng.in_coord_ball(&o2, 1.0)).collect();
    let r = affine.and_then(|(f, g)| chain_rule_check(&f, &g, &rng.in_coord_ball(&o2, 1.0), &us, &sched(), &lim()));
    let r = from_result("affine", r);
    out.push(CheckRecord::threshold("affine", r.worst_residual(), 1e-12));

    let o3 = Point::zeros(3);
    let us: Vec<Point> = (0..5).map(|_| rng.in_coord_ball(&o3, 1.0)).collect();
    let x = rng.in_coord_ball(&o3, 1.0);
    let r = StructureMap::hgraded(0.5)
        .and_then(|f| StructureMap::hgraded(3.0).map(|g| (f, g)))
        .and_then(|(f, g)| chain_rule_check(&f, &g, &x, &us, &sched(), &lim()));
    let r = from_result("heisenberg-graded", r);
    out.push(CheckRecord::threshold("heisenberg-graded", r.worst_residual(), 1e-8));
    out
}

pub fn lookdown_pair(seed: u64) -> Report {
    let p = LookdownPair::heisenberg_euclidean();
    let cfg = LookdownConfig {
        sampling: SampleConfig {
            count: 20,
            radius: 0.5,
            seed,
        },
        ..LookdownConfig::default()
    };
    let mut out = Report::new("lookdown heisenberg over euclidean");
    let audit = from_result("audit", lookdown_audit(&p, &cfg));
    out.push(CheckRecord::new("audit", audit.status(), audit.worst_residual()));

    let mut rng = Sampler::new(seed ^ 0x5eed);
    let o = Point::zeros(3);
    let mut did = Worst::default();
    let mut idem = Worst::default();
    for _ in 0..10 {
        let x = rng.in_coord_ball(&o, 0.5);
        let us: Vec<Point> = (0..3).map(|_| rng.in_coord_ball(&x, 0.5)).collect();
        for u in &us {
            let d = identity_derivative(&p, &x, u, &sched(), &lim());
            let r = d.value.coord_dist(&heisenberg_identity_derivative(&x, u));
            did.observe(r, CheckStatus::from_bool(d.converged() && r <= 1e-6), || {
                Witness::new("x,u").point(&x).point(u)
            });
        }
        let proj = check_projector(&p, &x, &us, &sched(), &lim());
        if let Some(rec) = proj.record("idempotence") {
            let st = rec.status.worst(CheckStatus::from_bool(rec.residual <= 1e-9));
            idem.observe(rec.residual, st, || Witness::new("x").point(&x));
        }
    }
    out.push(did.into_record("identity-derivative"));
    out.push(idem.into_record("idempotence"));

    let cc = check_condition_c(&p, &o, &|e: Scale| Point::from([1.0, 0.0, e.value()]), &sched(), &lim());
    out.push(bool_record(
        "condition-c/gap",
        cc.gap_fit.vanishes,
        cc.gap_fit.last,
        format!("gap exponent {}", cc.gap_fit.exponent),
    ));
    out.push(bool_record(
        "condition-c/vertical",
        cc.vertical_fit.vanishes,
        cc.vertical_fit.last,
        format!("vertical exponent {}", cc.vertical_fit.exponent),
    ));
    let fit_err = ((cc.vertical_fit.exponent - 0.5) / 0.5)
        .abs()
        .max(((cc.vertical_fit.prefactor - 2.0) / 2.0).abs());
    out.push(
        CheckRecord::threshold("condition-c/decay", fit_err, 0.1).with_note(format!(
            "fit {}·eps^{}",
            cc.vertical_fit.prefactor, cc.vertical_fit.exponent
        )),
    );
    out
}

pub fn transfer(seed: u64) -> Report {
    let p = LookdownPair::heisenberg_euclidean();
    let opts = TransferOptions {
        seed,
        ..TransferOptions::default()
    };
    let mut out = Report::new("transfer probe");
    for (name, c) in [
        ("line", Curve::heisenberg_line()),
        ("circle-lift", Curve::heisenberg_circle_lift()),
    ] {
        match transfer_probe(&p, &c, &opts) {
            Ok(t) => {
                for mut rec in t.report.records {
                    rec.name = format!("{name}/{}", rec.name);
                    out.push(rec);
                }
                out.push(bool_record(
                    &format!("{name}/agreement"),
                    t.agreement >= 0.97,
                    1.0 - t.agreement,
                    format!("A and B derivatives agree at {:.1}% of samples", 100.0 * t.agreement),
                ));
            }
            Err(e) => out.push(CheckRecord::new(name, CheckStatus::Fail, f64::INFINITY).with_note(e.to_string())),
        }
    }
    let reversed = make_pair("euclidean-heisenberg")
        .and_then(|q| lookdown_audit(&q, &LookdownConfig::default()))
        .ok();
    let rec = reversed.as_ref().and_then(|r| r.record("a-lipschitz"));
    let ok = rec.is_some_and(|r| r.status == CheckStatus::Fail && r.witness.is_some());
    let mut r = CheckRecord::new(
        "reversed-pair-fails-a",
        CheckStatus::from_bool(ok),
        rec.map_or(f64::INFINITY, |r| r.residual),
    );
    if let Some(w) = rec.and_then(|r| r.witness.clone()) {
        r = r.with_note(format!("witness {:?}", w.points));
    }
    out.push(r);
    out
}

/// Re-runs a seeded subset and compares serialized output.
pub fn determinism(seed: u64) -> Report {
    let run = || {
        let mut r = axiom_audit(seed);
        r.extend(radon_nikodym(seed));
        r.extend(lookdown_pair(seed));
        serde_json::to_string(&r).expect("report serializes")
    };
    let (a, b) = (run(), run());
    let mut out = Report::new("determinism");
    out.push(CheckRecord::new(
        "repeat-identical",
        CheckStatus::from_bool(a == b),
        if a == b { 0.0 } else { 1.0 },
    ));
    out
}

pub fn run_criterion(id: u8, seed: u64) -> Option<Criterion> {
    let f: fn(u64) -> Report = match id {
        1 => axiom_audit,
        2 => euclidean_tangent,
        3 => heisenberg_tangent,
        4 => curve_calculus,
        5 => length_formula,
        6 => radon_nikodym,
        7 => pansu_rotating,
        8 => equivalence,
        9 => chain_rule,
        10 => lookdown_pair,
        11 => transfer,
        12 => determinism,
        _ => return None,
    };
    let name = CRITERIA.iter().find(|c| c.0 == id)?.1;
    Some(Criterion {
        id,
        name,
        report: f(seed),
    })
}

/// Runs every criterion. Results come back in criterion order regardless of
/// scheduling.
pub fn battery(seed: u64) -> Vec<Criterion> {
    CRITERIA
        .par_iter()
        .map(|&(id, _)| run_criterion(id, seed).expect("known criterion"))
        .collect()
}

/// Runs the battery and assembles a run report.
pub fn run_suite(config: &ExperimentConfig) -> RunReport {
    let mut rep = RunReport::new("suite", config.clone());
    for c in battery(config.seed) {
        rep.absorb(&format!("{:02}-{}", c.id, c.name), c.report);
    }
    rep
}
