//! End-to-end acceptance battery. Every criterion prints one PASS/FAIL line;
//! reference values are computed here from closed forms.

use std::f64::consts::PI;
use std::sync::Arc;

use dilab::calculus::{
    chain_rule_check, equivalence_check, pansu_derivative, survey_derivative, tangent_iso_check, StructureMap,
};
use dilab::config::ExperimentConfig;
use dilab::curves::{
    hausdorff_length_estimate, length_formula_check, length_via_dilatation, rn_probe, variation, Curve, RnOptions,
    VariationOptions, DEFAULT_QUAD_INTERVALS,
};
use dilab::lookdown::{
    check_condition_c, check_projector, identity_derivative, lookdown_audit, make_pair, transfer_probe, LookdownConfig,
    LookdownPair, TransferOptions,
};
use dilab::sampling::{SampleConfig, Sampler};
use dilab::structures::{Contracting, Euclidean, Heisenberg, Rotating};
use dilab::suite::{run_suite, EXACT_DELTA_MIN_EPS};
use dilab::tangent::{
    check_cone_property, check_metric_tangent, delta_op, membership_pairs, one_param_membership, tangent_distance,
    tangent_sum, TangentSpace,
};
use dilab::{
    audit_axioms, make_structure, AuditConfig, CheckStatus, EpsSchedule, LimitOptions, LimitStatus, Point, Scale,
    SharedStructure,
};

const SEED: u64 = 0;

/// Sub-checks that cannot pass as stated, with the reason.
const UNATTAINABLE: &[(u8, &str, &str)] = &[(
    4,
    "cantor graph length",
    "the depth-12 approximant has graph length 1 - (2/3)^12 + sqrt(1 + (2/3)^24) = 1.99232, \
     which is 7.7e-3 below 2; depth 14 is the first to land within 5e-3",
)];

type Criterion = (u8, &'static str, fn() -> Vec<Check>);

struct Check {
    label: String,
    ok: bool,
    detail: String,
}

fn check(label: &str, ok: bool, detail: impl Into<String>) -> Check {
    Check {
        label: label.into(),
        ok,
        detail: detail.into(),
    }
}

fn sched() -> EpsSchedule {
    EpsSchedule::default()
}

fn lim() -> LimitOptions {
    LimitOptions::default()
}

fn ball(rng: &mut Sampler, dim: usize, r: f64) -> Point {
    rng.in_coord_ball(&Point::zeros(dim), r)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// Heisenberg arithmetic, written out independently of the library.
fn h_mul(g: &[f64], h: &[f64]) -> [f64; 3] {
    [
        g[0] + h[0],
        g[1] + h[1],
        g[2] + h[2] + 0.5 * (g[0] * h[1] - g[1] * h[0]),
    ]
}

fn h_inv(g: &[f64]) -> [f64; 3] {
    [-g[0], -g[1], -g[2]]
}

fn h_gauge(g: &[f64]) -> f64 {
    ((g[0] * g[0] + g[1] * g[1]).powi(2) + 16.0 * g[2] * g[2]).powf(0.25)
}

fn c_mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn axiom_audit() -> Vec<Check> {
    let cfg = AuditConfig {
        seed: SEED,
        samples: 50,
        ..AuditConfig::default()
    };
    let mut out = Vec::new();
    for name in ["euclidean:2", "euclidean:3", "rotating:0", "rotating:0.5", "heisenberg"] {
        let s = make_structure(name).unwrap();
        let a = audit_axioms(s.as_ref(), &cfg).unwrap();
        for (axiom, tol) in [("A1", 1e-10), ("A2", 1e-10), ("A3", 1e-6), ("A4", 1e-6)] {
            let rec = a.report.record(axiom).expect("axiom record");
            out.push(check(
                &format!("{name} {axiom}"),
                rec.status == CheckStatus::Pass && rec.residual < tol,
                format!("{} residual {:e}", rec.status, rec.residual),
            ));
        }
    }
    let broken = audit_axioms(&Contracting::new(2), &cfg).unwrap();
    let st = broken.status("A3");
    out.push(check(
        "broken fixture flagged degenerate",
        st == Some(CheckStatus::Degenerate),
        format!("{st:?}"),
    ));
    out
}

fn euclidean_tangent() -> Vec<Check> {
    let e = Euclidean::new(2);
    let mut rng = Sampler::new(SEED);
    let (mut delta, mut sum, mut metric) = (0.0f64, 0.0f64, 0.0f64);
    let mut converged = true;
    for _ in 0..50 {
        let (x, u, v) = (ball(&mut rng, 2, 1.0), ball(&mut rng, 2, 1.0), ball(&mut rng, 2, 1.0));
        for eps in sched()
            .points()
            .into_iter()
            .filter(|e| e.value() >= EXACT_DELTA_MIN_EPS)
        {
            let t = eps.value();
            let want: Vec<f64> = (0..2).map(|i| x[i] + t * (u[i] - x[i]) + v[i] - u[i]).collect();
            delta = delta.max(dist(&delta_op(&e, &x, eps, &u, &v), &want));
        }
        let s = tangent_sum(&e, &x, &u, &v, &sched(), &lim());
        converged &= s.converged();
        let want: Vec<f64> = (0..2).map(|i| x[i] + v[i] - u[i]).collect();
        sum = sum.max(dist(&s.value, &want));
        let d = tangent_distance(&e, &x, &u, &v, &sched(), &lim());
        metric = metric.max((d.value - dist(&u, &v)).abs());
    }
    vec![
        check("delta closed form", delta <= 1e-12, format!("max err {delta:e}")),
        check("sum limit", converged && sum <= 1e-9, format!("max err {sum:e}")),
        check("tangent distance", metric <= 1e-15, format!("max err {metric:e}")),
    ]
}

fn heisenberg_tangent() -> Vec<Check> {
    let h = Heisenberg;
    let mut rng = Sampler::new(SEED);
    let mut sum = 0.0f64;
    let mut converged = 0;
    for _ in 0..100 {
        let (x, u, v) = (ball(&mut rng, 3, 1.0), ball(&mut rng, 3, 1.0), ball(&mut rng, 3, 1.0));
        let s = tangent_sum(&h, &x, &u, &v, &sched(), &lim());
        converged += s.converged() as usize;
        sum = sum.max(dist(&s.value, &h_mul(&h_mul(&x, &h_inv(&u)), &v)));
    }
    let mut cone = 0.0f64;
    for _ in 0..10 {
        let x = ball(&mut rng, 3, 1.0);
        let ts = TangentSpace::new(&h, x.clone(), sched(), lim());
        let (u, v) = (rng.in_coord_ball(&x, 1.0), rng.in_coord_ball(&x, 1.0));
        cone = cone.max(check_cone_property(&ts, &u, &v, &[0.1, 0.5, 2.0]).worst_residual());
    }
    let mt = check_metric_tangent(&h, &Point::zeros(3), &sched(), &lim(), 8, SEED);
    let sup = mt.trace.iter().fold(0.0f64, |m, t| m.max(t.1));

    let mut agree = 0;
    for i in 0..100 {
        let x = ball(&mut rng, 3, 1.0);
        let mut q = ball(&mut rng, 3, 1.0);
        if i % 2 == 0 {
            q[2] = 0.0;
        }
        let u = Point::from(h_mul(&x, &q));
        let truth = h_mul(&h_inv(&x), &u)[2].abs() <= 1e-12;
        let ts = TangentSpace::new(&h, x.clone(), sched(), lim());
        let got = one_param_membership(&ts, &u, &membership_pairs(), 1e-8).passed();
        agree += (got == truth) as usize;
    }
    vec![
        check(
            "sum matches x·u⁻¹·v",
            converged == 100 && sum <= 1e-6,
            format!("{converged}/100 converged, max err {sum:e}"),
        ),
        check("cone property", cone <= 1e-12, format!("max residual {cone:e}")),
        check("metric tangent", sup <= 1e-12, format!("sup {sup:e}")),
        check("membership classifier", agree == 100, format!("{agree}/100 agree")),
    ]
}

fn curve_calculus() -> Vec<Check> {
    let e = Euclidean::new(2);
    let vo = VariationOptions::default();
    let sign = variation(&Curve::sign(), &e, &vo).value;
    let path = hausdorff_length_estimate(&Curve::sign(), &e, 1e-3).unwrap();
    let cantor = variation(&Curve::cantor(12), &Euclidean::new(1), &vo).value;
    let graph = variation(&Curve::cantor_graph(12), &e, &vo).value;

    let e2: SharedStructure = Arc::new(Euclidean::new(2));
    let h: SharedStructure = Arc::new(Heisenberg);
    let fixtures = [
        (Curve::segment(Point::from([3.0, -4.0])), e2.clone(), 5.0),
        (Curve::corner(), e2.clone(), 2.0 * 2f64.sqrt()),
        (Curve::circle(1.0, 1.0), e2, 2.0 * PI),
        (Curve::heisenberg_line(), h.clone(), 1.0),
        (Curve::heisenberg_circle_lift(), h, 2.0 * PI),
    ];
    let mut worst = 0.0f64;
    let mut names = Vec::new();
    for (c, s, _) in &fixtures {
        let var = variation(c, s.as_ref(), &vo).value;
        let l = length_via_dilatation(c, s.as_ref(), DEFAULT_QUAD_INTERVALS).unwrap();
        let r = (l - var).abs() / var;
        worst = worst.max(r);
        if r > 1e-3 {
            names.push(c.name.clone());
        }
    }
    let fixture_truth = fixtures
        .iter()
        .map(|(c, s, want)| (variation(c, s.as_ref(), &vo).value - want).abs() / want)
        .fold(0.0f64, f64::max);
    vec![
        check("sign variation", (sign - 4.0).abs() <= 1e-5, format!("Var = {sign}")),
        check("sign path length", (path - 2.0).abs() <= 1e-2, format!("L = {path}")),
        check(
            "cantor variation",
            (0.999..=1.0).contains(&cantor),
            format!("Var = {cantor}"),
        ),
        check(
            "cantor graph length",
            (graph - 2.0).abs() <= 5e-3,
            format!("L = {graph}"),
        ),
        check(
            "L = Var on Lipschitz fixtures",
            worst <= 1e-3,
            format!("max rel err {worst:e} {names:?}"),
        ),
        check(
            "fixture lengths",
            fixture_truth <= 1e-3,
            format!("max rel err {fixture_truth:e}"),
        ),
    ]
}

fn length_formula() -> Vec<Check> {
    let mut out = Vec::new();
    let cases: [(&str, Curve, SharedStructure, f64); 2] = [
        (
            "unit circle",
            Curve::circle(1.0, 1.0),
            Arc::new(Euclidean::new(2)),
            1e-4,
        ),
        (
            "horizontal circle lift",
            Curve::heisenberg_circle_lift(),
            Arc::new(Heisenberg),
            1e-3,
        ),
    ];
    for (name, c, s, tol) in cases {
        let f = length_formula_check(s.as_ref(), &c, DEFAULT_QUAD_INTERVALS, &sched(), &lim()).unwrap();
        let (el, er) = (
            (f.lhs - 2.0 * PI).abs() / (2.0 * PI),
            (f.rhs - 2.0 * PI).abs() / (2.0 * PI),
        );
        out.push(check(
            name,
            el <= tol && er <= tol,
            format!("lhs {} rhs {}", f.lhs, f.rhs),
        ));
    }
    out
}

fn radon_nikodym() -> Vec<Check> {
    let opts = RnOptions {
        seed: SEED,
        ..RnOptions::default()
    };
    let poly = rn_probe(&Euclidean::new(2), &Curve::staircase_polyline(), &opts).unwrap();
    let rot = rn_probe(&Rotating::new(0.5), &Curve::segment(Point::from([1.0, 0.0])), &opts).unwrap();
    let failures = rot.samples - rot.derivable;
    vec![
        check(
            "polyline derivable",
            poly.fraction >= 0.97,
            format!("fraction {}", poly.fraction),
        ),
        check(
            "rotating segment not derivable",
            rot.fraction <= 0.05 && rot.oscillating * 2 > failures,
            format!(
                "fraction {}, oscillating {}/{}",
                rot.fraction, rot.oscillating, rot.samples
            ),
        ),
    ]
}

fn pansu_rotating() -> Vec<Check> {
    let s: SharedStructure = Arc::new(Rotating::new(0.5));
    let cfg = SampleConfig {
        count: 20,
        radius: 0.5,
        seed: SEED,
    };
    let sq = StructureMap::square(s.clone()).unwrap();
    let survey = survey_derivative(&sq, &cfg, &sched(), &lim()).unwrap();
    let conv = survey.report.record("convergence").unwrap().residual;
    let laws = ["homogeneity", "additivity"]
        .iter()
        .all(|n| survey.report.record(n).is_some_and(|r| r.status == CheckStatus::Pass));

    let mut rng = Sampler::new(SEED);
    let mut oracle = 0.0f64;
    for _ in 0..20 {
        let x = ball(&mut rng, 2, 0.5);
        let u = rng.in_coord_ball(&x, 0.5);
        let z = (x[0], x[1]);
        let zz = c_mul(z, z);
        let lin = c_mul((2.0 * z.0, 2.0 * z.1), (u[0] - z.0, u[1] - z.1));
        let q = pansu_derivative(&sq, &x, &u, &sched(), &lim());
        oracle = oracle.max(dist(&q.value, &[zz.0 + lin.0, zz.1 + lin.1]));
    }

    let conj = StructureMap::conjugate(s).unwrap();
    let osc = survey_derivative(&conj, &cfg, &sched(), &lim())
        .unwrap()
        .fraction(LimitStatus::Oscillating);
    vec![
        check(
            "square converges",
            survey.converged == survey.probes && conv < 1e-6,
            format!("{}/{} converged, residual {conv:e}", survey.converged, survey.probes),
        ),
        check("square is a conical morphism", laws, ""),
        check(
            "square derivative closed form",
            oracle < 1e-6,
            format!("max err {oracle:e}"),
        ),
        check("conjugate oscillates", osc >= 0.95, format!("fraction {osc}")),
    ]
}

fn equivalence() -> Vec<Check> {
    let cfg = SampleConfig {
        seed: SEED,
        ..SampleConfig::default()
    };
    let thetas = [0.0, 0.3, 0.7];
    let mut wrong = Vec::new();
    let mut iso = 0.0f64;
    let mut iso_ok = true;
    for &a in &thetas {
        for &b in &thetas {
            let (s1, s2) = (Rotating::new(a), Rotating::new(b));
            let eq = equivalence_check(&s1, &s2, &cfg, &sched(), &lim()).unwrap().equivalent;
            if eq != (a == b) {
                wrong.push((a, b));
            }
            if a == b {
                let r = tangent_iso_check(&s1, &s2, &cfg, &sched(), &lim(), 1e-8).unwrap();
                iso_ok &= r.passed();
                iso = iso.max(r.worst_residual());
            }
        }
    }
    vec![
        check(
            "equivalent iff equal angles",
            wrong.is_empty(),
            format!("misclassified {wrong:?}"),
        ),
        check(
            "tangent isomorphism",
            iso_ok && iso <= 1e-8,
            format!("max residual {iso:e}"),
        ),
    ]
}

fn chain_rule() -> Vec<Check> {
    let e: SharedStructure = Arc::new(Euclidean::new(2));
    let (fa, fb) = ([[2.0, 1.0], [0.0, 1.0]], [1.0, 0.0]);
    let (ga, gb) = ([[0.0, -1.0], [1.0, 3.0]], [0.0, -2.0]);
    let to_rows = |m: [[f64; 2]; 2]| m.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    let f = StructureMap::affine(e.clone(), to_rows(fa), Point::from(fb)).unwrap();
    let g = StructureMap::affine(e, to_rows(ga), Point::from(gb)).unwrap();
    let mut rng = Sampler::new(SEED);
    let x = ball(&mut rng, 2, 1.0);
    let us: Vec<Point> = (0..5).map(|_| ball(&mut rng, 2, 1.0)).collect();
    let affine = chain_rule_check(&f, &g, &x, &us, &sched(), &lim()).unwrap();

    // D(g∘f)(x)(u) = G(F u + b_f) + b_g for affine maps of the plane.
    let gf = f.then(&g);
    let mut oracle = 0.0f64;
    for u in &us {
        let fu = [0, 1].map(|i| fa[i][0] * u[0] + fa[i][1] * u[1] + fb[i]);
        let want = [0, 1].map(|i| ga[i][0] * fu[0] + ga[i][1] * fu[1] + gb[i]);
        let got = pansu_derivative(&gf, &x, u, &sched(), &lim());
        oracle = oracle.max(dist(&got.value, &want));
    }

    let x3 = ball(&mut rng, 3, 1.0);
    let us3: Vec<Point> = (0..5).map(|_| ball(&mut rng, 3, 1.0)).collect();
    let graded = chain_rule_check(
        &StructureMap::hgraded(0.5).unwrap(),
        &StructureMap::hgraded(3.0).unwrap(),
        &x3,
        &us3,
        &sched(),
        &lim(),
    )
    .unwrap();
    vec![
        check(
            "affine",
            affine.worst_residual() <= 1e-12,
            format!("residual {:e}", affine.worst_residual()),
        ),
        check("affine closed form", oracle <= 1e-12, format!("max err {oracle:e}")),
        check(
            "heisenberg graded",
            graded.worst_residual() <= 1e-8,
            format!("residual {:e}", graded.worst_residual()),
        ),
    ]
}

fn lookdown_pair() -> Vec<Check> {
    let p = LookdownPair::heisenberg_euclidean();
    let cfg = LookdownConfig {
        sampling: SampleConfig {
            count: 20,
            radius: 0.5,
            seed: SEED,
        },
        ..LookdownConfig::default()
    };
    let audit = lookdown_audit(&p, &cfg).unwrap();

    let mut rng = Sampler::new(SEED);
    let (mut did, mut idem) = (0.0f64, 0.0f64);
    let mut idem_ok = true;
    for _ in 0..10 {
        let x = ball(&mut rng, 3, 0.5);
        let us: Vec<Point> = (0..3).map(|_| rng.in_coord_ball(&x, 0.5)).collect();
        for u in &us {
            let a = h_mul(&h_inv(&x), u);
            let want = [x[0] + a[0], x[1] + a[1], x[2] + 0.5 * (x[0] * a[1] - x[1] * a[0])];
            did = did.max(dist(&identity_derivative(&p, &x, u, &sched(), &lim()).value, &want));
        }
        let rec = check_projector(&p, &x, &us, &sched(), &lim());
        let rec = rec.record("idempotence").unwrap();
        idem_ok &= rec.status == CheckStatus::Pass;
        idem = idem.max(rec.residual);
    }

    let o = Point::zeros(3);
    let cc = check_condition_c(&p, &o, &|e: Scale| Point::from([1.0, 0.0, e.value()]), &sched(), &lim());
    // Q_ε(1,0,ε) = (1,0,ε²) at the origin, so the vertical part is
    // N((0,0,ε-ε²)) = 2·sqrt(ε-ε²).
    let trace_err = cc
        .trace
        .iter()
        .map(|&(e, _, v)| (v - h_gauge(&[0.0, 0.0, e - e * e])).abs() / (2.0 * (e - e * e).sqrt()))
        .fold(0.0f64, f64::max);
    let fit = &cc.vertical_fit;
    let fit_err = ((fit.exponent - 0.5) / 0.5)
        .abs()
        .max(((fit.prefactor - 2.0) / 2.0).abs());
    vec![
        check(
            "audit in the radius-0.5 ball",
            audit.passed(),
            format!("{}", audit.status()),
        ),
        check("D id closed form", did <= 1e-6, format!("max err {did:e}")),
        check(
            "projector idempotence",
            idem_ok && idem <= 1e-9,
            format!("residual {idem:e}"),
        ),
        check(
            "gap vanishes",
            cc.gap_fit.vanishes,
            format!("last {:e}", cc.gap_fit.last),
        ),
        check("vertical part vanishes", fit.vanishes, format!("last {:e}", fit.last)),
        check(
            "vertical part trace",
            trace_err <= 1e-9,
            format!("max rel err {trace_err:e}"),
        ),
        check(
            "decay consistent with 2·sqrt(eps)",
            fit_err <= 0.1,
            format!("fit {}·eps^{}", fit.prefactor, fit.exponent),
        ),
    ]
}

fn transfer() -> Vec<Check> {
    let p = LookdownPair::heisenberg_euclidean();
    let opts = TransferOptions {
        seed: SEED,
        ..TransferOptions::default()
    };
    let mut out = Vec::new();
    for (name, c) in [
        ("horizontal line", Curve::heisenberg_line()),
        ("circle lift", Curve::heisenberg_circle_lift()),
    ] {
        let t = transfer_probe(&p, &c, &opts).unwrap();
        let stages = ["b-derivability", "length-gap", "vertical-part", "a-derivability"];
        let failed: Vec<&str> = stages
            .iter()
            .copied()
            .filter(|s| t.report.record(s).is_none_or(|r| r.status != CheckStatus::Pass))
            .collect();
        out.push(check(
            &format!("{name} stages"),
            failed.is_empty(),
            format!("failed {failed:?}"),
        ));
        out.push(check(
            &format!("{name} agreement"),
            t.agreement >= 0.97,
            format!("{:.1}%", 100.0 * t.agreement),
        ));
    }
    let reversed = lookdown_audit(&make_pair("euclidean-heisenberg").unwrap(), &LookdownConfig::default()).unwrap();
    let a = reversed.record("a-lipschitz").unwrap();
    out.push(check(
        "reversed pair fails (a) with a witness",
        a.status == CheckStatus::Fail && a.witness.is_some(),
        format!("{} residual {:e}", a.status, a.residual),
    ));
    out
}

fn determinism() -> Vec<Check> {
    let cfg = ExperimentConfig::default();
    let (a, b) = (run_suite(&cfg).to_canonical_json(), run_suite(&cfg).to_canonical_json());
    vec![check(
        "repeated suite runs are byte-identical",
        a == b,
        format!("{} bytes", a.len()),
    )]
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        (1, "axiom audit", axiom_audit),
        (2, "euclidean tangent operations", euclidean_tangent),
        (3, "heisenberg tangent operations", heisenberg_tangent),
        (4, "curve calculus", curve_calculus),
        (5, "length formula", length_formula),
        (6, "radon-nikodym contrast", radon_nikodym),
        (7, "pansu derivatives on rotating:0.5", pansu_rotating),
        (8, "equivalence of rotating structures", equivalence),
        (9, "chain rule", chain_rule),
        (10, "lookdown pair", lookdown_pair),
        (11, "transfer probe", transfer),
        (12, "determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let checks = run();
        let failed: Vec<&Check> = checks.iter().filter(|c| !c.ok).collect();
        if failed.is_empty() {
            println!("PASS criterion {id}: {name} ({} checks)", checks.len());
            continue;
        }
        let summary: Vec<String> = failed.iter().map(|c| format!("{}: {}", c.label, c.detail)).collect();
        println!("FAIL criterion {id}: {name}; {}", summary.join("; "));
        for c in failed {
            match UNATTAINABLE.iter().find(|u| u.0 == id && u.1 == c.label) {
                Some(u) => println!("    known: {}", u.2),
                None => unexpected.push(format!("criterion {id}: {}", c.label)),
            }
        }
    }
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}

#[test]
fn cantor_graph_target_is_out_of_reach_at_depth_12() {
    let exact = |m: i32| 1.0 - (2.0f64 / 3.0).powi(m) + (1.0 + (2.0f64 / 3.0).powi(2 * m)).sqrt();
    assert!((exact(12) - 1.99232).abs() < 1e-5);
    assert!((exact(12) - 2.0).abs() > 5e-3);
    assert!((exact(13) - 2.0).abs() > 5e-3);
    assert!((exact(14) - 2.0).abs() <= 5e-3);
}
