use std::sync::Arc;

use dilab::calculus::{pansu_derivative, StructureMap};
use dilab::config::ExperimentConfig;
use dilab::curves::{metric_derivative, reparametrize_arclength, variation, Curve, VariationOptions};
use dilab::lookdown::{distribution_gap, heisenberg_identity_derivative, LookdownPair, DEFAULT_PROBE_RADIUS};
use dilab::structures::{group_inv, group_op, Contracting, Euclidean, Heisenberg};
use dilab::tangent::{coord_metric, tangent_distance, tangent_inv, tangent_product};
use dilab::{
    audit_axioms, estimate_limit, make_structure, AuditConfig, CheckStatus, DilatationStructure, EpsSchedule,
    LimitOptions, LimitStatus, Point, Scale, SharedStructure,
};
use proptest::prelude::*;

const STRUCTURES: [&str; 5] = ["euclidean:2", "euclidean:3", "rotating:0", "rotating:0.5", "heisenberg"];

fn coords(dim: usize, r: f64) -> impl Strategy<Value = Point> {
    proptest::collection::vec(-r..r, dim).prop_map(Point::from)
}

fn h_point() -> impl Strategy<Value = Point> {
    coords(3, 1.0)
}

fn sched() -> EpsSchedule {
    EpsSchedule::default()
}

fn lim() -> LimitOptions {
    LimitOptions::default()
}

fn product(x: &Point, u: &Point, v: &Point) -> Point {
    tangent_product(&Heisenberg, x, u, v, &sched(), &lim()).value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilatations_compose(
        idx in 0..STRUCTURES.len(),
        raw in proptest::collection::vec(-1.0f64..1.0, 6),
        eps in 1e-3f64..=1.0,
        mu in 1e-3f64..=1.0,
    ) {
        let s = make_structure(STRUCTURES[idx]).unwrap();
        let d = s.dim();
        let (x, u) = (Point::from_slice(&raw[..d]), Point::from_slice(&raw[3..3 + d]));
        let (e, m) = (Scale::new(eps).unwrap(), Scale::new(mu).unwrap());
        let lhs = s.dilate(&x, e, &s.dilate(&x, m, &u));
        let rhs = s.dilate(&x, e * m, &u);
        prop_assert!(coord_metric(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn heisenberg_group_is_associative(g in h_point(), h in h_point(), k in h_point()) {
        let l = group_op(&group_op(&g, &h), &k);
        let r = group_op(&g, &group_op(&h, &k));
        prop_assert!(coord_metric(&l, &r) <= 1e-14);
        let e = group_op(&g, &group_inv(&g));
        prop_assert!(coord_metric(&e, &Point::zeros(3)) == 0.0);
    }

    #[test]
    fn heisenberg_rescaled_distance_is_scale_free(x in h_point(), u in h_point(), v in h_point(), eps in 0.1f64..=1.0) {
        let h = Heisenberg;
        let e = Scale::new(eps).unwrap();
        let rescaled = h.distance(&h.dilate(&x, e, &u), &h.dilate(&x, e, &v)) / eps;
        prop_assert!((rescaled - h.distance(&u, &v)).abs() <= 1e-12);
    }

    #[test]
    fn euclidean_tangent_distance_is_the_distance(raw in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let e = Euclidean::new(3);
        let (x, u, v) = (Point::from_slice(&raw[..3]), Point::from_slice(&raw[3..6]), Point::from_slice(&raw[6..]));
        let d = tangent_distance(&e, &x, &u, &v, &sched(), &lim());
        prop_assert!(d.converged());
        prop_assert!((d.value - e.distance(&u, &v)).abs() <= 1e-15);
    }

    #[test]
    fn constant_sequences_converge_exactly(c in -1e6f64..1e6, eps0 in 0.1f64..1.0, ratio in 0.2f64..0.9) {
        let sched = EpsSchedule::new(eps0, ratio, 20).unwrap();
        let est = estimate_limit(|_| c, |a: &f64, b: &f64| (a - b).abs(), &sched, &lim());
        prop_assert_eq!(est.status, LimitStatus::Converged);
        prop_assert_eq!(est.residual, 0.0);
        prop_assert_eq!(est.value, c);
    }

    #[test]
    fn toml_round_trip(
        seed in any::<u64>(),
        samples in 1usize..1000,
        radius in 1e-3f64..10.0,
        eps0 in 1e-3f64..1.0,
        ratio in 0.05f64..0.95,
        steps in 4usize..40,
        idx in 0..STRUCTURES.len(),
    ) {
        let cfg = ExperimentConfig {
            structure: STRUCTURES[idx].into(),
            seed,
            samples,
            radius,
            eps0,
            ratio,
            steps,
            ..ExperimentConfig::default()
        };
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tangent_group_laws(x in h_point(), u in h_point(), v in h_point(), w in h_point()) {
        let l = product(&x, &product(&x, &u, &v), &w);
        let r = product(&x, &u, &product(&x, &v, &w));
        prop_assert!(coord_metric(&l, &r) <= 1e-9, "associativity {}", coord_metric(&l, &r));
        prop_assert!(coord_metric(&product(&x, &x, &u), &u) <= 1e-9);
        let inv = tangent_inv(&Heisenberg, &x, &u, &sched(), &lim()).value;
        prop_assert!(coord_metric(&product(&x, &u, &inv), &x) <= 1e-9);
    }

    #[test]
    fn dilatations_are_tangent_automorphisms(x in h_point(), u in h_point(), v in h_point(), eps in 0.05f64..=1.0) {
        let h = Heisenberg;
        let e = Scale::new(eps).unwrap();
        let lhs = h.dilate(&x, e, &product(&x, &u, &v));
        let rhs = product(&x, &h.dilate(&x, e, &u), &h.dilate(&x, e, &v));
        prop_assert!(coord_metric(&lhs, &rhs) <= 1e-9);
    }

    #[test]
    fn identity_map_derivative_is_identity(idx in 0..STRUCTURES.len(), raw in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let s: SharedStructure = make_structure(STRUCTURES[idx]).unwrap();
        let d = s.dim();
        let (x, u) = (Point::from_slice(&raw[..d]), Point::from_slice(&raw[3..3 + d]));
        let id = StructureMap::identity(s.clone());
        let q = pansu_derivative(&id, &x, &u, &sched(), &lim());
        prop_assert!(q.converged());
        prop_assert!(coord_metric(&q.value, &u) <= 1e-9);
    }

    #[test]
    fn projector_fixed_points_are_shared(x in coords(3, 0.5), w in coords(3, 0.5), eps in 1e-4f64..=1.0) {
        let p = LookdownPair::heisenberg_euclidean();
        let u = heisenberg_identity_derivative(&x, &x.add(&w));
        let e = Scale::new(eps).unwrap();
        let up = p.upper.dilate(&x, e, &u);
        let down = p.lower.dilate(&x, e, &u);
        prop_assert!(coord_metric(&up, &down) <= 1e-12);
        let gap = distribution_gap(&p, &x, e, &u, DEFAULT_PROBE_RADIUS, &sched(), &lim()).unwrap();
        prop_assert!(gap <= 1e-10, "gap {gap}");
    }

    #[test]
    fn metric_derivative_respects_lipschitz_bound(r in 0.1f64..3.0, w in 0.2f64..3.0, frac in 0.01f64..0.99) {
        let c = Curve::circle(r, w).with_lip_bound(r * w);
        let e = Euclidean::new(2);
        let t = c.a + frac * c.span();
        let md = metric_derivative(&c, t, &e, &sched(), &lim());
        prop_assert!(md.converged());
        prop_assert!(md.value <= c.lip_bound.unwrap() * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn variation_survives_arclength_reparametrization(r in 0.2f64..2.0, w in 0.5f64..2.0) {
        let e: Arc<dyn DilatationStructure> = Arc::new(Euclidean::new(2));
        let c = Curve::circle(r, w);
        let arc = reparametrize_arclength(&c, e.as_ref()).unwrap();
        let vo = VariationOptions::default();
        let (a, b) = (variation(&c, e.as_ref(), &vo).value, variation(&arc, e.as_ref(), &vo).value);
        prop_assert!((a - b).abs() / a <= 1e-6, "{a} vs {b}");
    }

    #[test]
    fn audits_are_deterministic(seed in any::<u64>(), idx in 0..STRUCTURES.len()) {
        let s = make_structure(STRUCTURES[idx]).unwrap();
        let cfg = AuditConfig { seed, samples: 10, ..AuditConfig::default() };
        let a = audit_axioms(s.as_ref(), &cfg).unwrap();
        let b = audit_axioms(s.as_ref(), &cfg).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    }

    #[test]
    fn degenerate_is_never_a_pass(seed in any::<u64>()) {
        let cfg = AuditConfig { seed, samples: 10, ..AuditConfig::default() };
        let a = audit_axioms(&Contracting::new(2), &cfg).unwrap();
        prop_assert_eq!(a.status("A3"), Some(CheckStatus::Degenerate));
    }
}
