use anyhow::{anyhow, bail, Result};
use clap::ValueEnum;
use dilab::calculus::{
    chain_rule_check, equivalence_check, make_map, pansu_derivative, sample_probes, survey_derivative,
    tangent_iso_check, transport_structure,
};
use dilab::config::ExperimentConfig;
use dilab::curves::{
    curve_length, derivative_at, length_formula_check, make_curve, metric_derivative, reparametrize_arclength,
    rn_probe, upper_dilatation, variation, Curve, LengthMethod, RnOptions, VariationOptions, DEFAULT_QUAD_INTERVALS,
    DEFAULT_WINDOW,
};
use dilab::lookdown::{
    check_condition_c, check_projector, distribution_gap, identity_derivative, lookdown_audit, make_pair, q_eps,
    transfer_probe, LookdownConfig, TransferOptions, DEFAULT_PROBE_RADIUS,
};
use dilab::report::{limit_status_check, Worst};
use dilab::sampling::Sampler;
use dilab::tangent::{tangent_distance, tangent_inv, tangent_product, tangent_sum};
use dilab::{audit_axioms, make_structure, CheckRecord, CheckStatus, LimitEstimate, Point, Report, Scale, Witness};

use crate::output::{point_cells, point_header, Cell, Trace};

pub struct Outcome {
    pub report: Report,
    /// `None` means the record table is written as the CSV.
    pub trace: Option<Trace>,
}

impl Outcome {
    fn new(report: Report, trace: Trace) -> Self {
        Outcome {
            report,
            trace: Some(trace),
        }
    }

    fn records(report: Report) -> Self {
        Outcome { report, trace: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TangentOp {
    Sum,
    Product,
    Distance,
    Inv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveOp {
    Var,
    Lip,
    Md,
    Length,
    Reparam,
    Derive,
    Rn,
    Lenformula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiffOp {
    Derive,
    Chain,
    Transport,
    Equiv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LookdownOp {
    Audit,
    Qeps,
    Gap,
    Did,
    Projector,
    Transfer,
}

/// Resolves an operation from the flag, then the config file, then the
/// default.
pub fn resolve_op<T: ValueEnum>(flag: Option<T>, cfg: &ExperimentConfig, default: T) -> Result<T> {
    match flag {
        Some(op) => Ok(op),
        None if cfg.op.is_empty() => Ok(default),
        None => T::from_str(&cfg.op, true).map_err(|_| anyhow!("unknown operation `{}`", cfg.op)),
    }
}

pub fn parse_point(text: &str, dim: usize) -> Result<Point> {
    let inner = text.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    let coords = inner
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("malformed coordinate `{s}` in `{text}`"))
        })
        .collect::<Result<Vec<f64>>>()?;
    if coords.len() != dim {
        bail!("point `{text}` has {} coordinates, expected {dim}", coords.len());
    }
    if coords.iter().any(|c| !c.is_finite()) {
        bail!("point `{text}` has non-finite coordinates");
    }
    Ok(Point::from(coords))
}

fn opt_point(text: Option<&str>, dim: usize) -> Result<Option<Point>> {
    text.map(|t| parse_point(t, dim)).transpose()
}

fn estimate_rows<V>(trace: &mut Trace, prefix: &[Cell], est: &LimitEstimate<V>, value: impl Fn(&V) -> Vec<Cell>) {
    for (eps, v) in &est.samples {
        let mut row = prefix.to_vec();
        row.push((*eps).into());
        row.extend(value(v));
        row.push(est.residual.into());
        row.push(est.status.to_string().into());
        trace.push(row);
    }
}

fn convergence<V>(worst: &mut Worst, est: &LimitEstimate<V>, witness: impl FnOnce() -> Witness) {
    worst.observe(est.residual, limit_status_check(est.status), witness);
}

pub fn audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = make_structure(&cfg.structure)?;
    let a = audit_axioms(s.as_ref(), &cfg.audit())?;
    Ok(Outcome::records(a.report))
}

pub struct TangentArgs<'a> {
    pub op: TangentOp,
    pub x: Option<&'a str>,
    pub u: Option<&'a str>,
    pub v: Option<&'a str>,
}

pub fn tangent(cfg: &ExperimentConfig, args: &TangentArgs<'_>) -> Result<Outcome> {
    let s = make_structure(&cfg.structure)?;
    let dim = s.dim();
    let (sched, lim) = (cfg.schedule(), cfg.limit());
    let origin = Point::zeros(dim);
    let mut rng = Sampler::new(cfg.seed);
    let given = (
        opt_point(args.x, dim)?,
        opt_point(args.u, dim)?,
        opt_point(args.v, dim)?,
    );
    let triples: Vec<(Point, Point, Point)> = if given.0.is_some() || given.1.is_some() || given.2.is_some() {
        vec![(
            given.0.unwrap_or_else(|| origin.clone()),
            given
                .1
                .ok_or_else(|| anyhow!("--u is required when points are given"))?,
            given.2.unwrap_or_else(|| origin.clone()),
        )]
    } else {
        (0..cfg.samples)
            .map(|_| {
                let x = rng.in_coord_ball(&origin, cfg.radius);
                let u = rng.in_coord_ball(&x, cfg.radius);
                let v = rng.in_coord_ball(&x, cfg.radius);
                (x, u, v)
            })
            .collect()
    };
    let with_v = args.op != TangentOp::Inv;
    let value_dim = if args.op == TangentOp::Distance { 1 } else { dim };
    let mut header = point_header("x", dim);
    header.extend(point_header("u", dim));
    if with_v {
        header.extend(point_header("v", dim));
    }
    header.push("eps".into());
    header.extend(point_header("value", value_dim));
    header.extend(["residual".to_string(), "status".to_string()]);
    let mut trace = Trace::new(header);
    let mut worst = Worst::default();
    for (x, u, v) in &triples {
        let mut prefix = point_cells(x);
        prefix.extend(point_cells(u));
        if with_v {
            prefix.extend(point_cells(v));
        }
        let wit = || Witness::new("x,u,v").point(x).point(u).point(v);
        match args.op {
            TangentOp::Distance => {
                let d = tangent_distance(s.as_ref(), x, u, v, &sched, &lim);
                estimate_rows(&mut trace, &prefix, &d, |val| vec![(*val).into()]);
                convergence(&mut worst, &d, wit);
            }
            op => {
                let e = match op {
                    TangentOp::Sum => tangent_sum(s.as_ref(), x, u, v, &sched, &lim),
                    TangentOp::Product => tangent_product(s.as_ref(), x, u, v, &sched, &lim),
                    _ => tangent_inv(s.as_ref(), x, u, &sched, &lim),
                };
                estimate_rows(&mut trace, &prefix, &e, point_cells);
                convergence(&mut worst, &e, wit);
            }
        }
    }
    let mut report = Report::new(format!("tangent {:?} in {}", args.op, s.name()).to_lowercase());
    report.push(worst.into_record("convergence"));
    Ok(Outcome::new(report, trace))
}

pub struct CurveArgs {
    pub op: CurveOp,
    pub t: Option<f64>,
    pub rel_tol: f64,
}

fn t_grid(c: &Curve, n: usize, t: Option<f64>) -> Result<Vec<f64>> {
    match t {
        Some(t) if t < c.a || t > c.b => bail!("t = {t} lies outside [{}, {}]", c.a, c.b),
        Some(t) => Ok(vec![t]),
        None => Ok((0..n).map(|i| c.a + c.span() * (i as f64 + 0.5) / n as f64).collect()),
    }
}

fn bound_check(worst: &mut Worst, c: &Curve, t: f64, value: f64) {
    if let Some(l) = c.lip_bound {
        let excess = (value - l * (1.0 + 1e-6)).max(0.0);
        worst.observe(excess, CheckStatus::from_bool(excess == 0.0), || {
            Witness::new("t,value").scalar(t).scalar(value)
        });
    }
}

pub fn curve(cfg: &ExperimentConfig, args: &CurveArgs) -> Result<Outcome> {
    let s = make_structure(&cfg.structure)?;
    let s = s.as_ref();
    let c = make_curve(&cfg.curve, s.dim())?;
    if c.dim != s.dim() {
        bail!(dilab::Error::DimensionMismatch {
            expected: s.dim(),
            got: c.dim,
        });
    }
    let (sched, lim) = (cfg.schedule(), cfg.limit());
    let title = format!("curve {} in {}", c.name, s.name());
    let mut report = Report::new(title);
    let vopts = VariationOptions::default();
    let outcome = match args.op {
        CurveOp::Var => {
            let v = variation(&c, s, &vopts);
            let note = if v.exact {
                format!("variation {}", v.value)
            } else {
                format!("variation at least {} (depth limit reached)", v.value)
            };
            report.push(CheckRecord::new("variation", CheckStatus::Pass, 0.0).with_note(note));
            let mut tr = Trace::new(["value", "exact", "depth", "intervals"]);
            tr.push(vec![v.value.into(), v.exact.into(), v.depth.into(), v.intervals.into()]);
            Outcome::new(report, tr)
        }
        CurveOp::Lip => {
            let mut tr = Trace::new(["t", "lip"]);
            let mut bound = Worst::default();
            let mut finite = Worst::default();
            for t in t_grid(&c, cfg.samples, args.t)? {
                let l = upper_dilatation(&c, t, s, DEFAULT_WINDOW * c.span());
                tr.push(vec![t.into(), l.into()]);
                finite.observe(
                    if l.is_finite() { 0.0 } else { f64::INFINITY },
                    CheckStatus::from_bool(l.is_finite()),
                    || Witness::new("t").scalar(t),
                );
                bound_check(&mut bound, &c, t, l);
            }
            report.push(finite.into_record("finite"));
            if c.lip_bound.is_some() {
                report.push(bound.into_record("lipschitz-bound"));
            }
            Outcome::new(report, tr)
        }
        CurveOp::Md => {
            let mut tr = Trace::new(["t", "md", "residual", "status"]);
            let mut conv = Worst::default();
            let mut bound = Worst::default();
            for t in t_grid(&c, cfg.samples, args.t)? {
                let md = metric_derivative(&c, t, s, &sched, &lim);
                tr.push(vec![
                    t.into(),
                    md.value.into(),
                    md.residual.into(),
                    md.status.to_string().into(),
                ]);
                convergence(&mut conv, &md, || Witness::new("t").scalar(t));
                if md.converged() {
                    bound_check(&mut bound, &c, t, md.value);
                }
            }
            report.push(conv.into_record("convergence"));
            if c.lip_bound.is_some() {
                report.push(bound.into_record("upper-gradient"));
            }
            Outcome::new(report, tr)
        }
        CurveOp::Length => {
            let l = curve_length(&c, s, DEFAULT_QUAD_INTERVALS, &vopts);
            let method = match l.method {
                LengthMethod::Dilatation => "dilatation",
                LengthMethod::Variation => "variation",
            };
            let rec = match l.method {
                LengthMethod::Dilatation => {
                    let rel = (l.value - l.variation.value).abs() / l.variation.value.max(f64::MIN_POSITIVE);
                    let rel = if l.value == l.variation.value { 0.0 } else { rel };
                    CheckRecord::threshold("length-equals-variation", rel, args.rel_tol)
                }
                LengthMethod::Variation => CheckRecord::new("length-equals-variation", CheckStatus::Vacuous, 0.0)
                    .with_note("curve is not Lipschitz; length taken as the variation"),
            };
            report.push(rec);
            let mut tr = Trace::new(["value", "method", "variation"]);
            tr.push(vec![l.value.into(), method.into(), l.variation.value.into()]);
            Outcome::new(report, tr)
        }
        CurveOp::Reparam => {
            let arc = reparametrize_arclength(&c, s)?;
            let n = cfg.samples.max(2);
            let mut header = vec!["t".to_string()];
            header.extend(point_header("c", arc.dim));
            let mut tr = Trace::new(header);
            for i in 0..=n {
                let t = arc.a + arc.span() * i as f64 / n as f64;
                let mut row = vec![t.into()];
                row.extend(point_cells(&arc.eval(t)));
                tr.push(row);
            }
            let mut speed = Worst::default();
            for t in t_grid(&arc, n, None)? {
                let md = metric_derivative(&arc, t, s, &sched, &lim);
                let r = (md.value - 1.0).abs();
                let st = limit_status_check(md.status).worst(CheckStatus::from_bool(r <= args.rel_tol));
                speed.observe(r, st, || Witness::new("t").scalar(t));
            }
            report.push(speed.into_record("unit-speed").with_note(format!("length {}", arc.b)));
            Outcome::new(report, tr)
        }
        CurveOp::Derive => {
            let dim = c.dim;
            let mut header = vec!["t".to_string()];
            header.extend(point_header("forward", dim));
            header.extend(point_header("backward", dim));
            header.extend(["derivable", "mismatch", "status"].map(String::from));
            let mut tr = Trace::new(header);
            let mut worst = Worst::default();
            for t in t_grid(&c, cfg.samples, args.t)? {
                let d = derivative_at(&c, t, s, &sched, &lim);
                let mut row = vec![t.into()];
                row.extend(point_cells(&d.forward.value));
                row.extend(point_cells(&d.backward.value));
                row.extend([d.derivable.into(), d.mismatch.into(), d.status().to_string().into()]);
                tr.push(row);
                worst.observe(d.mismatch, CheckStatus::from_bool(d.derivable), || {
                    Witness::new("t").scalar(t).point(&c.eval(t))
                });
            }
            report.push(worst.into_record("derivable"));
            Outcome::new(report, tr)
        }
        CurveOp::Rn => {
            let opts = RnOptions {
                samples: cfg.samples,
                seed: cfg.seed,
                schedule: sched,
                limit: lim,
                ..RnOptions::default()
            };
            let p = rn_probe(s, &c, &opts)?;
            let mut tr = Trace::new(["failed_t"]);
            for &t in &p.failures {
                tr.push(vec![t.into()]);
            }
            Outcome::new(p.report, tr)
        }
        CurveOp::Lenformula => {
            let f = length_formula_check(s, &c, DEFAULT_QUAD_INTERVALS, &sched, &lim)?;
            let mut tr = Trace::new(["lhs", "rhs", "rel_err", "derivable_fraction"]);
            tr.push(vec![
                f.lhs.into(),
                f.rhs.into(),
                f.rel_err.into(),
                f.derivable_fraction.into(),
            ]);
            Outcome::new(f.report(args.rel_tol), tr)
        }
    };
    Ok(outcome)
}

pub struct DiffArgs<'a> {
    pub op: DiffOp,
    pub then: Option<&'a str>,
    pub other: Option<&'a str>,
    pub x: Option<&'a str>,
    pub iso_tol: f64,
}

pub fn diff(cfg: &ExperimentConfig, args: &DiffArgs<'_>) -> Result<Outcome> {
    let s = make_structure(&cfg.structure)?;
    let (sched, lim) = (cfg.schedule(), cfg.limit());
    let dim = s.dim();
    let outcome = match args.op {
        DiffOp::Derive => {
            let f = make_map(&cfg.map, s.clone())?;
            let survey = survey_derivative(&f, &cfg.sampling(), &sched, &lim)?;
            let mut header = point_header("x", dim);
            header.extend(point_header("u", dim));
            header.push("eps".into());
            header.extend(point_header("value", f.target.dim()));
            header.extend(["residual".to_string(), "status".to_string()]);
            let mut tr = Trace::new(header);
            for (x, u) in sample_probes(s.as_ref(), &cfg.sampling()) {
                let q = pansu_derivative(&f, &x, &u, &sched, &lim);
                let mut prefix = point_cells(&x);
                prefix.extend(point_cells(&u));
                estimate_rows(&mut tr, &prefix, &q, point_cells);
            }
            Outcome::new(survey.report, tr)
        }
        DiffOp::Chain => {
            let f = make_map(&cfg.map, s.clone())?;
            let then = args
                .then
                .ok_or_else(|| anyhow!("--then <map> is required for the chain rule"))?;
            let g = make_map(then, f.target.clone())?;
            let mut rng = Sampler::new(cfg.seed);
            let origin = Point::zeros(dim);
            let x = match opt_point(args.x, dim)? {
                Some(x) => x,
                None => rng.in_coord_ball(&origin, cfg.radius),
            };
            let us: Vec<Point> = (0..cfg.samples).map(|_| rng.in_coord_ball(&x, cfg.radius)).collect();
            Outcome::records(chain_rule_check(&f, &g, &x, &us, &sched, &lim)?)
        }
        DiffOp::Transport => {
            let f = make_map(&cfg.map, s.clone())?;
            let t = transport_structure(s, &f)?;
            Outcome::records(audit_axioms(&t, &cfg.audit())?.report)
        }
        DiffOp::Equiv => {
            let other = args
                .other
                .ok_or_else(|| anyhow!("--other <structure> is required for equivalence"))?;
            let o = make_structure(other)?;
            let eq = equivalence_check(s.as_ref(), o.as_ref(), &cfg.sampling(), &sched, &lim)?;
            let mut report = eq.report;
            if eq.equivalent {
                report.extend(tangent_iso_check(
                    s.as_ref(),
                    o.as_ref(),
                    &cfg.sampling(),
                    &sched,
                    &lim,
                    args.iso_tol,
                )?);
            }
            Outcome::records(report)
        }
    };
    Ok(outcome)
}

pub struct LookdownArgs<'a> {
    pub op: LookdownOp,
    pub x: Option<&'a str>,
    pub u: Option<&'a str>,
    pub z: Option<&'a str>,
    pub w: Option<&'a str>,
    pub eps: Option<f64>,
    pub lambda: f64,
    pub curve: Option<&'a str>,
}

pub fn lookdown(cfg: &ExperimentConfig, args: &LookdownArgs<'_>) -> Result<Outcome> {
    let p = make_pair(&cfg.pair)?;
    let dim = p.dim();
    let (sched, lim) = (cfg.schedule(), cfg.limit());
    let x = opt_point(args.x, dim)?.unwrap_or_else(|| Point::zeros(dim));
    let z = opt_point(args.z, dim)?;
    let mut report = Report::new(format!("lookdown {:?} for {}", args.op, p.name).to_lowercase());
    let sampled_us = |n: usize| -> Result<Vec<Point>> {
        if let Some(u) = opt_point(args.u, dim)? {
            return Ok(vec![u]);
        }
        let mut rng = Sampler::new(cfg.seed);
        Ok((0..n).map(|_| rng.in_coord_ball(&x, cfg.radius)).collect())
    };
    let outcome = match args.op {
        LookdownOp::Audit => {
            let lc = LookdownConfig {
                sampling: cfg.sampling(),
                schedule: sched,
                limit: lim,
                ..LookdownConfig::default()
            };
            Outcome::records(lookdown_audit(&p, &lc)?)
        }
        LookdownOp::Qeps => {
            let z = z.ok_or_else(|| anyhow!("--z is required"))?;
            let mut header = vec!["eps".to_string()];
            header.extend(point_header("q", dim));
            let mut tr = Trace::new(header);
            for e in sched.points() {
                let mut row = vec![e.value().into()];
                row.extend(point_cells(&q_eps(&p, &x, e, &z)));
                tr.push(row);
            }
            Outcome::new(report, tr)
        }
        LookdownOp::Gap => {
            let z0 = z.ok_or_else(|| anyhow!("--z is required"))?;
            if let Some(eps) = args.eps {
                let e = Scale::new(eps)?;
                let g = distribution_gap(&p, &x, e, &z0, DEFAULT_PROBE_RADIUS, &sched, &lim)?;
                let member = g <= args.lambda;
                report.push(CheckRecord::new("gap", CheckStatus::Pass, g).with_note(format!(
                    "gap {g} at eps {eps}; {} the filter set for lambda {}",
                    if member { "inside" } else { "outside" },
                    args.lambda
                )));
            }
            let w = opt_point(args.w, dim)?.unwrap_or_else(|| Point::zeros(dim));
            let zc = move |e: Scale| z0.axpy(e.value(), &w);
            let cc = check_condition_c(&p, &x, &zc, &sched, &lim);
            report.extend(cc.report);
            let mut tr = Trace::new(["eps", "gap", "vertical"]);
            for (e, g, v) in cc.trace {
                tr.push(vec![e.into(), g.into(), v.into()]);
            }
            Outcome::new(report, tr)
        }
        LookdownOp::Did => {
            let us = sampled_us(cfg.samples)?;
            let mut header = point_header("x", dim);
            header.extend(point_header("u", dim));
            header.push("eps".into());
            header.extend(point_header("value", dim));
            header.extend(["residual".to_string(), "status".to_string()]);
            let mut tr = Trace::new(header);
            let mut worst = Worst::default();
            for u in &us {
                let d = identity_derivative(&p, &x, u, &sched, &lim);
                let mut prefix = point_cells(&x);
                prefix.extend(point_cells(u));
                estimate_rows(&mut tr, &prefix, &d, point_cells);
                convergence(&mut worst, &d, || Witness::new("x,u").point(&x).point(u));
            }
            report.push(worst.into_record("identity-derivative"));
            Outcome::new(report, tr)
        }
        LookdownOp::Projector => Outcome::records(check_projector(&p, &x, &sampled_us(cfg.samples)?, &sched, &lim)),
        LookdownOp::Transfer => {
            let c = make_curve(args.curve.unwrap_or("hline"), dim)?;
            let opts = TransferOptions {
                samples: cfg.samples,
                seed: cfg.seed,
                schedule: sched,
                limit: lim,
                ..TransferOptions::default()
            };
            let t = transfer_probe(&p, &c, &opts)?;
            let mut tr = Trace::new([
                "t",
                "b_derivable",
                "gap_vanishes",
                "vertical_vanishes",
                "a_derivable",
                "mismatch",
            ]);
            for s in &t.samples {
                tr.push(vec![
                    s.t.into(),
                    s.b_derivable.into(),
                    s.gap_vanishes.into(),
                    s.vertical_vanishes.into(),
                    s.a_derivable.into(),
                    s.mismatch.into(),
                ]);
            }
            Outcome::new(t.report, tr)
        }
    };
    Ok(outcome)
}
