use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dilab::config::ExperimentConfig;
use dilab::suite::{run_suite, RunReport};

mod commands;
mod output;

use commands::{CurveArgs, CurveOp, DiffArgs, DiffOp, LookdownArgs, LookdownOp, TangentArgs, TangentOp};
use output::{emit_report, records_trace};

#[derive(Parser)]
#[command(name = "dilab", version, about = "Numerical experiments on dilatation structures")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Args)]
struct Common {
    /// TOML experiment configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $DILAB_OUT_DIR, then the current directory)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Stem of the JSON and CSV files
    #[arg(long, global = true)]
    out_name: Option<String>,
    /// Worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of random samples
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Sampling radius
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// First scale of the ε schedule
    #[arg(long, global = true)]
    eps0: Option<f64>,
    /// Ratio between successive scales
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// Number of scales
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Tolerance for limit estimates
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Tolerance for exact identities
    #[arg(long, global = true)]
    tol_exact: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the axioms of a dilatation structure
    Audit {
        #[arg(long)]
        structure: Option<String>,
    },
    /// Estimate tangent operations
    Tangent {
        #[arg(long)]
        structure: Option<String>,
        #[arg(long, value_enum)]
        op: Option<TangentOp>,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
    },
    /// Lengths, metric derivatives and derivatives of curves
    Curve {
        #[arg(long)]
        structure: Option<String>,
        #[arg(long)]
        curve: Option<String>,
        #[arg(long, value_enum)]
        op: Option<CurveOp>,
        /// Evaluate at a single parameter value
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        rel_tol: f64,
    },
    /// Derivatives of maps between structures
    Diff {
        #[arg(long)]
        structure: Option<String>,
        #[arg(long)]
        map: Option<String>,
        #[arg(long, value_enum)]
        op: Option<DiffOp>,
        /// Second map for the chain rule
        #[arg(long)]
        then: Option<String>,
        /// Second structure for the equivalence check
        #[arg(long)]
        other: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        iso_tol: f64,
    },
    /// Compare a pair of structures where one looks down on the other
    Lookdown {
        #[arg(long)]
        pair: Option<String>,
        #[arg(long, value_enum)]
        op: Option<LookdownOp>,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        /// Direction in which z moves with ε
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        curve: Option<String>,
    },
    /// Run the full battery of checks
    Suite,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Audit { .. } => "audit",
            Command::Tangent { .. } => "tangent",
            Command::Curve { .. } => "curve",
            Command::Diff { .. } => "diff",
            Command::Lookdown { .. } => "lookdown",
            Command::Suite => "suite",
        }
    }
}

fn load_config(c: &Common, cmd: &Command) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($field:ident <- $src:expr),* $(,)?) => {
            { $(if let Some(v) = $src.clone() { cfg.$field = v; })* }
        };
    }
    set!(seed <- c.seed, samples <- c.samples, radius <- c.radius, eps0 <- c.eps0, ratio <- c.ratio,
         steps <- c.steps, tol_limit <- c.tol, tol_exact <- c.tol_exact, out_name <- c.out_name);
    if let Some(d) = &c.out_dir {
        cfg.out_dir = d.display().to_string();
    }
    match cmd {
        Command::Audit { structure } | Command::Tangent { structure, .. } => set!(structure <- structure),
        Command::Curve { structure, curve, .. } => set!(structure <- structure, curve <- curve),
        Command::Diff { structure, map, .. } => set!(structure <- structure, map <- map),
        Command::Lookdown { pair, .. } => set!(pair <- pair),
        Command::Suite => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    if !cfg.out_dir.is_empty() {
        return cfg.out_dir.clone().into();
    }
    std::env::var_os("DILAB_OUT_DIR")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(j) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let cfg = load_config(&cli.common, &cli.command)?;
    let start = Instant::now();
    let (mut run, trace) = match &cli.command {
        Command::Suite => (run_suite(&cfg), None),
        cmd => {
            let outcome = match cmd {
                Command::Audit { .. } => commands::audit(&cfg)?,
                Command::Tangent { op, x, u, v, .. } => commands::tangent(
                    &cfg,
                    &TangentArgs {
                        op: commands::resolve_op(*op, &cfg, TangentOp::Sum)?,
                        x: x.as_deref(),
                        u: u.as_deref(),
                        v: v.as_deref(),
                    },
                )?,
                Command::Curve { op, t, rel_tol, .. } => commands::curve(
                    &cfg,
                    &CurveArgs {
                        op: commands::resolve_op(*op, &cfg, CurveOp::Length)?,
                        t: *t,
                        rel_tol: *rel_tol,
                    },
                )?,
                Command::Diff {
                    op,
                    then,
                    other,
                    x,
                    iso_tol,
                    ..
                } => commands::diff(
                    &cfg,
                    &DiffArgs {
                        op: commands::resolve_op(*op, &cfg, DiffOp::Derive)?,
                        then: then.as_deref(),
                        other: other.as_deref(),
                        x: x.as_deref(),
                        iso_tol: *iso_tol,
                    },
                )?,
                Command::Lookdown {
                    op,
                    x,
                    u,
                    z,
                    w,
                    eps,
                    lambda,
                    curve,
                    ..
                } => commands::lookdown(
                    &cfg,
                    &LookdownArgs {
                        op: commands::resolve_op(*op, &cfg, LookdownOp::Audit)?,
                        x: x.as_deref(),
                        u: u.as_deref(),
                        z: z.as_deref(),
                        w: w.as_deref(),
                        eps: *eps,
                        lambda: *lambda,
                        curve: curve.as_deref(),
                    },
                )?,
                Command::Suite => unreachable!(),
            };
            let mut run = RunReport::new(cmd.name(), cfg.clone());
            run.absorb("", outcome.report);
            (run, outcome.trace)
        }
    };
    run.wall_clock_secs = start.elapsed().as_secs_f64();
    let trace = trace.unwrap_or_else(|| records_trace(&run));
    for rec in &run.records {
        println!("{:<8} {:<40} {:.3e}", rec.status.to_string(), rec.name, rec.residual);
    }
    let (json, csv) = emit_report(&run, &trace, &out_dir(&cfg), &cfg.out_name)?;
    println!(
        "{}: {} records, {} -> {} {}",
        run.status,
        run.records.len(),
        if run.passed() { "ok" } else { "checks failed" },
        json.display(),
        csv.display()
    );
    Ok(run.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
