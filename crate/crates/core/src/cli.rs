//! Command-line surface: model ingestion, dispatch, CSV and text reports.
//!
//! Exit-code contract: 0 all checks passed, 1 a mathematical check failed,
//! 2 usage error (unknown model or name, malformed flags), 3 numerical
//! abort (partial CSV is still written).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::conserved::{
    dynamical_equiv, gauge_family, geometric_equiv, is_gauge_pair, noether_test,
    nonnoether_monitors, ConservedError, GaugeData, NoetherOutcome,
};
use crate::dynamics::{LagrangianSystem, State};
use crate::expr::{parse, Expr, SampleDomain};
use crate::integrate::{drift, simulate, IntegrateError, Monitor, Trajectory};
use crate::model::{self, Model, ModelError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "algmech",
    version,
    about = "Lagrangian mechanics on Lie algebroids: validation, dynamics, equivalences and conserved quantities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Catalog name (rigid-body, tangent-r1, tangent-r2, harmonic-pair,
    /// rigid-body-broken) or path to a model file
    pub model: String,
    /// Parameter override NAME=VALUE, repeatable
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Load the model even if validation fails; results are flagged
    #[arg(long)]
    pub force: bool,
    /// Seed for all sampled checks
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampling interval LO:HI applied to every coordinate
    #[arg(long, value_name = "LO:HI")]
    pub interval: Option<String>,
    /// Number of sample points per check
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone)]
pub struct InitialState {
    /// Initial base coordinates, comma-separated (omit when the base is a point)
    #[arg(long, value_name = "V1,V2,...")]
    pub x0: Option<String>,
    /// Initial fiber coordinates, comma-separated
    #[arg(long, value_name = "V1,V2,...")]
    pub y0: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check antisymmetry, anchor compatibility and the Jacobi identity
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        /// Residual threshold per identity
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Integrate the Euler-Lagrange dynamics and report monitor drift
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        lagrangian: String,
        #[command(flatten)]
        initial: InitialState,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long = "dt")]
        dt: f64,
        /// Monitor to sample: `energy` or `expr:<expression>`, repeatable
        #[arg(long = "monitor")]
        monitors: Vec<String>,
        /// CSV output path (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Relative-drift threshold for exit code 0
        #[arg(long = "drift-tol", default_value_t = 1e-7)]
        drift_tol: f64,
    },
    /// Test a section for a Nöther symmetry and print the conserved quantity
    Noether {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        lagrangian: String,
        /// Section name from the model
        #[arg(long)]
        section: String,
        /// Gauge function: a functions_on_M name or `expr:<expression>`
        #[arg(long = "h")]
        h: String,
        /// Also integrate and report the drift of the conserved quantity
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        initial: InitialState,
        #[arg(long = "t-end", default_value_t = 10.0)]
        t_end: f64,
        #[arg(long = "dt", default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "drift-tol", default_value_t = 1e-7)]
        drift_tol: f64,
    },
    /// Report geometric / dynamical / gauge equivalence of two Lagrangians
    Equivalence {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        /// 1-form name for the gauge check
        #[arg(long)]
        alpha: Option<String>,
        /// functions_on_M name for the gauge check
        #[arg(long)]
        v: Option<String>,
    },
    /// Drift of characteristic-polynomial invariants of a dynamically
    /// equivalent pair
    Nonnoether {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[command(flatten)]
        initial: InitialState,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long = "dt")]
        dt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "drift-tol", default_value_t = 1e-7)]
        drift_tol: f64,
    },
    /// Verify that flowing along a lifted section yields gauge-equivalent
    /// Lagrangians at the given times
    Family {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        lagrangian: String,
        #[arg(long)]
        section: String,
        /// Comma-separated flow times
        #[arg(long)]
        times: String,
        /// RK4 step for the flow
        #[arg(long = "h-flow", default_value_t = 1e-3)]
        h_flow: f64,
    },
}

/// 17-significant-digit float form used in every CSV cell.
pub fn fmt_float(v: f64) -> String {
    format!("{:.16e}", v)
}

enum CmdError {
    Usage(String),
    Check(String),
    Numeric(String),
}

impl CmdError {
    fn code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => EXIT_USAGE,
            CmdError::Check(_) => EXIT_CHECK_FAILED,
            CmdError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Check(m) | CmdError::Numeric(m) => m,
        }
    }
}

impl From<ModelError> for CmdError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Validation { .. } => CmdError::Check(e.to_string()),
            ModelError::Dynamics(_) => CmdError::Numeric(e.to_string()),
            other => CmdError::Usage(other.to_string()),
        }
    }
}

impl From<ConservedError> for CmdError {
    fn from(e: ConservedError) -> Self {
        match e {
            ConservedError::NotDynamicallyEquivalent { .. }
            | ConservedError::HypothesisViolated { .. }
            | ConservedError::NotNullLagrangian { .. }
            | ConservedError::DecompositionFailed { .. } => CmdError::Check(e.to_string()),
            ConservedError::AlgebroidMismatch | ConservedError::BadMatrixShape => {
                CmdError::Usage(e.to_string())
            }
            other => CmdError::Numeric(other.to_string()),
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate { model, tol } => cmd_validate(&model, tol),
        Command::Simulate {
            model,
            lagrangian,
            initial,
            t_end,
            dt,
            monitors,
            out,
            drift_tol,
        } => cmd_simulate(
            &model,
            &lagrangian,
            &initial,
            t_end,
            dt,
            &monitors,
            out,
            drift_tol,
        ),
        Command::Noether {
            model,
            lagrangian,
            section,
            h,
            simulate,
            initial,
            t_end,
            dt,
            drift_tol,
        } => cmd_noether(
            &model,
            &lagrangian,
            &section,
            &h,
            simulate,
            &initial,
            t_end,
            dt,
            drift_tol,
        ),
        Command::Equivalence {
            model,
            left,
            right,
            alpha,
            v,
        } => cmd_equivalence(&model, &left, &right, alpha.as_deref(), v.as_deref()),
        Command::Nonnoether {
            model,
            left,
            right,
            initial,
            t_end,
            dt,
            out,
            drift_tol,
        } => cmd_nonnoether(&model, &left, &right, &initial, t_end, dt, out, drift_tol),
        Command::Family {
            model,
            lagrangian,
            section,
            times,
            h_flow,
        } => cmd_family(&model, &lagrangian, &section, &times, h_flow),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn parse_params(raw: &[String]) -> Result<Vec<(String, f64)>, CmdError> {
    raw.iter()
        .map(|entry| {
            let (name, value) = entry
                .split_once('=')
                .ok_or_else(|| CmdError::Usage(format!("--param `{entry}` is not NAME=VALUE")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| CmdError::Usage(format!("--param `{entry}`: bad number")))?;
            Ok((name.to_string(), value))
        })
        .collect()
}

fn parse_floats(raw: &str, what: &str) -> Result<Vec<f64>, CmdError> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CmdError::Usage(format!("{what}: `{tok}` is not a number")))
        })
        .collect()
}

fn load_model(args: &ModelArgs) -> Result<Model, CmdError> {
    let overrides = parse_params(&args.params)?;
    let model = model::load(&args.model, &overrides, args.force)?;
    if !model.validated() {
        println!(
            "warning: model `{}` is unvalidated (loaded with --force)",
            model.name()
        );
    }
    Ok(model)
}

fn sample_domain(model: &Model, args: &ModelArgs) -> Result<SampleDomain, CmdError> {
    let mut domain = model.sample_domain().with_seed(args.seed);
    if args.samples < 8 {
        return Err(CmdError::Usage("--samples must be at least 8".into()));
    }
    domain = domain.with_samples(args.samples);
    if let Some(spec) = &args.interval {
        let (lo, hi) = spec
            .split_once(':')
            .ok_or_else(|| CmdError::Usage(format!("--interval `{spec}` is not LO:HI")))?;
        let lo: f64 = lo
            .parse()
            .map_err(|_| CmdError::Usage(format!("--interval `{spec}`: bad number")))?;
        let hi: f64 = hi
            .parse()
            .map_err(|_| CmdError::Usage(format!("--interval `{spec}`: bad number")))?;
        if lo >= hi || lo.is_nan() || hi.is_nan() {
            return Err(CmdError::Usage(format!(
                "--interval `{spec}` is degenerate"
            )));
        }
        domain = domain.with_all_intervals(lo, hi);
    }
    Ok(domain)
}

fn initial_state(model: &Model, initial: &InitialState) -> Result<State, CmdError> {
    let m = model.algebroid.base_dim();
    let p = model.algebroid.rank();
    let x = match &initial.x0 {
        Some(raw) => parse_floats(raw, "--x0")?,
        None => Vec::new(),
    };
    let y0 = initial
        .y0
        .as_deref()
        .ok_or_else(|| CmdError::Usage("--y0 is required here".into()))?;
    let y = parse_floats(y0, "--y0")?;
    if x.len() != m {
        return Err(CmdError::Usage(format!(
            "--x0 needs {m} values, got {}",
            x.len()
        )));
    }
    if y.len() != p {
        return Err(CmdError::Usage(format!(
            "--y0 needs {p} values, got {}",
            y.len()
        )));
    }
    State::new(x, y).map_err(|e| CmdError::Usage(e.to_string()))
}

fn check_run_config(t_end: f64, dt: f64) -> Result<(), CmdError> {
    if t_end <= 0.0 || t_end.is_nan() {
        return Err(CmdError::Usage(format!("--t-end {t_end} must be positive")));
    }
    if dt <= 0.0 || dt.is_nan() {
        return Err(CmdError::Usage(format!("--dt {dt} must be positive")));
    }
    Ok(())
}

fn build_monitors(
    model: &Model,
    sys: &LagrangianSystem,
    specs: &[String],
) -> Result<Vec<Monitor>, CmdError> {
    specs
        .iter()
        .map(|spec| {
            if spec == "energy" {
                Ok(Monitor::energy(sys))
            } else if let Some(text) = spec.strip_prefix("expr:") {
                let expr = parse(text, &model.scope())
                    .map_err(|e| CmdError::Usage(format!("--monitor `{spec}`: {e}")))?;
                Ok(Monitor::from_expr(text, expr, &model.algebroid))
            } else {
                Err(CmdError::Usage(format!(
                    "--monitor `{spec}` must be `energy` or `expr:<expression>`"
                )))
            }
        })
        .collect()
}

fn resolve_h(model: &Model, spec: &str) -> Result<Expr, CmdError> {
    if let Some(text) = spec.strip_prefix("expr:") {
        parse(text, &model.scope()).map_err(|e| CmdError::Usage(format!("--h `{spec}`: {e}")))
    } else {
        Ok(model.function_on_m(spec)?.clone())
    }
}

/// Writes a trajectory as CSV: `t`, coordinates, then monitor columns.
fn write_state_csv(
    model: &Model,
    traj: &Trajectory,
    out: Option<&PathBuf>,
) -> Result<(), CmdError> {
    let mut header = vec!["t".to_string()];
    header.extend(model.algebroid.coord_names().iter().map(|n| n.to_string()));
    header.extend(traj.monitors.iter().map(|(n, _)| n.clone()));
    let rows = traj.times.iter().enumerate().map(|(k, t)| {
        let mut row = vec![fmt_float(*t)];
        row.extend(traj.states[k].flat().iter().map(|v| fmt_float(*v)));
        row.extend(traj.monitors.iter().map(|(_, series)| fmt_float(series[k])));
        row
    });
    write_csv(header, rows, out)
}

/// Writes only `t` plus the monitor columns.
fn write_monitor_csv(traj: &Trajectory, out: Option<&PathBuf>) -> Result<(), CmdError> {
    let mut header = vec!["t".to_string()];
    header.extend(traj.monitors.iter().map(|(n, _)| n.clone()));
    let rows = traj.times.iter().enumerate().map(|(k, t)| {
        let mut row = vec![fmt_float(*t)];
        row.extend(traj.monitors.iter().map(|(_, series)| fmt_float(series[k])));
        row
    });
    write_csv(header, rows, out)
}

fn write_csv(
    header: Vec<String>,
    rows: impl Iterator<Item = Vec<String>>,
    out: Option<&PathBuf>,
) -> Result<(), CmdError> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CmdError::Usage(format!("cannot write `{}`: {e}", path.display()))),
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

/// Report lines go to stderr whenever the CSV occupies stdout.
fn report_line(to_stderr: bool, text: String) {
    if to_stderr {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
}

fn print_drift(report: &crate::integrate::DriftReport, to_stderr: bool) {
    report_line(to_stderr, "drift report:".to_string());
    for entry in &report.entries {
        report_line(
            to_stderr,
            format!(
                "  {}: initial {:.17e}  max-deviation {:.3e}  relative-drift {:.3e}",
                entry.name, entry.initial, entry.max_deviation, entry.relative_drift
            ),
        );
    }
}

fn cmd_validate(args: &ModelArgs, tol: f64) -> Result<i32, CmdError> {
    let overrides = parse_params(&args.params)?;
    // validation is the point here, so a failing model must still load
    let model = model::load(&args.model, &overrides, true)?;
    let domain = sample_domain(&model, args)?;
    let report = model
        .algebroid
        .validate_with_tolerance(&domain, tol)
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
    println!("model: {}", model.name());
    for (name, check) in [
        ("antisymmetry", report.antisymmetry),
        ("anchor", report.anchor),
        ("jacobi", report.jacobi),
    ] {
        println!(
            "{name}: residual {:.3e} {}",
            check.max_residual,
            if check.pass { "pass" } else { "FAIL" }
        );
    }
    println!("result: {}", if report.passed() { "pass" } else { "FAIL" });
    Ok(if report.passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    args: &ModelArgs,
    lagrangian: &str,
    initial: &InitialState,
    t_end: f64,
    dt: f64,
    monitor_specs: &[String],
    out: Option<PathBuf>,
    drift_tol: f64,
) -> Result<i32, CmdError> {
    check_run_config(t_end, dt)?;
    let model = load_model(args)?;
    let sys = model.system(lagrangian)?;
    let s0 = initial_state(&model, initial)?;
    let monitors = build_monitors(&model, &sys, monitor_specs)?;

    match simulate(&sys, &s0, t_end, dt, &monitors) {
        Ok(traj) => {
            let to_stderr = out.is_none();
            write_state_csv(&model, &traj, out.as_ref())?;
            report_line(
                to_stderr,
                format!("model: {}  lagrangian: {}", model.name(), lagrangian),
            );
            report_line(
                to_stderr,
                format!("samples: {}  t-end: {}  dt: {}", traj.len(), t_end, dt),
            );
            if traj.monitors.is_empty() {
                report_line(to_stderr, "result: pass".to_string());
                return Ok(EXIT_PASS);
            }
            let report = drift(&traj).map_err(|e| CmdError::Numeric(e.to_string()))?;
            print_drift(&report, to_stderr);
            let pass = report.max_relative_drift() <= drift_tol;
            report_line(
                to_stderr,
                format!("result: {}", if pass { "pass" } else { "FAIL" }),
            );
            Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
        }
        Err(IntegrateError::Aborted { t, reason, partial }) => {
            write_state_csv(&model, &partial, out.as_ref())?;
            eprintln!("aborted at t = {t}: {reason}");
            Ok(EXIT_NUMERIC)
        }
        Err(e) => Err(CmdError::Usage(e.to_string())),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_noether(
    args: &ModelArgs,
    lagrangian: &str,
    section: &str,
    h_spec: &str,
    run_sim: bool,
    initial: &InitialState,
    t_end: f64,
    dt: f64,
    drift_tol: f64,
) -> Result<i32, CmdError> {
    let model = load_model(args)?;
    let sys = model.system(lagrangian)?;
    let x = model.section(section)?.clone();
    let h = resolve_h(&model, h_spec)?;
    let domain = sample_domain(&model, args)?;

    match noether_test(&sys, &x, &h, None, &domain)? {
        NoetherOutcome::Conserved(cert) => {
            println!("symmetry: pass  residual {:.3e}", cert.residual);
            println!("conserved: f = {}", cert.conserved);
            if !run_sim {
                return Ok(EXIT_PASS);
            }
            check_run_config(t_end, dt)?;
            let s0 = initial_state(&model, initial)?;
            let monitor = Monitor::from_expr("f", cert.conserved.clone(), &model.algebroid);
            match simulate(&sys, &s0, t_end, dt, &[monitor]) {
                Ok(traj) => {
                    let report = drift(&traj).map_err(|e| CmdError::Numeric(e.to_string()))?;
                    print_drift(&report, false);
                    let pass = report.max_relative_drift() <= drift_tol;
                    println!("result: {}", if pass { "pass" } else { "FAIL" });
                    Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
                }
                Err(IntegrateError::Aborted { t, reason, .. }) => {
                    eprintln!("aborted at t = {t}: {reason}");
                    Ok(EXIT_NUMERIC)
                }
                Err(e) => Err(CmdError::Usage(e.to_string())),
            }
        }
        NoetherOutcome::NotSymmetric { residual } => {
            println!("symmetry: FAIL  residual {:.3e}", residual);
            Ok(EXIT_CHECK_FAILED)
        }
    }
}

fn cmd_equivalence(
    args: &ModelArgs,
    left: &str,
    right: &str,
    alpha: Option<&str>,
    v: Option<&str>,
) -> Result<i32, CmdError> {
    let model = load_model(args)?;
    let lhs = model.system(left)?;
    let rhs = model.system(right)?;
    let domain = sample_domain(&model, args)?;

    let geometric = geometric_equiv(&lhs, &rhs, &domain)?;
    println!(
        "geometric: {}  residual {:.3e}",
        if geometric.pass { "pass" } else { "FAIL" },
        geometric.residual
    );
    let dynamical = dynamical_equiv(&lhs, &rhs, &domain)?;
    println!(
        "dynamical: {}  residual {:.3e}",
        if dynamical.pass { "pass" } else { "FAIL" },
        dynamical.residual
    );
    let mut pass = geometric.pass && dynamical.pass;

    match (alpha, v) {
        (Some(alpha), Some(v)) => {
            let gauge = GaugeData {
                alpha: model.one_form(alpha)?.clone(),
                v: model.function_on_m(v)?.clone(),
            };
            let check = is_gauge_pair(&lhs, &rhs, &gauge, &domain)?;
            println!(
                "gauge: {}  lagrangian-residual {:.3e}  alpha-closed {:.3e}  v-closed {:.3e}",
                if check.pass { "pass" } else { "FAIL" },
                check.lagrangian_residual,
                check.alpha_closed_residual,
                check.v_closed_residual
            );
            pass &= check.pass;
        }
        (None, None) => println!("gauge: not checked (pass --alpha and --v)"),
        _ => {
            return Err(CmdError::Usage(
                "--alpha and --v must be given together".into(),
            ))
        }
    }

    println!("result: {}", if pass { "pass" } else { "FAIL" });
    Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

#[allow(clippy::too_many_arguments)]
fn cmd_nonnoether(
    args: &ModelArgs,
    left: &str,
    right: &str,
    initial: &InitialState,
    t_end: f64,
    dt: f64,
    out: Option<PathBuf>,
    drift_tol: f64,
) -> Result<i32, CmdError> {
    check_run_config(t_end, dt)?;
    let model = load_model(args)?;
    let lhs = model.system(left)?;
    let rhs = model.system(right)?;
    let domain = sample_domain(&model, args)?;

    let monitors = match nonnoether_monitors(&lhs, &rhs, &domain, args.force) {
        Ok(monitors) => monitors,
        Err(ConservedError::NotDynamicallyEquivalent { residual }) => {
            println!(
                "dynamical equivalence: FAIL  residual {:.3e} (re-run with --force to override)",
                residual
            );
            return Ok(EXIT_CHECK_FAILED);
        }
        Err(e) => return Err(e.into()),
    };
    if args.force {
        println!("warning: equivalence check skipped (--force)");
    }

    let s0 = initial_state(&model, initial)?;
    match simulate(&lhs, &s0, t_end, dt, &monitors) {
        Ok(traj) => {
            let to_stderr = out.is_none();
            write_monitor_csv(&traj, out.as_ref())?;
            let report = drift(&traj).map_err(|e| CmdError::Numeric(e.to_string()))?;
            print_drift(&report, to_stderr);
            let pass = report.max_relative_drift() <= drift_tol;
            report_line(
                to_stderr,
                format!("result: {}", if pass { "pass" } else { "FAIL" }),
            );
            Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
        }
        Err(IntegrateError::Aborted { t, reason, partial }) => {
            write_monitor_csv(&partial, out.as_ref())?;
            eprintln!("aborted at t = {t}: {reason}");
            Ok(EXIT_NUMERIC)
        }
        Err(e) => Err(CmdError::Usage(e.to_string())),
    }
}

fn cmd_family(
    args: &ModelArgs,
    lagrangian: &str,
    section: &str,
    times: &str,
    h_flow: f64,
) -> Result<i32, CmdError> {
    if h_flow <= 0.0 || h_flow.is_nan() {
        return Err(CmdError::Usage(format!(
            "--h-flow {h_flow} must be positive"
        )));
    }
    let model = load_model(args)?;
    let sys = model.system(lagrangian)?;
    let x = model.section(section)?.clone();
    let ts = parse_floats(times, "--times")?;
    if ts.is_empty() {
        return Err(CmdError::Usage("--times needs at least one value".into()));
    }
    let domain = sample_domain(&model, args)?;

    let report = gauge_family(&sys, &x, &ts, h_flow, &domain)?;
    println!("hypothesis: pass (beta and remainder closed)");
    println!(
        "{:<8} {:<13} {:<13} {:<13} verdict",
        "t", "fiber-indep", "form-closed", "remainder"
    );
    for check in &report.checks {
        println!(
            "{:<8} {:<13} {:<13} {:<13} {}",
            check.t,
            format!("{:.3e}", check.fiber_independence),
            format!("{:.3e}", check.form_closedness),
            format!("{:.3e}", check.remainder_closedness),
            if check.pass { "pass" } else { "FAIL" }
        );
    }
    let pass = report.all_pass();
    println!("result: {}", if pass { "pass" } else { "FAIL" });
    Ok(if pass { EXIT_PASS } else { EXIT_CHECK_FAILED })
}
