//! Command-line front end for `svtcp-core`.
//!
//! Subcommands: `eval`, `solve`, `check`, `probe` and `demo`. With `--json`
//! every command writes one canonical [`Report`] to stdout; identical
//! arguments give byte-identical reports (wall time is only included with
//! `--timing`).
//!
//! Exit codes follow [`exit`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use svtcp_core::classes::{
    check_p_tensor, check_r0, check_s_tensor, check_semipositive, p_violation, probe_sol_boundedness,
    r0_violation, s_certificate_valid, semipositive_violation,
};
use svtcp_core::io::{instance_digest, load_instance, parse_instance, Instance, Report};
use svtcp_core::svtcp::{
    check_limit_r0, check_strongly_semipositive_set, check_weakly_semipositive_set,
    check_zero_unique_solution, is_svtcp_solution, log_grid, membership_c, membership_cprime,
    omega_of, probe_level_boundedness, recurrent_omega_set, sample_nonneg_directions, solve_svtcp,
    svtcp_residual, SvtcpSolveConfig, STRICT_MARGIN,
};
use svtcp_core::tcp::{
    is_feasible, is_solution, natural_residual, solve_diagonal, solve_lcp_enum_tol, solve_tcp,
    DEFAULT_TOL, MAX_ENUM_DIM,
};
use svtcp_core::{
    ClassVerdict, DenseTensor, Error, SearchBudget, SolveReport, SolverConfig, SvtcpInstance,
    TcpInstance, VerdictStatus,
};

/// Process exit codes.
pub mod exit {
    /// Solved, Verified, or a plain evaluation.
    pub const OK: i32 = 0;
    /// Refuted, no solution found, or a witness of unboundedness.
    pub const NEGATIVE: i32 = 1;
    /// Search budget exhausted without a verdict.
    pub const UNKNOWN: i32 = 2;
    pub const USAGE: i32 = 64;
    /// The input parsed but was rejected (schema, validation, preconditions).
    pub const DATA: i32 = 65;
    /// The input file could not be read.
    pub const NO_INPUT: i32 = 66;
    /// Writing the output failed.
    pub const IO: i32 = 74;
}

/// The bundled instance used by `demo example-3-1`.
pub const EXAMPLE_3_1: &str = include_str!("../fixtures/example-3-1.json");

/// Tolerance of the grid-based class checks when `--tol` is not given.
pub const DEFAULT_CHECK_TOL: f64 = 1e-9;

/// Scales of `probe --kind sol` when `--scales` is not given.
pub const DEFAULT_SOL_SCALES: [f64; 7] = [1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];

#[derive(Debug, Parser)]
#[command(name = "svtcp", version, about = "Tensor and set-valued tensor complementarity toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Residual / certificate tolerance (default depends on the command).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Refinement levels of the grid searches.
    #[arg(long, global = true, default_value_t = 8)]
    pub grid_depth: u32,
    /// Multi-start count of the local solver.
    #[arg(long, global = true, default_value_t = 16)]
    pub starts: usize,
    /// Write a machine-readable report to stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Include wall time in the output (reports are then not reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate residuals, Omega(v), r(v) and certificate conditions at a point.
    Eval {
        file: PathBuf,
        /// Comma-separated point, e.g. `--point 1,0`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        /// Also evaluate the single-tensor problem at this parameter value.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        omega: Option<Vec<f64>>,
    },
    /// Solve a tcp or svtcp instance.
    Solve { file: PathBuf },
    /// Run a class checker.
    Check {
        file: PathBuf,
        #[arg(long, value_enum)]
        class: ClassArg,
    },
    /// Probe level boundedness of r (svtcp) or boundedness of SOL (tcp).
    Probe {
        file: PathBuf,
        #[arg(long, value_enum)]
        kind: ProbeKind,
        /// Number of sampled nonnegative directions.
        #[arg(long, default_value_t = 50)]
        directions: usize,
        /// The t grid runs from 1 to 10^t_max_exp.
        #[arg(long, default_value_t = 3)]
        t_max_exp: i32,
        #[arg(long, default_value_t = 4)]
        per_decade: usize,
        /// Level thresholds.
        #[arg(long, value_delimiter = ',', default_values_t = [10.0])]
        alpha: Vec<f64>,
        /// Start scales of the SOL probe.
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
    },
    /// Walk through a bundled instance.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    S,
    Semipositive,
    StrictSemipositive,
    R0,
    P,
    StrongSp,
    WeakSp,
    ZeroUnique,
    LimitR0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    Level,
    Sol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    #[value(name = "example-3-1")]
    Example31,
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Core(Error::Io(_)) => exit::NO_INPUT,
            CliError::Core(_) => exit::DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command produced, before rendering.
pub struct Outcome {
    pub command: String,
    pub digest: String,
    pub tolerances: BTreeMap<String, f64>,
    pub result: Value,
    pub lines: Vec<String>,
    pub code: i32,
}

/// Parses `args` (including the program name), runs the command and writes
/// to `out` / `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let (code, sink): (i32, &mut dyn Write) = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (exit::OK, out),
                _ => (exit::USAGE, err),
            };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let start = Instant::now();
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.code();
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let written = if cli.common.json {
        let report = Report {
            command: outcome.command,
            instance_digest: outcome.digest,
            seed: cli.common.seed,
            tolerances: outcome.tolerances,
            result: outcome.result,
            wall_time_ms: cli.common.timing.then_some(wall_ms),
        };
        out.write_all(report.to_json().as_bytes())
    } else {
        let mut text = outcome.lines.join("\n");
        text.push('\n');
        if cli.common.timing {
            text.push_str(&format!("wall time: {wall_ms:.3} ms\n"));
        }
        out.write_all(text.as_bytes())
    };
    match written {
        Ok(()) => outcome.code,
        Err(e) => {
            let _ = writeln!(err, "error: writing output: {e}");
            exit::IO
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    let c = &cli.common;
    if let Some(t) = c.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Usage(format!("--tol must be finite and nonnegative, got {t}")));
        }
    }
    if c.starts == 0 {
        return Err(CliError::Usage("--starts must be at least 1".into()));
    }
    match &cli.command {
        Command::Eval { file, point, omega } => {
            let inst = load_instance(file)?;
            eval(&inst, point, omega.as_deref(), c)
        }
        Command::Solve { file } => solve(&load_instance(file)?, c),
        Command::Check { file, class } => check(&load_instance(file)?, *class, c),
        Command::Probe {
            file,
            kind,
            directions,
            t_max_exp,
            per_decade,
            alpha,
            scales,
        } => {
            let inst = load_instance(file)?;
            match kind {
                ProbeKind::Level => {
                    probe_level(&inst, *directions, *t_max_exp, *per_decade, alpha, c)
                }
                ProbeKind::Sol => probe_sol(&inst, scales.as_deref(), c),
            }
        }
        Command::Demo { name } => match name {
            DemoName::Example31 => demo_example(c),
        },
    }
}

// ---------------------------------------------------------------------------
// formatting

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_omega(w: &[f64]) -> String {
    if w.len() == 1 {
        format!("{}", w[0])
    } else {
        fmt_vec(w)
    }
}

fn fmt_set(ws: &[Vec<f64>]) -> String {
    let parts: Vec<String> = ws.iter().map(|w| fmt_omega(w)).collect();
    format!("{{{}}}", parts.join(", "))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("core types serialize")
}

fn tolerances(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn verdict_code(v: &ClassVerdict) -> i32 {
    match v.status {
        VerdictStatus::Verified => exit::OK,
        VerdictStatus::Refuted => exit::NEGATIVE,
        VerdictStatus::Unknown => exit::UNKNOWN,
    }
}

fn verdict_lines(name: &str, v: &ClassVerdict) -> Vec<String> {
    let mut lines = vec![format!("{name}: {} ({})", value_name_status(v.status), v.detail)];
    if let Some(c) = &v.certificate {
        lines.push(format!("certificate: {}", fmt_vec(c)));
    }
    if !v.witness_omegas.is_empty() {
        lines.push(format!("witness omegas: {}", fmt_set(&v.witness_omegas)));
    }
    if let Some(m) = v.margin {
        lines.push(format!("margin: {m:e}"));
    }
    lines
}

fn value_name_status(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::Verified => "verified",
        VerdictStatus::Refuted => "refuted",
        VerdictStatus::Unknown => "unknown",
    }
}

fn expect_tensor(inst: &Instance, what: &str) -> CliResult<DenseTensor> {
    match inst {
        Instance::Tensor(b) => Ok(b.clone()),
        Instance::Tcp(t) => Ok(t.tensor().clone()),
        Instance::Svtcp(_) => Err(CliError::Usage(format!(
            "{what} needs a tensor or tcp instance"
        ))),
    }
}

fn expect_svtcp<'a>(inst: &'a Instance, what: &str) -> CliResult<&'a SvtcpInstance> {
    match inst {
        Instance::Svtcp(s) => Ok(s),
        _ => Err(CliError::Usage(format!("{what} needs an svtcp instance"))),
    }
}

fn budget(c: &Common) -> SearchBudget {
    SearchBudget {
        grid_depth: c.grid_depth,
        tol: c.tol.unwrap_or(DEFAULT_CHECK_TOL),
        seed: c.seed,
        ..SearchBudget::default()
    }
}

fn solver_config(c: &Common) -> SolverConfig {
    SolverConfig {
        starts: c.starts,
        tol: c.tol.unwrap_or(DEFAULT_TOL),
        seed: c.seed,
        ..SolverConfig::default()
    }
}

// ---------------------------------------------------------------------------
// eval

fn tensor_conditions(b: &DenseTensor, v: &[f64], tol: f64) -> CliResult<Value> {
    Ok(json!({
        "contraction": b.contract_to_vector(v)?,
        "scalar": b.contract_to_scalar(v)?,
        "semipositive_violation": semipositive_violation(b, v, false)?,
        "strict_semipositive_violation": semipositive_violation(b, v, true)?,
        "r0_violation": r0_violation(b, v, tol)?,
        "p_violation": p_violation(b, v)?,
        "s_certificate": s_certificate_valid(b, v)?,
    }))
}

fn tcp_conditions(t: &TcpInstance, v: &[f64], tol: f64) -> CliResult<Value> {
    let residual = natural_residual(t, v)?;
    let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(json!({
        "map": t.map(v)?,
        "natural_residual": residual,
        "residual_norm": norm,
        "feasible": is_feasible(t, v, tol)?,
        "solution": is_solution(t, v, tol)?,
    }))
}

fn condition_lines(block: &Value) -> Vec<String> {
    block
        .as_object()
        .map(|o| o.iter().map(|(k, v)| format!("{k}: {v}")).collect())
        .unwrap_or_default()
}

fn eval(inst: &Instance, v: &[f64], omega: Option<&[f64]>, c: &Common) -> CliResult<Outcome> {
    if v.len() != inst.dim() {
        return Err(CliError::Usage(format!(
            "--point has {} components, the instance has dimension {}",
            v.len(),
            inst.dim()
        )));
    }
    let tol = c.tol.unwrap_or(DEFAULT_TOL);
    let mut lines = vec![format!("v = {}", fmt_vec(v))];
    let result = match inst {
        Instance::Tensor(b) => {
            if omega.is_some() {
                return Err(CliError::Usage("--omega needs an svtcp instance".into()));
            }
            let t = tensor_conditions(b, v, tol)?;
            lines.extend(condition_lines(&t));
            json!({ "point": v, "tensor": t })
        }
        Instance::Tcp(t) => {
            if omega.is_some() {
                return Err(CliError::Usage("--omega needs an svtcp instance".into()));
            }
            let tcp = tcp_conditions(t, v, tol)?;
            let tensor = tensor_conditions(t.tensor(), v, tol)?;
            lines.extend(condition_lines(&tcp));
            lines.extend(condition_lines(&tensor));
            json!({ "point": v, "tcp": tcp, "tensor": tensor })
        }
        Instance::Svtcp(s) => {
            let omegas = omega_of(s, v)?;
            let merit = svtcp_residual(s, v)?;
            let solution = is_svtcp_solution(s, v, tol)?;
            let strong = svtcp_core::svtcp::set_semipositive_violation(s, v, true)?;
            let weak = svtcp_core::svtcp::set_semipositive_violation(s, v, false)?;
            let in_c = membership_c(s, v, STRICT_MARGIN)?;
            let in_cprime = membership_cprime(s, v, STRICT_MARGIN)?;
            lines.push(format!("Omega(v) = {}", fmt_set(&omegas)));
            lines.push(format!("r(v) = {:e} at w = {}", merit.value, fmt_omega(&merit.omega)));
            lines.push(format!(
                "solution: {}",
                solution.as_ref().map_or("no".to_string(), |w| format!("yes, w = {}", fmt_omega(w)))
            ));
            lines.push(format!("strong set semipositivity violated: {}", strong.is_some()));
            lines.push(format!("weak set semipositivity violated: {}", weak.is_some()));
            lines.push(format!("in C: {}", in_c.is_some()));
            lines.push(format!("in C': {}", in_cprime.is_some()));
            let mut result = json!({
                "point": v,
                "omega_of": omegas,
                "merit": to_value(&merit),
                "solution_omega": solution,
                "strong_sp_violation": strong,
                "weak_sp_violation": weak,
                "membership_c": in_c,
                "membership_cprime": in_cprime,
            });
            if let Some(w) = omega {
                let t = s.tcp_at(w)?;
                let in_omega = omegas.iter().any(|x| x.as_slice() == w);
                let tcp = tcp_conditions(&t, v, tol)?;
                let tensor = tensor_conditions(t.tensor(), v, tol)?;
                lines.push(format!("at w = {} (in Omega(v): {in_omega})", fmt_omega(w)));
                lines.extend(condition_lines(&tcp).into_iter().map(|l| format!("  {l}")));
                lines.extend(condition_lines(&tensor).into_iter().map(|l| format!("  {l}")));
                result["at_omega"] = json!({
                    "omega": w,
                    "in_omega": in_omega,
                    "tcp": tcp,
                    "tensor": tensor,
                });
            }
            result
        }
    };
    Ok(Outcome {
        command: "eval".into(),
        digest: instance_digest(inst),
        tolerances: tolerances(&[("tol", tol), ("strict_margin", STRICT_MARGIN)]),
        result,
        lines,
        code: exit::OK,
    })
}

// ---------------------------------------------------------------------------
// solve

fn solve(inst: &Instance, c: &Common) -> CliResult<Outcome> {
    let cfg = solver_config(c);
    let mut lines = Vec::new();
    let (result, code, tols) = match inst {
        Instance::Tensor(_) => {
            return Err(CliError::Usage("solve needs a tcp or svtcp instance".into()));
        }
        Instance::Tcp(t) => {
            let multistart = solve_tcp(t, &cfg)?;
            let b = t.tensor();
            let diagonal = if b.is_diagonal() && b.diagonal().iter().all(|&d| d > 0.0) {
                Some(solve_diagonal(t)?)
            } else {
                None
            };
            let support_enum = if b.order() == 2 && b.dim() <= MAX_ENUM_DIM {
                Some(solve_lcp_enum_tol(t, cfg.tol)?)
            } else {
                None
            };
            let best: Option<&SolveReport> = [Some(&multistart), diagonal.as_ref(), support_enum.as_ref()]
                .into_iter()
                .flatten()
                .find(|r| r.is_solved());
            match best {
                Some(r) => {
                    lines.push(format!("solved ({}): v = {}", value_name_solver(r), fmt_vec(r.v.as_ref().unwrap())));
                    lines.push(format!("residual: {:e}", r.residual));
                }
                None => lines.push(format!(
                    "no solution found; best residual {:e}",
                    multistart.residual
                )),
            }
            let result = json!({
                "status": if best.is_some() { "solved" } else { "no_solution_found" },
                "solution": best.map(|r| r.v.clone()),
                "multistart": to_value(&multistart),
                "diagonal": diagonal.as_ref().map(to_value),
                "support_enum": support_enum.as_ref().map(to_value),
                "starts": cfg.starts,
            });
            let code = if best.is_some() { exit::OK } else { exit::NEGATIVE };
            (result, code, tolerances(&[("tol", cfg.tol)]))
        }
        Instance::Svtcp(s) => {
            let scfg = SvtcpSolveConfig {
                solver: cfg.clone(),
                ..SvtcpSolveConfig::default()
            };
            let sol = solve_svtcp(s, &scfg)?;
            if sol.pairs.is_empty() {
                lines.push("no solution found".into());
            }
            for p in &sol.pairs {
                lines.push(format!("v = {} with w = {}", fmt_vec(&p.v), fmt_omega(&p.omega)));
            }
            if !sol.complete {
                lines.push(format!(
                    "candidate list truncated after {} parameter values",
                    sol.omegas_examined
                ));
            }
            let code = if sol.pairs.is_empty() { exit::NEGATIVE } else { exit::OK };
            let mut result = to_value(&sol);
            result["status"] = json!(if sol.pairs.is_empty() { "no_solution_found" } else { "solved" });
            result["starts"] = json!(cfg.starts);
            (
                result,
                code,
                tolerances(&[("tol", cfg.tol), ("dedup_tol", scfg.dedup_tol)]),
            )
        }
    };
    Ok(Outcome {
        command: "solve".into(),
        digest: instance_digest(inst),
        tolerances: tols,
        result,
        lines,
        code,
    })
}

fn value_name_solver(r: &SolveReport) -> String {
    to_value(&r.solver).as_str().unwrap_or_default().to_string()
}

// ---------------------------------------------------------------------------
// check

fn check(inst: &Instance, class: ClassArg, c: &Common) -> CliResult<Outcome> {
    let budget = budget(c);
    let name = value_name(class);
    let what = format!("--class {name}");
    let verdict = match class {
        ClassArg::S => check_s_tensor(&expect_tensor(inst, &what)?, &budget),
        ClassArg::Semipositive => check_semipositive(&expect_tensor(inst, &what)?, false, &budget),
        ClassArg::StrictSemipositive => {
            check_semipositive(&expect_tensor(inst, &what)?, true, &budget)
        }
        ClassArg::R0 => check_r0(&expect_tensor(inst, &what)?, &budget),
        ClassArg::P => check_p_tensor(&expect_tensor(inst, &what)?, &budget),
        ClassArg::StrongSp => check_strongly_semipositive_set(expect_svtcp(inst, &what)?, &budget)?,
        ClassArg::WeakSp => check_weakly_semipositive_set(expect_svtcp(inst, &what)?, &budget)?,
        ClassArg::ZeroUnique => check_zero_unique_solution(expect_svtcp(inst, &what)?, &budget)?,
        ClassArg::LimitR0 => check_limit_r0(expect_svtcp(inst, &what)?, &budget)?,
    };
    let mut result = to_value(&verdict);
    result["class"] = json!(name);
    result["grid_depth"] = json!(budget.grid_depth);
    Ok(Outcome {
        command: format!("check --class {name}"),
        digest: instance_digest(inst),
        tolerances: tolerances(&[("tol", budget.tol)]),
        lines: verdict_lines(&name, &verdict),
        code: verdict_code(&verdict),
        result,
    })
}

// ---------------------------------------------------------------------------
// probe

fn probe_level(
    inst: &Instance,
    directions: usize,
    t_max_exp: i32,
    per_decade: usize,
    alphas: &[f64],
    c: &Common,
) -> CliResult<Outcome> {
    let s = expect_svtcp(inst, "--kind level")?;
    if directions == 0 || per_decade == 0 || t_max_exp < 0 {
        return Err(CliError::Usage(
            "--directions and --per-decade must be positive and --t-max-exp nonnegative".into(),
        ));
    }
    let dirs = sample_nonneg_directions(s.dim(), directions, c.seed);
    let grid = log_grid(0, t_max_exp, per_decade);
    let report = probe_level_boundedness(s, &dirs, &grid, alphas)?;
    let t_max = *grid.last().expect("grid is nonempty");
    let mut lines = vec![format!(
        "{} directions, t in [1, {t_max:e}], alpha in {}",
        directions,
        fmt_vec(alphas)
    )];
    for (k, &alpha) in alphas.iter().enumerate() {
        let exceed = report
            .directions
            .iter()
            .filter_map(|d| d.alphas[k].first_exceed)
            .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
        let stay = report.directions.iter().filter(|d| d.alphas[k].bounded).count();
        lines.push(format!(
            "alpha {alpha}: {} of {} directions exceed it (latest first exceedance t = {}), {stay} stay below it up to t_max",
            report.directions.iter().filter(|d| d.alphas[k].first_exceed.is_some()).count(),
            directions,
            exceed.map_or("none".to_string(), |t| format!("{t:e}")),
        ));
    }
    let code = if report.bounded_directions.is_empty() {
        exit::OK
    } else {
        exit::NEGATIVE
    };
    Ok(Outcome {
        command: "probe --kind level".into(),
        digest: instance_digest(inst),
        tolerances: BTreeMap::new(),
        result: to_value(&report),
        lines,
        code,
    })
}

fn probe_sol(inst: &Instance, scales: Option<&[f64]>, c: &Common) -> CliResult<Outcome> {
    let t = match inst {
        Instance::Tcp(t) => t,
        _ => return Err(CliError::Usage("--kind sol needs a tcp instance".into())),
    };
    let cfg = solver_config(c);
    let scales = scales.unwrap_or(&DEFAULT_SOL_SCALES);
    let report = probe_sol_boundedness(t, scales, &cfg)?;
    let mut lines: Vec<String> = report
        .entries
        .iter()
        .map(|e| {
            format!(
                "start scale {:e}: {} |v| = {:e}, residual {:e}",
                e.scale,
                if e.solved { "solved," } else { "not solved," },
                e.norm,
                e.residual
            )
        })
        .collect();
    lines.push(format!(
        "largest solution norm: {}",
        report.max_norm.map_or("none".to_string(), |n| format!("{n:e}"))
    ));
    Ok(Outcome {
        command: "probe --kind sol".into(),
        digest: instance_digest(inst),
        tolerances: tolerances(&[("tol", cfg.tol)]),
        result: to_value(&report),
        lines,
        code: exit::OK,
    })
}

// ---------------------------------------------------------------------------
// demo

const CPRIME_NOTE: &str = "(1, 0) is sometimes listed as a point of C', but B(1) v^2 = (1, 0) \
     has a zero component and B(0) v^2 = 0, so no w in Omega(v) makes B(w) v^2 strictly \
     positive; under the strict definition (1, 0) is not in C'";

fn demo_example(c: &Common) -> CliResult<Outcome> {
    let inst = parse_instance(EXAMPLE_3_1)?;
    let s = expect_svtcp(&inst, "demo")?;
    let budget = budget(c);
    let a = [1.0, 0.0];
    let b = [2.0, 0.0];
    let at_a = omega_of(s, &a)?;
    let at_b = omega_of(s, &b)?;
    let recurrent = recurrent_omega_set(s, &a)?;
    let limit = s.omega_map().limit_set();
    let limit_r0 = check_limit_r0(s, &budget)?;
    let cprime = membership_cprime(s, &a, STRICT_MARGIN)?;
    let in_c = membership_c(s, &a, STRICT_MARGIN)?;
    let images: Vec<Value> = at_a
        .iter()
        .map(|w| {
            Ok(json!({
                "omega": w,
                "contraction": s.family().at(w)?.contract_to_vector(&a)?,
            }))
        })
        .collect::<CliResult<_>>()?;

    let mut lines = vec![
        "B(w) = w * unit tensor (order 3, dimension 2), p = (1, 1)".to_string(),
        "Omega(v) = {0, 1} at v = (1, 0), {0} elsewhere".to_string(),
        String::new(),
        format!("Omega((1, 0)) = {}", fmt_set(&at_a)),
        format!("Omega((2, 0)) = {}", fmt_set(&at_b)),
        format!("recurrent set along (1, 0) = {}", fmt_set(&recurrent)),
        format!("limit set (auto) = {}", fmt_set(&limit)),
    ];
    lines.extend(verdict_lines("limit-r0", &limit_r0));
    lines.push(format!("(1, 0) in C': {}", cprime.is_some()));
    lines.push(format!("(1, 0) in C: {}", in_c.is_some()));
    lines.push(format!("note: {CPRIME_NOTE}"));

    let result = json!({
        "omega_at_1_0": at_a,
        "omega_at_2_0": at_b,
        "recurrent_set_along_1_0": recurrent,
        "limit_set": limit,
        "limit_r0": to_value(&limit_r0),
        "contractions_at_1_0": images,
        "membership_cprime_1_0": cprime.is_some(),
        "membership_c_1_0": in_c.is_some(),
        "note": CPRIME_NOTE,
    });
    Ok(Outcome {
        command: "demo example-3-1".into(),
        digest: instance_digest(&inst),
        tolerances: tolerances(&[("tol", budget.tol), ("strict_margin", STRICT_MARGIN)]),
        result,
        lines,
        code: exit::OK,
    })
}
