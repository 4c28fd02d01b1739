//! Command-line front end. [`run`] takes argv and returns captured output
//! and an exit code, so the binary is a thin wrapper and tests need no
//! subprocesses.
//!
//! Exit codes: 0 success, 1 parse or input error, 2 not foldable or not
//! isolatable, 3 eigensequence failure, 4 verification did not pass.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::expr::{parse_expr_with, parse_rational, Num};
use crate::foldcore::{
    fold, fold_no_inversion, interdependence_degree, is_diagonal, matches_ske_shape, variable_blocks,
    Interdependence,
};
use crate::inverse::{unfold_difference, unfold_ode, UnfoldMode, Unfolding};
use crate::linfold::{eigensequence, iterate_factor_pair, fold_linear_2d, LinearCase, LinearSystem2, PeriodicLinearEq};
use crate::odefold::{fold_ode, integrate_rk4, VectorField};
use crate::sysmodel::{
    iterate_orbit, parse_fn_decls, parse_spec, to_spec_text, Folding, OrbitStatus, Recovery, System, SystemKind,
};
use crate::verify::{
    verify_folding, verify_folding_from, verify_ode_folding, verify_ode_folding_from, Mode, OdeVerifyConfig,
    Status, VerifyConfig, VerifyReport,
};

#[derive(Debug, Parser)]
#[command(name = "sysfold", version, about = "Fold systems of recurrences and ODEs into scalar equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fold a system into one higher-order equation plus recovery equations.
    Fold(FoldArgs),
    /// Dump an orbit or trajectory as CSV.
    Simulate(SimulateArgs),
    /// Check a folding against the original system on random initial states.
    Verify(VerifyArgs),
    /// Factor a periodic second-order linear equation with an eigensequence.
    Eigseq(EigseqArgs),
    /// Find the second component that makes a planar system fold to a target.
    Unfold(UnfoldArgs),
    /// Report the interdependence degree of a system.
    Degree(DegreeArgs),
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// System spec file.
    spec: PathBuf,
    /// Bind a parameter, e.g. `--param a=1/2`.
    #[arg(long = "param", value_name = "NAME=VALUE", allow_hyphen_values = true)]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct FoldArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    pivot: Option<String>,
    /// Fold by backward substitution only.
    #[arg(long)]
    no_inversion: bool,
    /// Write the report to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Comma-separated initial state.
    #[arg(long, allow_hyphen_values = true)]
    init: String,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Step size for differential systems.
    #[arg(long, default_value_t = 1e-2)]
    h: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    pivot: Option<String>,
    #[arg(long)]
    no_inversion: bool,
    /// Defaults to 100 for difference systems and 10 for differential ones.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 30)]
    steps: usize,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Defaults to 1e-9, or 1e-6 for differential systems.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verify from this initial state only.
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long = "t-end", default_value_t = 5.0)]
    t_end: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EigseqArgs {
    #[arg(long = "A", allow_hyphen_values = true)]
    a: String,
    #[arg(long = "B", allow_hyphen_values = true)]
    b: String,
    /// Defaults to zeros.
    #[arg(long = "C", allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, default_value_t = 0)]
    root: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    x0: f64,
    /// Defaults to `r_1 * x0`, the special solution.
    #[arg(long, allow_hyphen_values = true)]
    x1: Option<f64>,
    #[arg(long, default_value_t = 12)]
    steps: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct UnfoldArgs {
    /// First component, in `u`, `v` and the index.
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    /// Target right-hand side, in `u`, `w` and the index.
    #[arg(long, allow_hyphen_values = true)]
    phi: String,
    #[arg(long, default_value = "difference")]
    kind: String,
    #[arg(long, default_value = "general")]
    mode: UnfoldMode,
    /// Declare a function, in spec `fn` syntax (`psi def=u^2`).
    #[arg(long)]
    declare: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DegreeArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    json: bool,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Failure {
    code: i32,
    message: String,
}

fn input(message: impl ToString) -> Failure {
    Failure {
        code: 1,
        message: message.to_string(),
    }
}

fn not_foldable(message: impl ToString) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

type CmdResult = Result<Outcome, Failure>;

/// Runs the CLI on `args`, where `args[0]` is the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    stderr: text,
                    code: 1,
                    ..Outcome::default()
                }
            } else {
                Outcome {
                    stdout: text,
                    ..Outcome::default()
                }
            };
        }
    };
    let result = match cli.command {
        Command::Fold(a) => cmd_fold(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Eigseq(a) => cmd_eigseq(a),
        Command::Unfold(a) => cmd_unfold(a),
        Command::Degree(a) => cmd_degree(a),
    };
    result.unwrap_or_else(|f| Outcome {
        stdout: String::new(),
        stderr: format!("error: {}\n", f.message),
        code: f.code,
    })
}

fn ok(stdout: String) -> CmdResult {
    Ok(Outcome {
        stdout,
        ..Outcome::default()
    })
}

fn load_system(args: &SystemArgs) -> Result<System, Failure> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| input(format!("cannot read {}: {e}", args.spec.display())))?;
    let mut sys = parse_spec(&text).map_err(|e| input(format!("{}: {e}", args.spec.display())))?;
    for binding in &args.params {
        let (name, value) = binding
            .split_once('=')
            .ok_or_else(|| input(format!("--param expects NAME=VALUE, got `{binding}`")))?;
        let name = name.trim();
        if !sys.symbolic.contains(name) && !sys.params.contains_key(name) {
            return Err(input(format!("`{name}` is not a parameter of this system")));
        }
        let value = parse_rational(value).map_err(|e| input(format!("--param {name}: {e}")))?;
        sys = sys.with_param(name, value);
    }
    Ok(sys)
}

fn parse_list(text: &str, what: &str) -> Result<Vec<Num>, Failure> {
    text.split(',')
        .map(|v| {
            parse_rational(v.trim())
                .map(Num::Exact)
                .map_err(|e| input(format!("{what}: {e}")))
        })
        .collect()
}

/// A folding plus the closed-form case when one applied.
struct Folded {
    folding: Folding,
    case: Option<LinearCase>,
}

fn fold_system(sys: &System, pivot: Option<&str>, no_inversion: bool) -> Result<Folded, Failure> {
    if sys.k() > 1 && is_diagonal(sys) {
        return Err(not_foldable("interdependence degree 0: every equation is uncoupled"));
    }
    let blocks = variable_blocks(sys);
    if blocks.len() > 1 {
        return Err(not_foldable(Interdependence::Undefined { blocks }));
    }
    let pivot = pivot.unwrap_or(&sys.vars[0]).to_string();
    if sys.var_index(&pivot).is_none() {
        return Err(input(format!("`{pivot}` is not a state variable")));
    }
    if no_inversion {
        if pivot != sys.vars[0] {
            return Err(input("--no-inversion always pivots on the first variable"));
        }
        return fold_no_inversion(sys)
            .map(|folding| Folded { folding, case: None })
            .map_err(not_foldable);
    }
    if pivot == sys.vars[0] {
        if let Ok(lin) = LinearSystem2::from_system(sys) {
            if let Ok((folding, case)) = fold_linear_2d(&lin) {
                return Ok(Folded {
                    folding,
                    case: Some(case),
                });
            }
        }
    }
    let folding = match sys.kind {
        SystemKind::Ode => fold_ode(sys, &pivot).map_err(not_foldable)?,
        _ => match fold(sys, &pivot) {
            Ok((f, _)) => f,
            Err(err) if pivot == sys.vars[0] && matches_ske_shape(sys) => {
                fold_no_inversion(sys).map_err(|_| not_foldable(err))?
            }
            Err(err) => return Err(not_foldable(err)),
        },
    };
    Ok(Folded { folding, case: None })
}

fn recovery_line(v: &str, r: &Recovery, f: &Folding) -> String {
    match r {
        Recovery::Passive(e) => format!("passive: {v} = {e}"),
        Recovery::Recurrence(e) => match f.equation.kind {
            crate::sysmodel::EqKind::Difference => format!("aux: {v}[n+1] = {e}"),
            crate::sysmodel::EqKind::Ode => format!("aux: {v}' = {e}"),
        },
    }
}

fn fold_report_text(folded: &Folded) -> String {
    let f = &folded.folding;
    let mut out = String::new();
    writeln!(out, "equation: {}", f.equation).unwrap();
    writeln!(out, "pivot: {}", f.pivot).unwrap();
    writeln!(out, "kappa: {}", f.kappa).unwrap();
    for (v, r) in &f.recovery {
        writeln!(out, "{}", recovery_line(v, r, f)).unwrap();
    }
    for c in &f.side_conditions {
        writeln!(out, "side_condition: {c}").unwrap();
    }
    for (j, e) in f.init_map.iter().enumerate() {
        writeln!(out, "init: {} = {e}", f.equation.atom(j)).unwrap();
    }
    if let Some(case) = &folded.case {
        writeln!(out, "case: {case}").unwrap();
    }
    if let Some(d) = &f.decimation {
        writeln!(out, "decimation: {}", d.map).unwrap();
        writeln!(out, "note: decimates to order 1 with stride {}", d.stride).unwrap();
    }
    for n in &f.notes {
        writeln!(out, "note: {n}").unwrap();
    }
    out
}

fn fold_report_json(folded: &Folded) -> Value {
    let f = &folded.folding;
    let recovery: Vec<Value> = f
        .recovery
        .iter()
        .map(|(v, r)| {
            let kind = match r {
                Recovery::Passive(_) => "passive",
                Recovery::Recurrence(_) => "recurrence",
            };
            json!({ "var": v, "kind": kind, "expr": r.expr().to_string() })
        })
        .collect();
    json!({
        "equation": f.equation.to_string(),
        "rhs": f.equation.rhs.to_string(),
        "lead": f.equation.lead.as_ref().map(|e| e.to_string()),
        "pivot": f.pivot,
        "kappa": f.kappa,
        "recovery": recovery,
        "side_conditions": f.side_conditions.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "init": f.init_map.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
        "case": folded.case.as_ref().map(|c| c.to_string()),
        "decimation": f.decimation.as_ref().map(|d| json!({ "stride": d.stride, "map": d.map.to_string() })),
        "notes": f.notes,
    })
}

fn emit(text: String, out: &Option<PathBuf>) -> CmdResult {
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| input(format!("cannot write {}: {e}", path.display())))?;
            ok(String::new())
        }
        None => ok(text),
    }
}

fn cmd_fold(a: FoldArgs) -> CmdResult {
    let sys = load_system(&a.system)?;
    let folded = fold_system(&sys, a.pivot.as_deref(), a.no_inversion)?;
    let text = if a.json {
        format!("{}\n", serde_json::to_string_pretty(&fold_report_json(&folded)).unwrap())
    } else {
        fold_report_text(&folded)
    };
    emit(text, &a.out)
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let sys = load_system(&a.system)?;
    sys.require_numeric().map_err(input)?;
    let init = parse_list(&a.init, "--init")?;
    if init.len() != sys.k() {
        return Err(input(format!("--init needs {} values", sys.k())));
    }
    let mut out = String::new();
    let mut stderr = String::new();
    if sys.kind == SystemKind::Ode {
        let init: Vec<f64> = init.iter().map(Num::to_f64).collect();
        let traj = integrate_rk4(&VectorField::from_system(&sys), &init, 0.0, a.h, a.steps);
        writeln!(out, "t,{}", sys.vars.join(",")).unwrap();
        for (t, y) in traj.grid.iter().zip(&traj.states) {
            let row: Vec<String> = y.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{t},{}", row.join(",")).unwrap();
        }
        if let crate::odefold::TrajectoryStatus::Singular { index, condition, .. } = &traj.status {
            writeln!(stderr, "stopped at grid index {index}: {condition}").unwrap();
        }
    } else {
        let init: Vec<Num> = match a.mode {
            Mode::Exact => init,
            Mode::Float => init.iter().map(|x| Num::Float(x.to_f64())).collect(),
        };
        let orbit = iterate_orbit(&sys, &init, a.steps);
        writeln!(out, "step,{}", sys.vars.join(",")).unwrap();
        for (m, state) in orbit.states.iter().enumerate() {
            let row: Vec<String> = state.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{m},{}", row.join(",")).unwrap();
        }
        if let OrbitStatus::Singular { step, condition, .. } = &orbit.status {
            writeln!(stderr, "stopped at step {step}: {condition} fails").unwrap();
        }
    }
    Ok(Outcome {
        stdout: out,
        stderr,
        code: 0,
    })
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let sys = load_system(&a.system)?;
    let folded = fold_system(&sys, a.pivot.as_deref(), a.no_inversion)?;
    let f = &folded.folding;
    let init = a.init.as_deref().map(|t| parse_list(t, "--init")).transpose()?;
    let report: VerifyReport = if sys.kind == SystemKind::Ode {
        let cfg = OdeVerifyConfig {
            t0: 0.0,
            t_end: a.t_end,
            h: a.h,
            trials: a.trials.unwrap_or(10),
            seed: a.seed,
            tol: a.tol.unwrap_or(1e-6),
        };
        match init {
            Some(init) => {
                let init: Vec<f64> = init.iter().map(Num::to_f64).collect();
                verify_ode_folding_from(&sys, f, &[init], &cfg)
            }
            None => verify_ode_folding(&sys, f, &cfg),
        }
    } else {
        let cfg = VerifyConfig {
            trials: a.trials.unwrap_or(100),
            steps: a.steps,
            seed: a.seed,
            mode: a.mode,
            tol: a.tol.unwrap_or(1e-9),
        };
        match init {
            Some(init) => verify_folding_from(&sys, f, &[init], cfg.steps, cfg.mode, cfg.tol),
            None => verify_folding(&sys, f, &cfg),
        }
    }
    .map_err(|e| input(format!("{e}; bind parameters with --param NAME=VALUE")))?;
    let stdout = if a.json {
        format!("{}\n", report.to_json())
    } else {
        report.to_text()
    };
    Ok(Outcome {
        stdout,
        stderr: String::new(),
        code: if report.status == Status::Pass { 0 } else { 4 },
    })
}

fn cmd_eigseq(a: EigseqArgs) -> CmdResult {
    let eigen_failure = |e: crate::linfold::EigenError| Failure {
        code: 3,
        message: e.to_string(),
    };
    let coef_a = parse_list(&a.a, "--A")?;
    let coef_b = parse_list(&a.b, "--B")?;
    let coef_c = match &a.c {
        Some(c) => parse_list(c, "--C")?,
        None => vec![Num::int(0); coef_a.len()],
    };
    let eq = PeriodicLinearEq::new(coef_a, coef_b, coef_c).map_err(input)?;
    let fac = eigensequence(&eq, a.root).map_err(eigen_failure)?;
    let x1 = a.x1.unwrap_or(fac.r(1) * a.x0);
    let xs = iterate_factor_pair(&fac, a.x0, x1, a.steps);
    let special = fac.is_special(a.x0, x1);
    let rho = fac.growth_factor.abs();
    let behavior = match (special, rho) {
        (true, r) if r > 1.0 => "special solution, decays",
        (true, r) if r < 1.0 => "special solution, grows",
        (true, _) => "special solution, bounded",
        (false, r) if r != 1.0 => "generic solution, unbounded",
        (false, _) => "generic solution, bounded",
    };
    let strs = |v: &[Num]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    if a.json {
        let mut v = serde_json::to_value(&fac).unwrap();
        v["quadratic"] = json!(fac.quadratic_text());
        v["x1"] = json!(x1);
        v["solution"] = json!(xs);
        v["behavior"] = json!(behavior);
        return ok(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()));
    }
    let mut out = String::new();
    writeln!(out, "period: {}", eq.period()).unwrap();
    writeln!(out, "alpha: {}", strs(&fac.alpha).join(", ")).unwrap();
    writeln!(out, "beta: {}", strs(&fac.beta).join(", ")).unwrap();
    writeln!(out, "quadratic: {} = 0", fac.quadratic_text()).unwrap();
    writeln!(out, "roots: {}, {}", fac.roots[0], fac.roots[1]).unwrap();
    writeln!(out, "root: {}", a.root).unwrap();
    let rs: Vec<String> = fac.r_seq.iter().map(|r| r.to_string()).collect();
    writeln!(out, "r: {}", rs.join(", ")).unwrap();
    writeln!(out, "rho: {}", fac.growth_factor).unwrap();
    writeln!(out, "factor: t[n+1] = C[n-1] - B[n-1]*t[n]/r[n]").unwrap();
    writeln!(out, "cofactor: x[n+1] = r[n+1]*x[n] + t[n+1]").unwrap();
    writeln!(out, "behavior: {behavior}").unwrap();
    for (n, x) in xs.iter().enumerate() {
        writeln!(out, "x[{n}] = {x}").unwrap();
    }
    ok(out)
}

fn cmd_unfold(a: UnfoldArgs) -> CmdResult {
    let fns = parse_fn_decls(&a.declare).map_err(|e| input(format!("--declare: {e}")))?;
    let f = parse_expr_with(&a.f, &fns).map_err(|e| input(format!("--f: {e}")))?;
    let phi = parse_expr_with(&a.phi, &fns).map_err(|e| input(format!("--phi: {e}")))?;
    let unfolding: Unfolding = match a.kind.as_str() {
        "difference" => unfold_difference(&f, &phi, a.mode, &fns),
        "ode" => unfold_ode(&f, &phi, &fns),
        other => return Err(input(format!("unknown kind `{other}` (difference, ode)"))),
    }
    .map_err(|e| match e {
        crate::inverse::InverseError::ModeMismatch { .. } | crate::inverse::InverseError::Reserved(_) => input(e),
        _ => not_foldable(e),
    })?;
    let sys = unfolding.to_system(&fns);
    let mut text = format!("# g = {}\n", unfolding.g);
    for c in &unfolding.side_conditions {
        writeln!(text, "# side_condition: {c}").unwrap();
    }
    text.push_str(&to_spec_text(&sys));
    emit(text, &a.out)
}

fn cmd_degree(a: DegreeArgs) -> CmdResult {
    let sys = load_system(&a.system)?;
    let degree = interdependence_degree(&sys);
    if a.json {
        return ok(format!("{}\n", serde_json::to_string(&degree).unwrap()));
    }
    ok(format!("{degree}\n"))
}

