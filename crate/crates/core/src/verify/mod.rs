//! Brute-force verification of foldings against the original system.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::{ExprError, FnRegistry, Num};
use crate::odefold::{folded_initial_state, integrate_rk4, recover_flow, Trajectory, VectorField};
use crate::sysmodel::{
    iterate_equation, iterate_orbit, recover_components, EqKind, Folding, HigherOrderEq,
    OrbitStatus, ScalarSeq, SingularOrigin, System, SystemError,
};

/// Bound on numerators and denominators of random exact seeds.
pub const SEED_BOUND: i64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Float,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(format!("unknown mode `{other}` (exact, float)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Degenerate,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularEvent {
    pub trial: usize,
    pub step: usize,
    pub condition: String,
    /// `consistent`, `equation-only solution`, `outside folding domain`,
    /// `system only` or `mismatch`.
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub horizon: usize,
    pub trials: usize,
    pub max_abs_dev: f64,
    /// Flow checks only: largest `|a - b| / max(1, |a|)`, the quantity
    /// compared against the tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_scaled_dev: Option<f64>,
    pub first_divergence: Option<(usize, usize)>,
    pub singular_events: Vec<SingularEvent>,
    pub status: Status,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerifyReport {
    /// One `key: value` line per field.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mode = match self.mode {
            Mode::Exact => "exact",
            Mode::Float => "float",
        };
        out.push_str(&format!("mode: {mode}\n"));
        out.push_str(&format!("horizon: {}\n", self.horizon));
        out.push_str(&format!("trials: {}\n", self.trials));
        out.push_str(&format!("max_abs_dev: {:e}\n", self.max_abs_dev));
        if let Some(d) = self.max_scaled_dev {
            out.push_str(&format!("max_scaled_dev: {d:e}\n"));
        }
        match self.first_divergence {
            Some((trial, step)) => out.push_str(&format!("first_divergence: trial {trial} step {step}\n")),
            None => out.push_str("first_divergence: none\n"),
        }
        out.push_str(&format!("singular_events: {}\n", self.singular_events.len()));
        for e in &self.singular_events {
            out.push_str(&format!(
                "  trial {} step {}: {} ({})\n",
                e.trial, e.step, e.condition, e.kind
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out.push_str(&format!("status: {}\n", self.status));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("folding still has symbolic parameters: {0}")]
    SymbolicFolding(String),
    #[error("initial state has {got} components, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("decimation check needs s[n+k] = F(s[n]) and a first-order map: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub trials: usize,
    pub steps: usize,
    pub seed: u64,
    pub mode: Mode,
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            trials: 100,
            steps: 30,
            seed: 0,
            mode: Mode::Exact,
            tol: 1e-9,
        }
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> Num {
    let p = rng.gen_range(-SEED_BOUND..=SEED_BOUND);
    let q = rng.gen_range(1..=SEED_BOUND);
    Num::Exact(BigRational::new(BigInt::from(p), BigInt::from(q)))
}

/// Random initial states: bounded rationals in exact mode, uniform floats in
/// `[-1, 1]` otherwise.
pub fn random_states(k: usize, trials: usize, seed: u64, mode: Mode) -> Vec<Vec<Num>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            (0..k)
                .map(|_| match mode {
                    Mode::Exact => random_rational(&mut rng),
                    Mode::Float => Num::Float(rng.gen_range(-1.0..=1.0)),
                })
                .collect()
        })
        .collect()
}

fn check_ready(sys: &System, f: &Folding) -> Result<(), VerifyError> {
    sys.require_numeric()?;
    let symbolic: Vec<String> = f
        .equation
        .rhs
        .referenced_names()
        .into_iter()
        .filter(|n| *n != f.equation.seq && !sys.vars.contains(n))
        .collect();
    if let Some(name) = symbolic.first() {
        return Err(VerifyError::SymbolicFolding(name.clone()));
    }
    Ok(())
}

/// Random-trial verification of a difference-system folding.
pub fn verify_folding(sys: &System, f: &Folding, cfg: &VerifyConfig) -> Result<VerifyReport, VerifyError> {
    let inits = random_states(sys.k(), cfg.trials, cfg.seed, cfg.mode);
    verify_folding_from(sys, f, &inits, cfg.steps, cfg.mode, cfg.tol)
}

fn to_mode(x: &Num, mode: Mode) -> Num {
    match mode {
        Mode::Exact => x.clone(),
        Mode::Float => Num::Float(x.to_f64()),
    }
}

/// Verification from the given initial states.
///
/// Singularities are compared directionally: the folded equation may have
/// solutions the system cannot realize, and those are logged rather than
/// failed.
pub fn verify_folding_from(
    sys: &System,
    f: &Folding,
    inits: &[Vec<Num>],
    steps: usize,
    mode: Mode,
    tol: f64,
) -> Result<VerifyReport, VerifyError> {
    check_ready(sys, f)?;
    let mut report = VerifyReport {
        mode,
        horizon: steps,
        trials: inits.len(),
        max_abs_dev: 0.0,
        max_scaled_dev: None,
        first_divergence: None,
        singular_events: Vec::new(),
        status: Status::Pass,
        notes: Vec::new(),
    };
    if let Some(d) = &f.decimation {
        report.notes.push(format!("decimates to order 1 with stride {}", d.stride));
    }
    // Float orbits may grow geometrically, so rounding is judged relative to
    // the system value, as in the flow comparison.
    if mode == Mode::Float {
        report.max_scaled_dev = Some(0.0);
    }
    let mut early_singular = 0;
    let mut failed = false;
    for (trial, init) in inits.iter().enumerate() {
        if init.len() != sys.k() {
            return Err(VerifyError::Dimension {
                expected: sys.k(),
                got: init.len(),
            });
        }
        let init: Vec<Num> = init.iter().map(|x| to_mode(x, mode)).collect();
        let orbit = iterate_orbit(sys, &init, steps);
        let s = match f.initial_values(&init, Num::int(0)) {
            Ok(s0) => iterate_equation(&f.equation, &s0, steps + f.max_offset(), &f.fns),
            Err(e) => ScalarSeq {
                values: Vec::new(),
                status: OrbitStatus::Singular {
                    step: 0,
                    condition: init_failure(&e),
                    origin: SingularOrigin::Equation,
                },
            },
        };
        let rec = recover_components(f, &s, sys, &init, steps);

        for (m, (a, b)) in orbit.states.iter().zip(&rec.states).enumerate() {
            let mut diverged = false;
            for (x, y) in a.iter().zip(b) {
                let dev = x.abs_diff(y);
                report.max_abs_dev = report.max_abs_dev.max(dev);
                diverged |= match (mode, report.max_scaled_dev.as_mut()) {
                    (Mode::Float, Some(worst)) => {
                        let scaled = dev / x.to_f64().abs().max(1.0);
                        *worst = worst.max(scaled);
                        !(scaled <= tol)
                    }
                    _ => dev > 0.0,
                };
            }
            if diverged && report.first_divergence.is_none() {
                report.first_divergence = Some((trial, m));
            }
        }

        let sys_stop = orbit.status.singular_step();
        let rec_stop = rec.status.singular_step();
        if sys_stop.or(rec_stop).is_some_and(|m| m < 3) {
            early_singular += 1;
        }
        let event = |step, condition: &str, kind: &str| SingularEvent {
            trial,
            step,
            condition: condition.to_string(),
            kind: kind.to_string(),
        };
        match (&orbit.status, &rec.status) {
            (OrbitStatus::Completed, OrbitStatus::Completed) => {}
            (OrbitStatus::Singular { step, condition, .. }, OrbitStatus::Singular { step: r, .. }) if step == r => {
                let equation_continues = s.values.len() > step + f.max_offset() + 1;
                let kind = if equation_continues {
                    "equation-only solution"
                } else {
                    "consistent"
                };
                report.singular_events.push(event(*step, condition, kind));
            }
            (_, OrbitStatus::Singular { step, condition, origin })
                if sys_stop.is_none_or(|m| *step < m) && *origin != SingularOrigin::SystemGuard =>
            {
                report.singular_events.push(event(*step, condition, "outside folding domain"));
            }
            (OrbitStatus::Singular { step, condition, .. }, _) => {
                failed = true;
                report.singular_events.push(event(*step, condition, "mismatch"));
            }
            (_, OrbitStatus::Singular { step, condition, .. }) => {
                failed = true;
                report.singular_events.push(event(*step, condition, "mismatch"));
            }
        }
    }
    report.status = if failed || report.first_divergence.is_some() {
        Status::Fail
    } else if !inits.is_empty() && early_singular == inits.len() {
        Status::Degenerate
    } else {
        Status::Pass
    };
    Ok(report)
}

fn init_failure(e: &ExprError) -> String {
    match e {
        ExprError::DivisionByZero(d) => format!("{d} != 0"),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeVerifyConfig {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for OdeVerifyConfig {
    fn default() -> Self {
        OdeVerifyConfig {
            t0: 0.0,
            t_end: 2.0,
            h: 1e-3,
            trials: 10,
            seed: 0,
            tol: 1e-6,
        }
    }
}

/// Random-trial verification of a differential folding.
pub fn verify_ode_folding(sys: &System, f: &Folding, cfg: &OdeVerifyConfig) -> Result<VerifyReport, VerifyError> {
    let inits: Vec<Vec<f64>> = random_states(sys.k(), cfg.trials, cfg.seed, Mode::Float)
        .into_iter()
        .map(|v| v.iter().map(Num::to_f64).collect())
        .collect();
    verify_ode_folding_from(sys, f, &inits, cfg)
}

/// Integrates the system and the folded equation on the same grid from
/// matched initial data and compares every component.
pub fn verify_ode_folding_from(
    sys: &System,
    f: &Folding,
    inits: &[Vec<f64>],
    cfg: &OdeVerifyConfig,
) -> Result<VerifyReport, VerifyError> {
    check_ready(sys, f)?;
    let steps = ((cfg.t_end - cfg.t0) / cfg.h).round() as usize;
    let sys_field = VectorField::from_system(sys);
    let eq_field = VectorField::from_folding(f);
    let mut report = VerifyReport {
        mode: Mode::Float,
        horizon: steps,
        trials: inits.len(),
        max_abs_dev: 0.0,
        max_scaled_dev: Some(0.0),
        first_divergence: None,
        singular_events: Vec::new(),
        status: Status::Pass,
        notes: Vec::new(),
    };
    let mut max_scaled: f64 = 0.0;
    let mut early_singular = 0;
    for (trial, init) in inits.iter().enumerate() {
        if init.len() != sys.k() {
            return Err(VerifyError::Dimension {
                expected: sys.k(),
                got: init.len(),
            });
        }
        let flow = integrate_rk4(&sys_field, init, cfg.t0, cfg.h, steps);
        let folded = match folded_initial_state(f, sys, init, cfg.t0) {
            Ok(y0) => integrate_rk4(&eq_field, &y0, cfg.t0, cfg.h, steps),
            Err(e) => Trajectory {
                grid: Vec::new(),
                states: Vec::new(),
                status: crate::odefold::TrajectoryStatus::Singular {
                    index: 0,
                    condition: init_failure(&e),
                    crossing: false,
                },
            },
        };
        let (recovered, passive_stop) = recover_flow(f, sys, &folded);
        for (i, (a, b)) in flow.states.iter().zip(&recovered).enumerate() {
            let mut abs_dev: f64 = 0.0;
            let mut scaled: f64 = 0.0;
            for (x, y) in a.iter().zip(b) {
                let d = (x - y).abs();
                let d = if d.is_nan() { f64::INFINITY } else { d };
                abs_dev = abs_dev.max(d);
                scaled = scaled.max(d / x.abs().max(1.0));
            }
            report.max_abs_dev = report.max_abs_dev.max(abs_dev);
            max_scaled = max_scaled.max(scaled);
            if scaled > cfg.tol && report.first_divergence.is_none() {
                report.first_divergence = Some((trial, i));
            }
        }
        let sys_stop = flow.singular_index();
        let eq_stop = folded.singular_index().or(passive_stop.as_ref().map(|(i, _)| *i));
        if sys_stop.or(eq_stop).is_some_and(|m| m < 3) {
            early_singular += 1;
        }
        let describe = |t: &Trajectory| match &t.status {
            crate::odefold::TrajectoryStatus::Singular { condition, crossing, .. } => {
                format!("{condition}{}", if *crossing { " (crossing)" } else { "" })
            }
            _ => String::new(),
        };
        match (sys_stop, eq_stop) {
            (None, None) => {}
            (Some(a), Some(b)) if a == b => report.singular_events.push(SingularEvent {
                trial,
                step: a,
                condition: describe(&flow),
                kind: "consistent".into(),
            }),
            (_, Some(b)) if sys_stop.is_none_or(|a| b < a) => {
                let condition = match &passive_stop {
                    Some((i, c)) if *i == b => c.clone(),
                    _ => describe(&folded),
                };
                report.singular_events.push(SingularEvent {
                    trial,
                    step: b,
                    condition,
                    kind: "folding singular".into(),
                });
            }
            (Some(a), _) => report.singular_events.push(SingularEvent {
                trial,
                step: a,
                condition: describe(&flow),
                kind: "system singular".into(),
            }),
            (None, Some(_)) => unreachable!("handled above"),
        }
    }
    report.max_scaled_dev = Some(max_scaled);
    report.status = if report.first_divergence.is_some() {
        Status::Fail
    } else if !inits.is_empty() && early_singular == inits.len() {
        Status::Degenerate
    } else {
        Status::Pass
    };
    Ok(report)
}

/// Checks that `s[n+k] = F(s[n])` splits into `k` interleaved orbits of
/// `t[j+1] = F(t[j])`, exactly, from the given initial values.
pub fn decimation_check(
    eq: &HigherOrderEq,
    map: &HigherOrderEq,
    init: &[Num],
    steps: usize,
    fns: &FnRegistry,
) -> Result<bool, VerifyError> {
    let offsets = eq.offsets();
    if eq.kind != EqKind::Difference || offsets.iter().any(|&j| j != 0) || eq.lead.is_some() {
        return Err(VerifyError::Precondition(format!("{eq} depends on more than s[n]")));
    }
    if map.order != 1 || map.kind != EqKind::Difference {
        return Err(VerifyError::Precondition(format!("{map} is not first order")));
    }
    if init.len() != eq.order {
        return Err(VerifyError::Dimension {
            expected: eq.order,
            got: init.len(),
        });
    }
    let k = eq.order;
    let full = iterate_equation(eq, init, steps, fns);
    for i in 0..k {
        let expected: Vec<&Num> = full.values.iter().skip(i).step_by(k).collect();
        let leg = iterate_equation(map, &init[i..=i], expected.len().saturating_sub(1), fns);
        let n = expected.len().min(leg.values.len());
        if expected[..n].iter().zip(&leg.values[..n]).any(|(a, b)| *a != b) {
            return Ok(false);
        }
        // Both sides must stop together.
        if expected.len() != leg.values.len() {
            return Ok(false);
        }
    }
    Ok(true)
}
