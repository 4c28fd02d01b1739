//! Systems, higher-order scalar equations, foldings, and brute-force orbit
//! iteration.

mod specfile;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

use crate::expr::{
    denominator_conditions, parse_expr_with, Env, Expr, ExprError, FnRegistry, Node, Num,
    SideCondition,
};

pub use specfile::{parse_fn_decls, parse_spec, to_spec_text, SpecError};

/// Divisors at or below this magnitude count as zero in floating orbits.
pub const FLOAT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// `x[n+1] = f(n, x[n])`
    Recursive,
    /// `x[n+1] - x[n] = f(n, x[n])`
    Delta,
    /// `x' = f(t, x)`
    Ode,
}

impl SystemKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, SystemKind::Ode)
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Recursive => "difference",
            SystemKind::Delta => "delta",
            SystemKind::Ode => "ode",
        })
    }
}

/// A system of `k` first-order equations.
///
/// `rhs[i]` is written over plain variables (the state at index `n` or `t`),
/// the index, numeric and symbolic parameters, and declared functions.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub kind: SystemKind,
    pub vars: Vec<String>,
    pub rhs: Vec<Expr>,
    pub params: BTreeMap<String, BigRational>,
    pub symbolic: BTreeSet<String>,
    pub fns: FnRegistry,
    pub extra_guards: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("expected {expected} right-hand sides, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("equation for `{var}`: {source}")]
    Expr { var: String, source: ExprError },
    #[error("`{0}` is neither a state variable nor a declared parameter")]
    Undeclared(String),
    #[error("parameter `{0}` has no value")]
    UnboundParameter(String),
    #[error("system must have at least one variable")]
    Empty,
}

impl System {
    /// Builds a system from `(variable, rhs text)` pairs. Free names other
    /// than the state variables become symbolic parameters.
    pub fn from_text(
        kind: SystemKind,
        eqs: &[(&str, &str)],
        fns: FnRegistry,
    ) -> Result<System, SystemError> {
        let vars: Vec<String> = eqs.iter().map(|(v, _)| v.to_string()).collect();
        let rhs = eqs
            .iter()
            .map(|(v, text)| {
                parse_expr_with(text, &fns).map_err(|source| SystemError::Expr {
                    var: v.to_string(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut symbolic = BTreeSet::new();
        for e in &rhs {
            for name in e.referenced_names() {
                if !vars.contains(&name) {
                    symbolic.insert(name);
                }
            }
        }
        System::new(kind, vars, rhs, BTreeMap::new(), symbolic, fns)
    }

    pub fn new(
        kind: SystemKind,
        vars: Vec<String>,
        rhs: Vec<Expr>,
        params: BTreeMap<String, BigRational>,
        symbolic: BTreeSet<String>,
        fns: FnRegistry,
    ) -> Result<System, SystemError> {
        if vars.is_empty() {
            return Err(SystemError::Empty);
        }
        if vars.len() != rhs.len() {
            return Err(SystemError::Arity {
                expected: vars.len(),
                got: rhs.len(),
            });
        }
        let sys = System {
            kind,
            vars,
            rhs,
            params,
            symbolic,
            fns,
            extra_guards: Vec::new(),
        };
        sys.check_names()?;
        Ok(sys)
    }

    pub(crate) fn check_names(&self) -> Result<(), SystemError> {
        for e in self.rhs.iter().chain(&self.extra_guards) {
            for name in e.referenced_names() {
                let known = self.vars.contains(&name)
                    || self.params.contains_key(&name)
                    || self.symbolic.contains(&name);
                if !known {
                    return Err(SystemError::Undeclared(name));
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.vars.len()
    }

    /// Assigns a numeric value to a (possibly symbolic) parameter.
    pub fn with_param(mut self, name: &str, value: BigRational) -> System {
        self.symbolic.remove(name);
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_params(self, values: &[(&str, BigRational)]) -> System {
        values
            .iter()
            .fold(self, |sys, (name, v)| sys.with_param(name, v.clone()))
    }

    pub fn with_guard(mut self, guard: Expr) -> System {
        self.extra_guards.push(guard);
        self
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn param_bindings(&self) -> HashMap<String, Expr> {
        self.params
            .iter()
            .map(|(k, v)| (k.clone(), Expr::rational(v.clone())))
            .collect()
    }

    /// Right-hand sides with numeric parameters substituted.
    pub fn resolved_rhs(&self) -> Vec<Expr> {
        let b = self.param_bindings();
        self.rhs.iter().map(|e| e.substitute(&b)).collect()
    }

    /// Right-hand sides in recursive form: for delta systems `x + f`.
    pub fn recursive_rhs(&self) -> Vec<Expr> {
        let rhs = self.resolved_rhs();
        match self.kind {
            SystemKind::Delta => self
                .vars
                .iter()
                .zip(rhs)
                .map(|(v, f)| Expr::var(v) + f)
                .collect(),
            _ => rhs,
        }
    }

    /// The delta system rewritten as an ordinary recursive one.
    pub fn to_recursive(&self) -> System {
        let mut out = self.clone();
        if self.kind == SystemKind::Delta {
            out.rhs = self
                .vars
                .iter()
                .zip(&self.rhs)
                .map(|(v, f)| Expr::var(v) + f)
                .collect();
            out.kind = SystemKind::Recursive;
        }
        out
    }

    /// Domain guards: every denominator of every right-hand side plus any
    /// user-supplied guards.
    pub fn guards(&self) -> Vec<SideCondition> {
        let b = self.param_bindings();
        let mut set = BTreeSet::new();
        for e in self.resolved_rhs() {
            set.extend(denominator_conditions(&e, &self.fns));
        }
        for g in &self.extra_guards {
            set.insert(SideCondition::nonzero(g.substitute(&b)));
        }
        set.into_iter().collect()
    }

    /// Symbolic parameters still lacking a numeric value.
    pub fn unbound_params(&self) -> Vec<String> {
        self.symbolic.iter().cloned().collect()
    }

    pub fn require_numeric(&self) -> Result<(), SystemError> {
        match self.symbolic.iter().next() {
            Some(p) => Err(SystemError::UnboundParameter(p.clone())),
            None => Ok(()),
        }
    }

    /// Evaluation environment binding the state at index `m`.
    pub fn state_env(&self, state: &[Num], index: Num) -> Env<'_> {
        let mut env = Env::new(&self.fns).with_tolerance(FLOAT_ZERO_TOL);
        for (v, x) in self.vars.iter().zip(state) {
            env.bind_var(v, x.clone());
        }
        env.index = Some(index);
        env
    }
}

/// A scalar equation of order `order`.
///
/// Difference equations read `lead * s[n+order] = rhs` over atoms
/// `s[n]..s[n+order-1]`; differential ones read `x^(order) = rhs` over
/// `x, x', ...`. `lead` is absent for explicit (recursive) equations.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherOrderEq {
    pub kind: EqKind,
    pub order: usize,
    pub seq: String,
    pub rhs: Expr,
    pub lead: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EqKind {
    Difference,
    Ode,
}

impl HigherOrderEq {
    pub fn difference(order: usize, seq: &str, rhs: Expr) -> HigherOrderEq {
        HigherOrderEq {
            kind: EqKind::Difference,
            order,
            seq: seq.to_string(),
            rhs,
            lead: None,
        }
    }

    pub fn ode(order: usize, seq: &str, rhs: Expr) -> HigherOrderEq {
        HigherOrderEq {
            kind: EqKind::Ode,
            order,
            seq: seq.to_string(),
            rhs,
            lead: None,
        }
    }

    /// The atom standing for the `j`-th shift or derivative of the sequence.
    pub fn atom(&self, j: usize) -> Expr {
        seq_atom(self.kind, &self.seq, j)
    }

    pub fn lhs(&self) -> Expr {
        self.atom(self.order)
    }

    /// Offsets (or derivative orders) of sequence atoms used by `rhs`.
    pub fn offsets(&self) -> BTreeSet<i64> {
        seq_offsets(&self.rhs, &self.seq)
    }
}

impl fmt::Display for HigherOrderEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lead {
            Some(lead) if matches!(lead.node(), Node::Sum(_)) => write!(f, "({lead})*{} = {}", self.lhs(), self.rhs),
            Some(lead) => write!(f, "{lead}*{} = {}", self.lhs(), self.rhs),
            None => write!(f, "{} = {}", self.lhs(), self.rhs),
        }
    }
}

pub fn seq_atom(kind: EqKind, seq: &str, j: usize) -> Expr {
    match kind {
        EqKind::Difference => Expr::shift(seq, j as i64),
        EqKind::Ode => Expr::deriv(seq, j as u32),
    }
}

/// Offsets of `name[n+j]` atoms, or orders of `name`, `name'`, ... atoms.
pub fn seq_offsets(e: &Expr, name: &str) -> BTreeSet<i64> {
    e.symbols()
        .into_iter()
        .filter_map(|a| match a.node() {
            Node::Shift(v, j) if v == name => Some(*j),
            Node::Deriv(v, j) if v == name => Some(*j as i64),
            Node::Var(v) if v == name => Some(0),
            _ => None,
        })
        .collect()
}

/// How a non-pivot component is recovered from the folded solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    /// Evaluated directly from sequence atoms and earlier components.
    Passive(Expr),
    /// First-order auxiliary equation giving `v[n+1]` (or `v'`), iterated
    /// alongside the folded solution from the initial state.
    Recurrence(Expr),
}

impl Recovery {
    pub fn expr(&self) -> &Expr {
        match self {
            Recovery::Passive(e) | Recovery::Recurrence(e) => e,
        }
    }
}

/// Stride-`stride` splitting of `s[n+stride] = F(s[n])` into first-order
/// solutions of `map`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decimation {
    pub stride: usize,
    pub map: HigherOrderEq,
}

/// A folding: scalar equation, recovery equations, initial-value map and
/// side-conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Folding {
    pub equation: HigherOrderEq,
    pub pivot: String,
    pub vars: Vec<String>,
    /// In evaluation order: auxiliary recurrences first, then passive
    /// equations, last-eliminated variable first.
    pub recovery: Vec<(String, Recovery)>,
    /// `init_map[j]` computes the `j`-th initial value of the folded
    /// equation from the initial state of the system.
    pub init_map: Vec<Expr>,
    pub side_conditions: BTreeSet<SideCondition>,
    pub kappa: usize,
    pub decimation: Option<Decimation>,
    pub fns: FnRegistry,
    pub notes: Vec<String>,
}

impl Folding {
    /// Largest sequence offset referenced by any recovery equation.
    pub fn max_offset(&self) -> usize {
        self.recovery
            .iter()
            .flat_map(|(_, r)| seq_offsets(r.expr(), &self.equation.seq))
            .max()
            .unwrap_or(0)
            .max(0) as usize
    }

    pub fn passive(&self) -> impl Iterator<Item = (&String, &Expr)> {
        self.recovery.iter().filter_map(|(v, r)| match r {
            Recovery::Passive(e) => Some((v, e)),
            Recovery::Recurrence(_) => None,
        })
    }

    pub fn recurrences(&self) -> impl Iterator<Item = (&String, &Expr)> {
        self.recovery.iter().filter_map(|(v, r)| match r {
            Recovery::Recurrence(e) => Some((v, e)),
            Recovery::Passive(_) => None,
        })
    }

    /// Substitutes parameter values into every stored expression.
    pub fn bind_params(&self, values: &BTreeMap<String, BigRational>) -> Folding {
        let b: HashMap<String, Expr> = values
            .iter()
            .map(|(k, v)| (k.clone(), Expr::rational(v.clone())))
            .collect();
        let sub = |e: &Expr| e.substitute(&b);
        let mut out = self.clone();
        out.equation.rhs = sub(&self.equation.rhs);
        out.equation.lead = self.equation.lead.as_ref().map(sub);
        out.recovery = self
            .recovery
            .iter()
            .map(|(v, r)| {
                let r = match r {
                    Recovery::Passive(e) => Recovery::Passive(sub(e)),
                    Recovery::Recurrence(e) => Recovery::Recurrence(sub(e)),
                };
                (v.clone(), r)
            })
            .collect();
        out.init_map = self.init_map.iter().map(sub).collect();
        out.side_conditions = self
            .side_conditions
            .iter()
            .map(|c| SideCondition::nonzero(sub(&c.expr)))
            .collect();
        out
    }

    /// Initial values of the folded equation for a system initial state.
    pub fn initial_values(&self, init: &[Num], index: Num) -> Result<Vec<Num>, ExprError> {
        let mut env = Env::new(&self.fns).with_tolerance(FLOAT_ZERO_TOL);
        for (v, x) in self.vars.iter().zip(init) {
            env.bind_var(v, x.clone());
        }
        env.index = Some(index);
        self.init_map.iter().map(|e| e.eval(&env)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularOrigin {
    /// A system guard (denominator of the system) vanished.
    SystemGuard,
    /// A denominator of a recovery equation vanished.
    Folding,
    /// The folded equation itself could not be advanced.
    Equation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OrbitStatus {
    Completed,
    Singular {
        step: usize,
        condition: String,
        origin: SingularOrigin,
    },
}

impl OrbitStatus {
    pub fn singular_step(&self) -> Option<usize> {
        match self {
            OrbitStatus::Completed => None,
            OrbitStatus::Singular { step, .. } => Some(*step),
        }
    }
}

/// States `0..len`; when singular at step `m`, exactly `m` states.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub states: Vec<Vec<Num>>,
    pub status: OrbitStatus,
    pub horizon: usize,
}

impl Orbit {
    pub fn component(&self, i: usize) -> Vec<Num> {
        self.states.iter().map(|s| s[i].clone()).collect()
    }
}

/// Values `s_0..` of a scalar equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeq {
    pub values: Vec<Num>,
    pub status: OrbitStatus,
}

fn violated(guards: &[SideCondition], env: &Env<'_>) -> Option<String> {
    guards.iter().find_map(|g| match g.expr.eval(env) {
        Ok(v) if !v.is_zero_within(env.zero_tol) && v.is_finite() => None,
        _ => Some(g.to_string()),
    })
}

fn failure_text(e: &ExprError) -> String {
    match e {
        ExprError::DivisionByZero(d) => format!("{d} != 0"),
        other => other.to_string(),
    }
}

/// Brute-force forward orbit of a discrete system.
pub fn iterate_orbit(sys: &System, init: &[Num], steps: usize) -> Orbit {
    assert_eq!(init.len(), sys.k(), "initial state has wrong dimension");
    let rhs = sys.recursive_rhs();
    let guards = sys.guards();
    let mut states = Vec::with_capacity(steps + 1);
    let mut cur = init.to_vec();
    for m in 0..=steps {
        let env = sys.state_env(&cur, Num::int(m as i64));
        if let Some(condition) = violated(&guards, &env) {
            return Orbit {
                states,
                status: OrbitStatus::Singular {
                    step: m,
                    condition,
                    origin: SingularOrigin::SystemGuard,
                },
                horizon: steps,
            };
        }
        states.push(cur.clone());
        if m == steps {
            break;
        }
        let next: Result<Vec<Num>, ExprError> = rhs.iter().map(|e| e.eval(&env)).collect();
        match next {
            Ok(v) if v.iter().all(Num::is_finite) => cur = v,
            Ok(_) => {
                return Orbit {
                    states,
                    status: OrbitStatus::Singular {
                        step: m + 1,
                        condition: "non-finite value".to_string(),
                        origin: SingularOrigin::SystemGuard,
                    },
                    horizon: steps,
                }
            }
            Err(e) => {
                return Orbit {
                    states,
                    status: OrbitStatus::Singular {
                        step: m + 1,
                        condition: failure_text(&e),
                        origin: SingularOrigin::SystemGuard,
                    },
                    horizon: steps,
                }
            }
        }
    }
    Orbit {
        states,
        status: OrbitStatus::Completed,
        horizon: steps,
    }
}

/// Iterates a difference equation from `order` initial values, producing
/// `s_0..s_steps` unless a denominator vanishes first.
pub fn iterate_equation(eq: &HigherOrderEq, init: &[Num], steps: usize, fns: &FnRegistry) -> ScalarSeq {
    assert_eq!(eq.kind, EqKind::Difference, "iterate_equation needs a difference equation");
    assert_eq!(init.len(), eq.order, "need one initial value per order");
    let mut values: Vec<Num> = init.iter().take(steps + 1).cloned().collect();
    let singular = |values: Vec<Num>, step: usize, condition: String| ScalarSeq {
        values,
        status: OrbitStatus::Singular {
            step,
            condition,
            origin: SingularOrigin::Equation,
        },
    };
    let mut m = 0;
    while values.len() <= steps {
        let mut env = Env::new(fns).with_tolerance(FLOAT_ZERO_TOL);
        for j in 0..eq.order {
            env.bind(eq.atom(j), values[m + j].clone());
        }
        env.index = Some(Num::int(m as i64));
        let next = eq.rhs.eval(&env).and_then(|v| match &eq.lead {
            None => Ok(v),
            Some(lead) => {
                let l = lead.eval(&env)?;
                let inv = l
                    .recip(env.zero_tol)
                    .ok_or_else(|| ExprError::DivisionByZero(lead.to_string()))?;
                Ok(&v * &inv)
            }
        });
        let step = m + eq.order;
        match next {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => return singular(values, step, "non-finite value".to_string()),
            Err(e) => return singular(values, step, failure_text(&e)),
        }
        m += 1;
    }
    ScalarSeq {
        values,
        status: OrbitStatus::Completed,
    }
}

/// Rebuilds system states `0..=steps` from a folded solution.
///
/// The pivot component is read from `s`; auxiliary recurrences are seeded
/// from `init`; passive equations are evaluated in order. Every recovered
/// state is checked against the system guards so that singularities are
/// reported at the same step the system would report them.
pub fn recover_components(
    f: &Folding,
    s: &ScalarSeq,
    sys: &System,
    init: &[Num],
    steps: usize,
) -> Orbit {
    let guards = sys.guards();
    let seq = &f.equation.seq;
    let need = f.max_offset();
    let pivot_idx = sys.var_index(&f.pivot).expect("pivot is a system variable");
    let mut aux: HashMap<String, Num> = f
        .recurrences()
        .map(|(v, _)| (v.clone(), init[sys.var_index(v).unwrap()].clone()))
        .collect();
    let mut states = Vec::with_capacity(steps + 1);
    let stop = |states, step, condition, origin| Orbit {
        states,
        status: OrbitStatus::Singular {
            step,
            condition,
            origin,
        },
        horizon: steps,
    };
    for m in 0..=steps {
        if m + need >= s.values.len() {
            let condition = match &s.status {
                OrbitStatus::Singular { condition, .. } => condition.clone(),
                OrbitStatus::Completed => "folded solution too short".to_string(),
            };
            return stop(states, m, condition, SingularOrigin::Equation);
        }
        let mut env = Env::new(&f.fns).with_tolerance(FLOAT_ZERO_TOL);
        env.index = Some(Num::int(m as i64));
        for j in 0..=need {
            env.bind(Expr::shift(seq, j as i64), s.values[m + j].clone());
        }
        env.bind_var(&f.pivot, s.values[m].clone());
        for (v, x) in &aux {
            env.bind_var(v, x.clone());
        }
        let mut state = vec![Num::int(0); sys.k()];
        state[pivot_idx] = s.values[m].clone();
        for (v, rec) in &f.recovery {
            let value = match rec {
                Recovery::Recurrence(_) => aux[v].clone(),
                Recovery::Passive(e) => match e.eval(&env) {
                    Ok(x) if x.is_finite() => x,
                    Ok(_) => return stop(states, m, "non-finite value".into(), SingularOrigin::Folding),
                    Err(err) => return stop(states, m, failure_text(&err), SingularOrigin::Folding),
                },
            };
            env.bind_var(v, value.clone());
            state[sys.var_index(v).unwrap()] = value;
        }
        let check = sys.state_env(&state, Num::int(m as i64));
        if let Some(condition) = violated(&guards, &check) {
            return stop(states, m, condition, SingularOrigin::SystemGuard);
        }
        states.push(state);
        if m == steps {
            break;
        }
        let mut next = HashMap::new();
        for (v, e) in f.recurrences() {
            match e.eval(&env) {
                Ok(x) if x.is_finite() => {
                    next.insert(v.clone(), x);
                }
                Ok(_) => return stop(states, m + 1, "non-finite value".into(), SingularOrigin::Folding),
                Err(err) => return stop(states, m + 1, failure_text(&err), SingularOrigin::Folding),
            }
        }
        aux = next;
    }
    Orbit {
        states,
        status: OrbitStatus::Completed,
        horizon: steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::rat;

    fn bs1() -> System {
        System::from_text(
            SystemKind::Recursive,
            &[("x", "x*y"), ("y", "(a + b*x)/y")],
            FnRegistry::new(),
        )
        .unwrap()
        .with_params(&[("a", rat(1, 1)), ("b", rat(1, 1))])
    }

    fn ints(xs: &[i64]) -> Vec<Num> {
        xs.iter().map(|&x| Num::int(x)).collect()
    }

    #[test]
    fn bs1_orbit_by_hand() {
        let orbit = iterate_orbit(&bs1(), &ints(&[1, 2]), 4);
        assert_eq!(orbit.status, OrbitStatus::Completed);
        assert_eq!(orbit.component(0), ints(&[1, 2, 2, 6, 6]));
        assert_eq!(orbit.component(1), ints(&[2, 1, 3, 1, 7]));
    }

    #[test]
    fn guard_violation_at_start() {
        let orbit = iterate_orbit(&bs1(), &ints(&[1, 0]), 4);
        assert!(orbit.states.is_empty());
        assert_eq!(orbit.status.singular_step(), Some(0));
    }

    #[test]
    fn equation_iteration() {
        let eq = HigherOrderEq::difference(
            2,
            "s",
            parse_expr_with("s[n]*(1 + s[n])", &FnRegistry::new()).unwrap(),
        );
        let seq = iterate_equation(&eq, &ints(&[1, 2]), 5, &FnRegistry::new());
        assert_eq!(seq.values, ints(&[1, 2, 2, 6, 6, 42]));
    }

    #[test]
    fn delta_matches_recursive_rewrite() {
        let delta = System::from_text(
            SystemKind::Delta,
            &[("x", "y - x/2"), ("y", "-x*y/3")],
            FnRegistry::new(),
        )
        .unwrap();
        let rec = delta.to_recursive();
        let a = iterate_orbit(&delta, &ints(&[2, 3]), 6);
        let b = iterate_orbit(&rec, &ints(&[2, 3]), 6);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn undeclared_names_rejected() {
        let sys = System::new(
            SystemKind::Recursive,
            vec!["x".into()],
            vec![Expr::var("q")],
            BTreeMap::new(),
            BTreeSet::new(),
            FnRegistry::new(),
        );
        assert_eq!(sys.unwrap_err(), SystemError::Undeclared("q".into()));
    }
}
