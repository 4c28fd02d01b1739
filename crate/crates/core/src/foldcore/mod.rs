//! The folding algorithm: repeatedly advance the pivot equation, substitute
//! the system, and partially invert to eliminate one variable per level.
//!
//! The same loop folds differential systems, with total differentiation in
//! place of the index shift; see [`crate::odefold`].

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::expr::{
    denominator_conditions, differentiate, solve_for, Expr, ExprError, FnRegistry, IndexVar,
    Node, SideCondition,
};
use crate::sysmodel::{
    Decimation, EqKind, Folding, HigherOrderEq, Recovery, System, SystemKind,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FoldError {
    #[error("not foldable: no partial inversion for `{var}` at level {level}")]
    NotFoldable { level: usize, var: String },
    #[error("`{0}` is not a state variable")]
    UnknownPivot(String),
    #[error("expected a {expected} system, got {got}")]
    WrongKind { expected: &'static str, got: SystemKind },
    #[error("system does not have the triangular no-inversion shape: {0}")]
    ShapeMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// One level of the folding loop.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldStep {
    pub level: usize,
    /// The pivot at this level, after substituting earlier inversions.
    pub equation: Expr,
    pub eliminated: Option<String>,
    pub inversion: Option<Expr>,
    pub side_conditions: BTreeSet<SideCondition>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FoldTrace {
    pub steps: Vec<FoldStep>,
}

/// Chooses a sequence name that does not clash with anything in the system.
pub(crate) fn sequence_name(sys: &System) -> String {
    let taken = |name: &str| {
        sys.vars.iter().any(|v| v == name)
            || sys.params.contains_key(name)
            || sys.symbolic.contains(name)
            || sys.fns.is_known(name)
    };
    std::iter::once("s".to_string())
        .chain((1..).map(|i| format!("s{i}")))
        .find(|c| !taken(c))
        .unwrap()
}

/// How one level is advanced to the next.
struct Stepper<'a> {
    kind: EqKind,
    seq: String,
    pivot: String,
    /// Right-hand sides with the pivot written as a sequence atom.
    lifted: HashMap<String, Expr>,
    deps: BTreeSet<String>,
    fns: &'a FnRegistry,
}

impl<'a> Stepper<'a> {
    fn new(sys: &'a System, pivot: &str, seq: String) -> Stepper<'a> {
        let kind = if sys.kind == SystemKind::Ode {
            EqKind::Ode
        } else {
            EqKind::Difference
        };
        let rhs = sys.recursive_rhs();
        let mut stepper = Stepper {
            kind,
            seq,
            pivot: pivot.to_string(),
            lifted: HashMap::new(),
            deps: sys.vars.iter().cloned().collect(),
            fns: &sys.fns,
        };
        for (v, e) in sys.vars.iter().zip(&rhs) {
            let lifted = stepper.lift(e);
            stepper.lifted.insert(v.clone(), lifted);
        }
        stepper
    }

    fn atom(&self, j: usize) -> Expr {
        crate::sysmodel::seq_atom(self.kind, &self.seq, j)
    }

    /// Rewrites the pivot variable as the level-0 sequence atom.
    fn lift(&self, e: &Expr) -> Expr {
        match self.kind {
            EqKind::Ode => e.clone(),
            EqKind::Difference => {
                let b = HashMap::from([(self.pivot.clone(), self.atom(0))]);
                e.substitute(&b)
            }
        }
    }

    fn advance(&self, e: &Expr) -> Result<Expr, ExprError> {
        match self.kind {
            EqKind::Difference => Ok(e.map_leaves(&mut |x| match x.node() {
                Node::Shift(s, j) if *s == self.seq => Some(Expr::shift(s, j + 1)),
                Node::Index(IndexVar::N) => Some(Expr::n() + Expr::one()),
                Node::AltSign => Some(-Expr::alt_sign()),
                Node::Var(v) if *v != self.pivot => self.lifted.get(v).cloned(),
                _ => None,
            })),
            EqKind::Ode => {
                let d = differentiate(e, &self.deps, self.fns)?;
                let b: HashMap<Expr, Expr> = self
                    .lifted
                    .iter()
                    .filter(|(v, _)| **v != self.pivot)
                    .map(|(v, r)| (Expr::deriv(v, 1), r.clone()))
                    .collect();
                Ok(d.substitute_atoms(&b))
            }
        }
    }
}

fn substitute_inversions(e: &Expr, phis: &[(String, Expr)]) -> Expr {
    phis.iter().fold(e.clone(), |acc, (v, h)| {
        acc.substitute(&HashMap::from([(v.clone(), h.clone())]))
    })
}

fn present_vars(e: &Expr, candidates: &[String]) -> Vec<String> {
    let free = e.free_vars();
    candidates.iter().filter(|v| free.contains(*v)).cloned().collect()
}

/// The shared folding loop for difference and differential systems.
pub(crate) fn fold_engine(sys: &System, pivot: &str) -> Result<(Folding, FoldTrace), FoldError> {
    if sys.var_index(pivot).is_none() {
        return Err(FoldError::UnknownPivot(pivot.to_string()));
    }
    let seq = match sys.kind {
        SystemKind::Ode => pivot.to_string(),
        _ => sequence_name(sys),
    };
    let st = Stepper::new(sys, pivot, seq);
    let k = sys.k();
    let mut remaining: Vec<String> = sys.vars.iter().filter(|v| *v != pivot).cloned().collect();
    let mut phis: Vec<(String, Expr)> = Vec::new();
    let mut trace = FoldTrace::default();
    let mut side = BTreeSet::new();
    let mut e = st.lifted[pivot].clone();
    let mut kappa = 0;

    for level in 1..=k {
        if level > 1 {
            e = st.advance(&e)?;
        }
        e = substitute_inversions(&e, &phis);
        let present = present_vars(&e, &remaining);
        if present.is_empty() {
            trace.steps.push(FoldStep {
                level,
                equation: e.clone(),
                eliminated: None,
                inversion: None,
                side_conditions: BTreeSet::new(),
            });
            kappa = level;
            break;
        }
        if level == k {
            return Err(FoldError::NotFoldable {
                level,
                var: present[0].clone(),
            });
        }
        let lhs = st.atom(level);
        let mut solved = None;
        for v in present.iter().rev() {
            if let Ok((h, conds)) = solve_for(&lhs, &e, &Expr::var(v), &sys.fns) {
                solved = Some((v.clone(), h, conds));
                break;
            }
        }
        let (v, h, conds) = solved.ok_or_else(|| FoldError::NotFoldable {
            level,
            var: present[0].clone(),
        })?;
        trace.steps.push(FoldStep {
            level,
            equation: e.clone(),
            eliminated: Some(v.clone()),
            inversion: Some(h.clone()),
            side_conditions: conds.clone(),
        });
        side.extend(conds);
        remaining.retain(|r| *r != v);
        phis.push((v, h));
    }

    let mut recovery = Vec::new();
    let mut notes = Vec::new();
    for v in &remaining {
        let aux = substitute_inversions(&st.lifted[v], &phis);
        side.extend(denominator_conditions(&aux, &sys.fns));
        notes.push(format!(
            "`{v}` does not survive elimination; recovered from a first-order auxiliary equation"
        ));
        recovery.push((v.clone(), Recovery::Recurrence(aux)));
    }
    for (v, h) in phis.iter().rev() {
        side.extend(denominator_conditions(h, &sys.fns));
        recovery.push((v.clone(), Recovery::Passive(h.clone())));
    }
    side.extend(denominator_conditions(&e, &sys.fns));

    let equation = HigherOrderEq {
        kind: st.kind,
        order: kappa,
        seq: st.seq.clone(),
        rhs: e,
        lead: None,
    };
    let init_map = match st.kind {
        EqKind::Difference => difference_init_map(sys, pivot, kappa),
        EqKind::Ode => ode_init_map(sys, pivot, kappa)?,
    };
    let decimation = match st.kind {
        EqKind::Difference => decimation_of(&equation),
        EqKind::Ode => None,
    };
    let folding = Folding {
        equation,
        pivot: pivot.to_string(),
        vars: sys.vars.clone(),
        recovery,
        init_map,
        side_conditions: side,
        kappa,
        decimation,
        fns: sys.fns.clone(),
        notes,
    };
    Ok((folding, trace))
}

/// `s_j` as a function of the initial state: the pivot component of the
/// `j`-th iterate of the system, composed symbolically.
pub(crate) fn difference_init_map(sys: &System, pivot: &str, order: usize) -> Vec<Expr> {
    let rhs = sys.recursive_rhs();
    let p = sys.var_index(pivot).unwrap();
    let mut state: Vec<Expr> = sys.vars.iter().map(|v| Expr::var(v)).collect();
    let mut out = Vec::with_capacity(order);
    for j in 0..order {
        out.push(state[p].clone());
        if j + 1 == order {
            break;
        }
        let b: HashMap<String, Expr> = sys.vars.iter().cloned().zip(state.iter().cloned()).collect();
        state = rhs.iter().map(|e| e.at_index(j as i64).substitute(&b)).collect();
    }
    out
}

/// `x^(j)(t)` as a function of `(t, state)`: repeated total derivatives with
/// every derivative replaced by its right-hand side.
pub(crate) fn ode_init_map(sys: &System, pivot: &str, order: usize) -> Result<Vec<Expr>, ExprError> {
    let rhs = sys.resolved_rhs();
    let deps: BTreeSet<String> = sys.vars.iter().cloned().collect();
    let b: HashMap<Expr, Expr> = sys
        .vars
        .iter()
        .zip(&rhs)
        .map(|(v, r)| (Expr::deriv(v, 1), r.clone()))
        .collect();
    let mut cur = Expr::var(pivot);
    let mut out = Vec::with_capacity(order);
    for j in 0..order {
        out.push(cur.clone());
        if j + 1 < order {
            cur = differentiate(&cur, &deps, &sys.fns)?.substitute_atoms(&b);
        }
    }
    Ok(out)
}

/// `s[n+k] = F(s[n])` with autonomous `F` splits into `k` interleaved orbits of
/// `t[n+1] = F(t[n])`.
pub(crate) fn decimation_of(eq: &HigherOrderEq) -> Option<Decimation> {
    let offsets = eq.offsets();
    let autonomous = !eq.rhs.contains(&Expr::n()) && !eq.rhs.contains(&Expr::alt_sign());
    if eq.order > 1 && eq.lead.is_none() && autonomous && offsets.iter().all(|&j| j == 0) {
        Some(Decimation {
            stride: eq.order,
            map: HigherOrderEq::difference(1, &eq.seq, eq.rhs.clone()),
        })
    } else {
        None
    }
}

fn require_discrete(sys: &System) -> Result<(), FoldError> {
    if sys.kind.is_discrete() {
        Ok(())
    } else {
        Err(FoldError::WrongKind {
            expected: "difference",
            got: sys.kind,
        })
    }
}

/// Folds a difference system around `pivot`.
///
/// Remaining variables are isolated in reverse declaration order. Variables
/// that cancel before they are needed are recovered by auxiliary first-order
/// equations rather than passively.
pub fn fold(sys: &System, pivot: &str) -> Result<(Folding, FoldTrace), FoldError> {
    require_discrete(sys)?;
    fold_engine(sys, pivot)
}

/// Whether rhs_i, for i ≥ 2, references only x1 and x_{i+1}..x_k among the
/// state variables.
pub fn matches_ske_shape(sys: &System) -> bool {
    shape_violation(sys).is_none()
}

fn shape_violation(sys: &System) -> Option<String> {
    for (i, e) in sys.rhs.iter().enumerate().skip(1) {
        let allowed: BTreeSet<&String> = std::iter::once(&sys.vars[0])
            .chain(&sys.vars[i + 1..])
            .collect();
        let bad = e
            .referenced_names()
            .into_iter()
            .find(|name| sys.vars.contains(name) && !allowed.contains(name));
        if let Some(name) = bad {
            return Some(format!("equation for `{}` references `{name}`", sys.vars[i]));
        }
    }
    None
}

/// Folds a triangular system by backward substitution alone.
///
/// The pivot is the first variable. Every other component is recovered by
/// iterating its own system equation alongside the folded solution.
pub fn fold_no_inversion(sys: &System) -> Result<Folding, FoldError> {
    require_discrete(sys)?;
    if let Some(reason) = shape_violation(sys) {
        return Err(FoldError::ShapeMismatch(reason));
    }
    let pivot = sys.vars[0].clone();
    let seq = sequence_name(sys);
    let st = Stepper::new(sys, &pivot, seq.clone());
    let k = sys.k();
    let others = &sys.vars[1..];

    // x_i at time n+j, for j = 0, 1, ...: starts unresolved.
    let mut current: HashMap<String, Expr> = others.iter().map(|v| (v.clone(), Expr::var(v))).collect();
    let mut equation = None;
    for j in 1..=k {
        let at = |e: &Expr, b: &HashMap<String, Expr>| e.shift_index(j as i64 - 1).substitute(b);
        let candidate = at(&st.lifted[&pivot], &current);
        if present_vars(&candidate, others).is_empty() {
            equation = Some((j, candidate));
            break;
        }
        current = others
            .iter()
            .map(|v| (v.clone(), at(&st.lifted[v], &current)))
            .collect();
    }
    let (kappa, rhs) = equation.ok_or_else(|| {
        FoldError::ShapeMismatch("backward substitution did not close within k levels".into())
    })?;

    let mut side = denominator_conditions(&rhs, &sys.fns);
    let mut recovery = Vec::new();
    for v in others {
        side.extend(denominator_conditions(&st.lifted[v], &sys.fns));
        recovery.push((v.clone(), Recovery::Recurrence(st.lifted[v].clone())));
    }
    let equation = HigherOrderEq::difference(kappa, &seq, rhs);
    let decimation = decimation_of(&equation);
    Ok(Folding {
        equation,
        pivot: pivot.clone(),
        vars: sys.vars.clone(),
        recovery,
        init_map: difference_init_map(sys, &pivot, kappa),
        side_conditions: side,
        kappa,
        decimation,
        fns: sys.fns.clone(),
        notes: vec!["folded by backward substitution; no partial inversions".into()],
    })
}

/// Interdependence degree of a system, pivoting on its first variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "degree", rename_all = "snake_case")]
pub enum Interdependence {
    Known { kappa: usize },
    /// The variables split into independent blocks.
    Undefined { blocks: Vec<Vec<String>> },
    /// Folding failed; the degree may still exist.
    Unknown { reason: String },
}

impl std::fmt::Display for Interdependence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Interdependence::Known { kappa } => write!(f, "interdependence degree {kappa}"),
            Interdependence::Undefined { blocks } => {
                let blocks: Vec<String> = blocks.iter().map(|b| format!("{{{}}}", b.join(", "))).collect();
                write!(f, "interdependence degree undefined; blocks {}", blocks.join(" "))
            }
            Interdependence::Unknown { reason } => write!(f, "interdependence degree unknown ({reason})"),
        }
    }
}

/// Connected components of the "references" graph between variables, in
/// declaration order.
pub fn variable_blocks(sys: &System) -> Vec<Vec<String>> {
    let k = sys.k();
    let mut adj = vec![BTreeSet::new(); k];
    for (i, e) in sys.rhs.iter().enumerate() {
        for name in e.referenced_names() {
            if let Some(j) = sys.var_index(&name) {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut block_of = vec![usize::MAX; k];
    let mut blocks = Vec::new();
    for start in 0..k {
        if block_of[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut members = Vec::new();
        let mut stack = vec![start];
        block_of[start] = id;
        while let Some(i) = stack.pop() {
            members.push(i);
            for &j in &adj[i] {
                if block_of[j] == usize::MAX {
                    block_of[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members.into_iter().map(|i| sys.vars[i].clone()).collect());
    }
    blocks
}

/// Whether every equation references no state variable but its own.
pub fn is_diagonal(sys: &System) -> bool {
    sys.rhs.iter().zip(&sys.vars).all(|(e, v)| {
        e.referenced_names()
            .into_iter()
            .all(|name| name == *v || sys.var_index(&name).is_none())
    })
}

pub fn interdependence_degree(sys: &System) -> Interdependence {
    if sys.k() == 1 {
        return Interdependence::Known { kappa: 1 };
    }
    if is_diagonal(sys) {
        return Interdependence::Known { kappa: 0 };
    }
    let blocks = variable_blocks(sys);
    if blocks.len() > 1 {
        return Interdependence::Undefined { blocks };
    }
    let pivot = &sys.vars[0];
    let folded = match sys.kind {
        SystemKind::Ode => crate::odefold::fold_ode(sys, pivot),
        _ => fold(sys, pivot).map(|(f, _)| f).or_else(|err| {
            if matches_ske_shape(sys) {
                fold_no_inversion(sys)
            } else {
                Err(err)
            }
        }),
    };
    match folded {
        Ok(f) => Interdependence::Known { kappa: f.kappa },
        Err(e) => Interdependence::Unknown { reason: e.to_string() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr_with, rat};
    use crate::sysmodel::parse_spec;

    fn sys(text: &str) -> System {
        parse_spec(text).unwrap()
    }

    fn ex(s: &System, text: &str) -> Expr {
        parse_expr_with(text, &s.fns).unwrap()
    }

    const BS1: &str = "kind: difference\nvars: x y\nparam a\nparam b\neq x = x*y\neq y = (a + b*x)/y\n";

    #[test]
    fn bs1_folds_to_order_two() {
        let s = sys(BS1);
        let (f, trace) = fold(&s, "x").unwrap();
        assert_eq!(f.kappa, 2);
        assert_eq!(f.equation.rhs, ex(&s, "s[n]*(a + b*s[n])"));
        assert_eq!(f.recovery, vec![("y".into(), Recovery::Passive(ex(&s, "s[n+1]/s[n]")))]);
        assert_eq!(
            f.side_conditions.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            vec!["s[n] != 0"]
        );
        assert_eq!(f.init_map, vec![ex(&s, "x"), ex(&s, "x*y")]);
        assert_eq!(trace.steps.len(), 2);
        assert_eq!(f.decimation.as_ref().map(|d| d.stride), Some(2));
    }

    #[test]
    fn standard_unfolding_is_a_fixpoint() {
        let s = sys("kind: difference\nvars: x y\nfn phi\neq x = y\neq y = phi(n*x + y)\n");
        let (f, _) = fold(&s, "x").unwrap();
        assert_eq!(f.equation.rhs, ex(&s, "phi(n*s[n] + s[n+1])"));
    }

    #[test]
    fn pivot_must_exist() {
        let s = sys(BS1);
        assert!(matches!(fold(&s, "z"), Err(FoldError::UnknownPivot(_))));
    }

    #[test]
    fn sequence_name_avoids_collisions() {
        let s = sys("kind: difference\nvars: s x\neq s = x\neq x = s\n");
        let (f, _) = fold(&s, "s").unwrap();
        assert_eq!(f.equation.seq, "s1");
    }

    #[test]
    fn one_coupled_pivot_stops_at_two() {
        // x_{i,n+1} depends only on x1 for i >= 2.
        let s = sys("kind: difference\nvars: x y z\neq x = y*z\neq y = x + 1\neq z = 2*x\n");
        let f = fold_no_inversion(&s).unwrap();
        assert_eq!(f.kappa, 2);
        assert_eq!(f.equation.rhs, ex(&s, "(s[n] + 1)*2*s[n]"));
        let (g, _) = fold(&s, "x").unwrap();
        assert_eq!(g.equation, f.equation);
    }

    #[test]
    fn shape_check() {
        let sp3 = sys("kind: difference\nvars: x y z\nfn f\nfn g\nparam a\nparam b\nparam c\nparam al\nparam be\n\
                       eq x = f(a*y + b*z)\neq y = c*x + g(z)\neq z = al*x + be\n");
        assert!(matches!(fold(&sp3, "x"), Err(FoldError::NotFoldable { level: 1, .. })));
        assert!(matches_ske_shape(&sp3));
        let f = fold_no_inversion(&sp3).unwrap();
        assert_eq!(f.kappa, 3);
        assert_eq!(
            f.equation.rhs,
            ex(&sp3, "f((a*c + b*al)*s[n+1] + a*g(al*s[n] + be) + b*be)")
        );
        let flat = sp3.clone().with_params(&[("c", rat(-1, 1)), ("b", rat(1, 1)), ("al", rat(1, 1)), ("a", rat(1, 1))]);
        let f = fold_no_inversion(&flat).unwrap();
        assert_eq!(f.decimation.map(|d| d.stride), Some(3));
    }

    #[test]
    fn degree_classification() {
        let diag = sys("kind: difference\nvars: x y\neq x = x/2\neq y = y^2\n");
        assert_eq!(interdependence_degree(&diag), Interdependence::Known { kappa: 0 });
        let blocks = sys("kind: difference\nvars: x y z\neq x = y\neq y = x + y\neq z = z + 1\n");
        assert_eq!(
            interdependence_degree(&blocks),
            Interdependence::Undefined {
                blocks: vec![vec!["x".into(), "y".into()], vec!["z".into()]]
            }
        );
        let one = sys("kind: difference\nvars: x\neq x = x + 1\n");
        assert_eq!(interdependence_degree(&one), Interdependence::Known { kappa: 1 });
        let opaque = sys("kind: difference\nvars: x y\nfn f\neq x = f(y)\neq y = x*y\n");
        assert!(matches!(interdependence_degree(&opaque), Interdependence::Unknown { .. }));
    }
}
