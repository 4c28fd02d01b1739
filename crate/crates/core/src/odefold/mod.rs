//! Folding differential systems and the fixed-step RK4 flow oracle.

use serde::Serialize;

use crate::expr::{Env, Expr, ExprError, FnRegistry, Num};
use crate::foldcore::{fold_engine, FoldError, FoldTrace};
use crate::sysmodel::{EqKind, Folding, Recovery, System, SystemKind};

/// Deepest system [`fold_ode`] accepts.
pub const MAX_ODE_DEPTH: usize = 3;

fn require_ode(sys: &System) -> Result<(), FoldError> {
    if sys.kind == SystemKind::Ode {
        Ok(())
    } else {
        Err(FoldError::WrongKind {
            expected: "ode",
            got: sys.kind,
        })
    }
}

/// Folds a differential system of up to three equations around `pivot`.
pub fn fold_ode(sys: &System, pivot: &str) -> Result<Folding, FoldError> {
    fold_ode_traced(sys, pivot).map(|(f, _)| f)
}

pub fn fold_ode_traced(sys: &System, pivot: &str) -> Result<(Folding, FoldTrace), FoldError> {
    require_ode(sys)?;
    if sys.k() > MAX_ODE_DEPTH {
        return Err(FoldError::Unsupported(format!(
            "differential systems with more than {MAX_ODE_DEPTH} equations"
        )));
    }
    fold_engine(sys, pivot)
}

/// Folds a planar system around its first variable.
pub fn fold_ode_2d(sys: &System) -> Result<Folding, FoldError> {
    if sys.k() != 2 {
        return Err(FoldError::Unsupported(format!(
            "expected 2 equations, got {}",
            sys.k()
        )));
    }
    fold_ode(sys, &sys.vars[0])
}

/// A first-order vector field over named atoms, with guards that must stay
/// away from zero.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub atoms: Vec<Expr>,
    pub rhs: Vec<Expr>,
    pub guards: Vec<Expr>,
    pub fns: FnRegistry,
}

impl VectorField {
    pub fn from_system(sys: &System) -> VectorField {
        VectorField {
            atoms: sys.vars.iter().map(|v| Expr::var(v)).collect(),
            rhs: sys.resolved_rhs(),
            guards: sys.guards().into_iter().map(|g| g.expr).collect(),
            fns: sys.fns.clone(),
        }
    }

    /// Companion form of a folded equation: `(x, x', ..., x^(k-1))` followed
    /// by any auxiliary components.
    pub fn from_folding(f: &Folding) -> VectorField {
        assert_eq!(f.equation.kind, EqKind::Ode, "companion form needs a differential equation");
        let k = f.equation.order;
        let mut atoms: Vec<Expr> = (0..k).map(|j| f.equation.atom(j)).collect();
        let mut rhs: Vec<Expr> = (1..k).map(|j| f.equation.atom(j)).collect();
        rhs.push(f.equation.rhs.clone());
        for (v, e) in f.recurrences() {
            atoms.push(Expr::var(v));
            rhs.push(e.clone());
        }
        VectorField {
            atoms,
            rhs,
            guards: f.side_conditions.iter().map(|c| c.expr.clone()).collect(),
            fns: f.fns.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.atoms.len()
    }

    fn env(&self, t: f64, y: &[f64]) -> Env<'_> {
        let mut env = Env::new(&self.fns);
        for (a, v) in self.atoms.iter().zip(y) {
            env.bind(a.clone(), Num::Float(*v));
        }
        env.index = Some(Num::Float(t));
        env
    }

    pub fn eval(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, ExprError> {
        let env = self.env(t, y);
        self.rhs
            .iter()
            .map(|e| e.eval(&env).map(|v| v.to_f64()))
            .collect()
    }

    fn guard_values(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, (String, ExprError)> {
        let env = self.env(t, y);
        self.guards
            .iter()
            .map(|g| g.eval(&env).map(|v| v.to_f64()).map_err(|e| (g.to_string(), e)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    /// Integration stopped before grid point `index`. `crossing` marks a
    /// sign change between grid points rather than a near-zero value.
    Singular {
        index: usize,
        condition: String,
        crossing: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    pub fn singular_index(&self) -> Option<usize> {
        match self.status {
            TrajectoryStatus::Completed => None,
            TrajectoryStatus::Singular { index, .. } => Some(index),
        }
    }
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Classical fixed-step RK4 from `t0`, taking `steps` steps of size `h`.
///
/// Stops when a guard vanishes at a grid point, changes sign between grid
/// points, or the field cannot be evaluated. A guard that only approaches
/// zero (an orbit decaying toward an invariant axis) is not singular.
pub fn integrate_rk4(field: &VectorField, init: &[f64], t0: f64, h: f64, steps: usize) -> Trajectory {
    assert!(h > 0.0, "step size must be positive");
    assert_eq!(init.len(), field.dim(), "initial state has wrong dimension");
    let mut grid = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut y = init.to_vec();
    let mut prev_guards: Option<Vec<f64>> = None;
    let stop = |grid, states, index, condition, crossing| Trajectory {
        grid,
        states,
        status: TrajectoryStatus::Singular {
            index,
            condition,
            crossing,
        },
    };
    for i in 0..=steps {
        let t = t0 + i as f64 * h;
        let guards = match field.guard_values(t, &y) {
            Ok(g) => g,
            Err((g, _)) => return stop(grid, states, i, format!("{g} != 0"), false),
        };
        for (j, g) in guards.iter().enumerate() {
            let text = format!("{} != 0", field.guards[j]);
            if !g.is_finite() || *g == 0.0 {
                return stop(grid, states, i, text, false);
            }
            if let Some(prev) = &prev_guards {
                if prev[j].signum() != g.signum() {
                    return stop(grid, states, i, text, true);
                }
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return stop(grid, states, i, "non-finite state".into(), false);
        }
        grid.push(t);
        states.push(y.clone());
        prev_guards = Some(guards);
        if i == steps {
            break;
        }
        let step = || -> Result<Vec<f64>, ExprError> {
            let k1 = field.eval(t, &y)?;
            let k2 = field.eval(t + h / 2.0, &axpy(&y, h / 2.0, &k1))?;
            let k3 = field.eval(t + h / 2.0, &axpy(&y, h / 2.0, &k2))?;
            let k4 = field.eval(t + h, &axpy(&y, h, &k3))?;
            Ok((0..y.len())
                .map(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
                .collect())
        };
        match step() {
            Ok(next) => y = next,
            Err(e) => return stop(grid, states, i + 1, e.to_string(), false),
        }
    }
    Trajectory {
        grid,
        states,
        status: TrajectoryStatus::Completed,
    }
}

/// Initial companion state of a folded equation for a system state at `t0`.
pub fn folded_initial_state(f: &Folding, sys: &System, init: &[f64], t0: f64) -> Result<Vec<f64>, ExprError> {
    let nums: Vec<Num> = init.iter().map(|&v| Num::Float(v)).collect();
    let mut out: Vec<f64> = f
        .initial_values(&nums, Num::Float(t0))?
        .iter()
        .map(Num::to_f64)
        .collect();
    for (v, _) in f.recurrences() {
        out.push(init[sys.var_index(v).expect("aux variable belongs to the system")]);
    }
    Ok(out)
}

/// System states rebuilt from a companion-form trajectory of `f`: the pivot
/// and auxiliary components are read off, passive ones evaluated. Stops at
/// the first grid point where a passive equation cannot be evaluated.
pub fn recover_flow(f: &Folding, sys: &System, traj: &Trajectory) -> (Vec<Vec<f64>>, Option<(usize, String)>) {
    let k = f.equation.order;
    let pivot = sys.var_index(&f.pivot).unwrap();
    let aux: Vec<&String> = f.recurrences().map(|(v, _)| v).collect();
    let mut out = Vec::with_capacity(traj.states.len());
    for (i, (t, y)) in traj.grid.iter().zip(&traj.states).enumerate() {
        let mut env = Env::new(&f.fns);
        env.index = Some(Num::Float(*t));
        for j in 0..k {
            env.bind(f.equation.atom(j), Num::Float(y[j]));
        }
        let mut state = vec![0.0; sys.k()];
        state[pivot] = y[0];
        for (m, v) in aux.iter().enumerate() {
            env.bind_var(v, Num::Float(y[k + m]));
            state[sys.var_index(v).unwrap()] = y[k + m];
        }
        for (v, rec) in &f.recovery {
            if let Recovery::Passive(e) = rec {
                match e.eval(&env) {
                    Ok(x) if x.to_f64().is_finite() => {
                        env.bind_var(v, x.clone());
                        state[sys.var_index(v).unwrap()] = x.to_f64();
                    }
                    Ok(_) => return (out, Some((i, format!("non-finite `{v}`")))),
                    Err(e) => return (out, Some((i, e.to_string()))),
                }
            }
        }
        out.push(state);
    }
    (out, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr_with;
    use crate::sysmodel::parse_spec;

    fn ex(sys: &System, t: &str) -> Expr {
        parse_expr_with(t, &sys.fns).unwrap()
    }

    #[test]
    fn des1_folds_to_harmonic() {
        let sys = parse_spec(
            "kind: ode\nvars: x y\nparam a\neq x = t*x^2 - y\neq y = a*x + x^2 + 2*t^2*x^3 - 2*t*x*y\n",
        )
        .unwrap();
        let f = fold_ode_2d(&sys).unwrap();
        assert_eq!(f.equation.rhs, ex(&sys, "-a*x"));
        assert_eq!(f.recovery, vec![("y".into(), Recovery::Passive(ex(&sys, "t*x^2 - x'")))]);
        assert_eq!(f.init_map[1], ex(&sys, "t*x^2 - y"));
        assert!(f.side_conditions.is_empty());
    }

    #[test]
    fn exponential_decay() {
        let sys = parse_spec("kind: ode\nvars: x\neq x = -x\n").unwrap();
        let traj = integrate_rk4(&VectorField::from_system(&sys), &[1.0], 0.0, 0.1, 10);
        assert!((traj.states[10][0] - (-1.0f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn sign_change_is_a_crossing() {
        let sys = parse_spec("kind: ode\nvars: x\neq x = -1/(x + 2)\nguard x != 0\n").unwrap();
        let traj = integrate_rk4(&VectorField::from_system(&sys), &[0.05], 0.0, 0.1, 10);
        match traj.status {
            TrajectoryStatus::Singular { crossing, .. } => assert!(crossing),
            other => panic!("expected a crossing, got {other:?}"),
        }
    }

    #[test]
    fn depth_is_capped() {
        let sys = parse_spec("kind: ode\nvars: a b c d\neq a = b\neq b = c\neq c = d\neq d = a\n").unwrap();
        assert!(matches!(fold_ode(&sys, "a"), Err(FoldError::Unsupported(_))));
    }
}
