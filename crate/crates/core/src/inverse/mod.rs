//! The inverse problem: given the first component `f` of a planar system and
//! a target second-order equation `φ`, find the second component `g`.
//!
//! Expressions use `u` for the pivot, `v` for the second variable and `w` for
//! the next pivot value (`s[n+1]` or `x'`).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::expr::{
    canonicalize, denominator_conditions, partial, solve_for, Expr, ExprError, FnRegistry,
    IndexVar, Node, SideCondition,
};
use crate::sysmodel::{System, SystemKind};

pub const U: &str = "u";
pub const V: &str = "v";
pub const W: &str = "w";

/// Which special form of the target equation is expected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnfoldMode {
    /// `s[n+2] = φ(n, s[n], s[n+1])`.
    #[default]
    General,
    /// `φ` depends on `u` only: `s[n+2] = φ(n, s[n])`.
    Cdn,
    /// `φ` depends on `w` only: `s[n+2] = φ(n, s[n+1])`.
    O1,
    /// `φ = α u + β w`.
    Lin,
}

impl std::str::FromStr for UnfoldMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(UnfoldMode::General),
            "cdn" => Ok(UnfoldMode::Cdn),
            "o1" => Ok(UnfoldMode::O1),
            "lin" => Ok(UnfoldMode::Lin),
            other => Err(format!("unknown mode `{other}` (general, cdn, o1, lin)")),
        }
    }
}

impl fmt::Display for UnfoldMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnfoldMode::General => "general",
            UnfoldMode::Cdn => "cdn",
            UnfoldMode::O1 => "o1",
            UnfoldMode::Lin => "lin",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InverseError {
    #[error("f cannot be solved for v: {0}")]
    NotIsolatable(ExprError),
    #[error("f does not depend on v")]
    ZeroPartial,
    #[error("phi does not have the {mode} form: {reason}")]
    ModeMismatch { mode: UnfoldMode, reason: String },
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// The second component and the conditions under which it is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct Unfolding {
    pub kind: SystemKind,
    pub f: Expr,
    pub g: Expr,
    pub side_conditions: BTreeSet<SideCondition>,
}

fn check_mode(phi: &Expr, mode: UnfoldMode, fns: &FnRegistry) -> Result<(), InverseError> {
    let (u, w) = (Expr::var(U), Expr::var(W));
    let mismatch = |reason: &str| InverseError::ModeMismatch {
        mode,
        reason: reason.to_string(),
    };
    match mode {
        UnfoldMode::General => Ok(()),
        UnfoldMode::Cdn if phi.contains(&w) => Err(mismatch("it mentions w")),
        UnfoldMode::O1 if phi.contains(&u) => Err(mismatch("it mentions u")),
        UnfoldMode::Lin => {
            let alpha = partial(phi, &u, fns)?;
            let beta = partial(phi, &w, fns)?;
            let rest = canonicalize(&(phi - &(&alpha * &u) - &beta * &w));
            let free = |e: &Expr| !e.contains(&u) && !e.contains(&w);
            if free(&alpha) && free(&beta) && rest.is_zero() {
                Ok(())
            } else {
                Err(mismatch("it is not alpha*u + beta*w"))
            }
        }
        _ => Ok(()),
    }
}

fn check_reserved(e: &Expr, kind: SystemKind) -> Result<(), InverseError> {
    let reserved: &[&str] = match kind {
        SystemKind::Ode => &["x", "y"],
        _ => &["x", "y", "s"],
    };
    for name in e.referenced_names() {
        if reserved.contains(&name.as_str()) {
            return Err(InverseError::Reserved(name));
        }
    }
    Ok(())
}

/// `g(n, u, v) = h(n+1, f, φ(n, u, f))` where `h` solves `w = f(n, u, v)` for `v`.
pub fn unfold_difference(f: &Expr, phi: &Expr, mode: UnfoldMode, fns: &FnRegistry) -> Result<Unfolding, InverseError> {
    check_reserved(f, SystemKind::Recursive)?;
    check_reserved(phi, SystemKind::Recursive)?;
    check_mode(phi, mode, fns)?;
    let (h, mut side) =
        solve_for(&Expr::var(W), f, &Expr::var(V), fns).map_err(InverseError::NotIsolatable)?;
    let phi_at = phi.substitute(&HashMap::from([(W.to_string(), f.clone())]));
    let g = h.map_leaves(&mut |x| match x.node() {
        Node::Index(IndexVar::N) => Some(Expr::n() + Expr::one()),
        Node::AltSign => Some(-Expr::alt_sign()),
        Node::Var(name) if name == U => Some(f.clone()),
        Node::Var(name) if name == W => Some(phi_at.clone()),
        _ => None,
    });
    side.extend(denominator_conditions(&g, fns));
    Ok(Unfolding {
        kind: SystemKind::Recursive,
        f: canonicalize(f),
        g,
        side_conditions: side,
    })
}

/// `g = [φ(t, u, f) − f·f_u − f_t] / f_v`.
pub fn unfold_ode(f: &Expr, phi: &Expr, fns: &FnRegistry) -> Result<Unfolding, InverseError> {
    check_reserved(f, SystemKind::Ode)?;
    check_reserved(phi, SystemKind::Ode)?;
    let f_v = partial(f, &Expr::var(V), fns)?;
    if f_v.is_zero() {
        return Err(InverseError::ZeroPartial);
    }
    let f_u = partial(f, &Expr::var(U), fns)?;
    let f_t = partial(f, &Expr::t(), fns)?;
    let phi_at = phi.substitute(&HashMap::from([(W.to_string(), f.clone())]));
    let g = (phi_at - f * &f_u - f_t) / f_v.clone();
    let mut side = denominator_conditions(&g, fns);
    if f_v.as_const().is_none() {
        side.insert(SideCondition::nonzero(f_v));
    }
    Ok(Unfolding {
        kind: SystemKind::Ode,
        f: canonicalize(f),
        g,
        side_conditions: side,
    })
}

impl Unfolding {
    /// The assembled system over `x, y`, with every other free name a
    /// symbolic parameter.
    pub fn to_system(&self, fns: &FnRegistry) -> System {
        let b = HashMap::from([(U.to_string(), Expr::var("x")), (V.to_string(), Expr::var("y"))]);
        let rhs = vec![self.f.substitute(&b), self.g.substitute(&b)];
        let vars = vec!["x".to_string(), "y".to_string()];
        let symbolic: BTreeSet<String> = rhs
            .iter()
            .flat_map(|e| e.referenced_names())
            .filter(|n| !vars.contains(n))
            .collect();
        System::new(self.kind, vars, rhs, BTreeMap::new(), symbolic, fns.clone())
            .expect("assembled system is well formed")
    }
}

/// The target equation's right-hand side in the folded variables.
pub fn target_equation(phi: &Expr, kind: SystemKind, seq: &str) -> Expr {
    let (u, w) = match kind {
        SystemKind::Ode => (Expr::var(seq), Expr::deriv(seq, 1)),
        _ => (Expr::shift(seq, 0), Expr::shift(seq, 1)),
    };
    phi.substitute(&HashMap::from([(U.to_string(), u), (W.to_string(), w)]))
}
