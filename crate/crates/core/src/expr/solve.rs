use std::collections::BTreeSet;

use super::canon::to_poly;
use super::{canonicalize, denominator_conditions, Expr, ExprError, FnRegistry, Node, SideCondition};

fn not_isolatable(target: &Expr, reason: &str) -> ExprError {
    ExprError::NotIsolatable {
        target: target.to_string(),
        reason: reason.to_string(),
    }
}

/// Solves `lhs = rhs` for the atom `target`, which must occur in `rhs` and not
/// in `lhs`.
///
/// When `rhs` is affine in `target` (`P + Q*target`, with `target` absent from
/// `P`, `Q` and every other atom) the result is `(lhs - P)/Q`. Otherwise
/// `target` must occur exactly once, and is isolated by peeling sums,
/// products, reciprocals and functions with a declared inverse.
///
/// The returned side-conditions are the denominators of the solution.
pub fn solve_for(
    lhs: &Expr,
    rhs: &Expr,
    target: &Expr,
    fns: &FnRegistry,
) -> Result<(Expr, BTreeSet<SideCondition>), ExprError> {
    let rhs = canonicalize(rhs);
    let lhs = canonicalize(lhs);
    if !rhs.contains(target) {
        return Err(not_isolatable(target, "does not occur in the equation"));
    }
    if lhs.contains(target) {
        return Err(not_isolatable(target, "occurs on both sides"));
    }
    let solution = match affine_split(&rhs, target) {
        Some((p, q)) => (lhs - p) / q,
        None => {
            if rhs.count(target) != 1 {
                return Err(not_isolatable(
                    target,
                    "occurs more than once and not affinely",
                ));
            }
            isolate(&rhs, lhs, target, fns)?
        }
    };
    let conditions = denominator_conditions(&solution, fns);
    Ok((solution, conditions))
}

/// Splits `e = p + q*target` when `e` is affine in `target`.
fn affine_split(e: &Expr, target: &Expr) -> Option<(Expr, Expr)> {
    let poly = to_poly(e);
    let mut p = Vec::new();
    let mut q = Vec::new();
    for (mono, c) in &poly.terms {
        let mut rest = Vec::new();
        let mut power = 0;
        for (atom, k) in mono {
            if atom == target {
                power = *k;
            } else if atom.contains(target) {
                return None;
            } else {
                rest.push(Expr::from_node(Node::Pow(atom.clone(), *k)));
            }
        }
        rest.push(Expr::rational(c.clone()));
        let term = Expr::product(rest);
        match power {
            0 => p.push(term),
            1 => q.push(term),
            _ => return None,
        }
    }
    let q = Expr::sum(q);
    if q.is_zero() || q.contains(target) {
        return None;
    }
    Some((Expr::sum(p), q))
}

fn isolate(side: &Expr, value: Expr, target: &Expr, fns: &FnRegistry) -> Result<Expr, ExprError> {
    if side == target {
        return Ok(value);
    }
    match side.node() {
        Node::Sum(ts) => {
            let (inner, others): (Vec<&Expr>, Vec<&Expr>) = ts.iter().partition(|t| t.contains(target));
            let rest = Expr::sum(others.into_iter().cloned());
            isolate(inner[0], value - rest, target, fns)
        }
        Node::Product(fs) => {
            let (inner, others): (Vec<&Expr>, Vec<&Expr>) = fs.iter().partition(|f| f.contains(target));
            let rest = Expr::product(others.into_iter().cloned());
            isolate(inner[0], value / rest, target, fns)
        }
        Node::Pow(base, -1) => isolate(base, value.recip(), target, fns),
        Node::Pow(..) => Err(not_isolatable(target, "appears under a power other than 1 or -1")),
        Node::Fn(name, arg) => {
            let inverse = fns
                .get(name)
                .and_then(|s| s.inverse.clone())
                .ok_or_else(|| not_isolatable(target, &format!("`{name}` has no declared inverse")))?;
            isolate(arg, Expr::call(&inverse, value), target, fns)
        }
        _ => Err(not_isolatable(target, "unsupported structure")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, parse_expr_with, FnSymbol};

    #[test]
    fn affine_isolation_records_denominator() {
        let reg = FnRegistry::new();
        let rhs = parse_expr("a*x + b*y").unwrap();
        let (h, conds) = solve_for(&Expr::var("s"), &rhs, &Expr::var("y"), &reg).unwrap();
        assert_eq!(h, parse_expr("(s - a*x)/b").unwrap());
        assert!(conds.contains(&SideCondition::nonzero(Expr::var("b"))));
    }

    #[test]
    fn isolates_through_declared_inverse() {
        let mut reg = FnRegistry::new();
        reg.declare(FnSymbol::opaque("psi").nonvanishing());
        reg.declare_inverse_pair("psi", "psiinv");
        let rhs = parse_expr_with("2 + 1/psi(y)", &reg).unwrap();
        let (h, conds) = solve_for(&Expr::var("s"), &rhs, &Expr::var("y"), &reg).unwrap();
        assert_eq!(h, parse_expr_with("psiinv(1/(s - 2))", &reg).unwrap());
        assert_eq!(conds.len(), 1);
    }

    #[test]
    fn rejects_non_invertible_occurrences() {
        let mut reg = FnRegistry::new();
        reg.declare(FnSymbol::opaque("phi"));
        let rhs = parse_expr_with("phi(y)", &reg).unwrap();
        assert!(solve_for(&Expr::var("s"), &rhs, &Expr::var("y"), &reg).is_err());
        let rhs = parse_expr("y^2 + y").unwrap();
        assert!(solve_for(&Expr::var("s"), &rhs, &Expr::var("y"), &reg).is_err());
        let rhs = parse_expr("x").unwrap();
        assert!(solve_for(&Expr::var("s"), &rhs, &Expr::var("y"), &reg).is_err());
    }

    #[test]
    fn affine_in_rational_context() {
        let reg = FnRegistry::new();
        let rhs = parse_expr("x*y/(x + 1)").unwrap();
        let (h, _) = solve_for(&Expr::var("s"), &rhs, &Expr::var("y"), &reg).unwrap();
        assert_eq!(h, parse_expr("s*(x + 1)/x").unwrap());
    }
}
