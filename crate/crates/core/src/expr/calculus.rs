use std::collections::BTreeSet;

use super::{canonicalize, Expr, ExprError, FnRegistry, IndexVar, Node};

/// Derivative of `e` with leaf behaviour given by `leaf`; sums, products,
/// integer powers and function applications follow the usual rules.
fn diff_with(
    e: &Expr,
    leaf: &dyn Fn(&Expr) -> Expr,
    fns: &FnRegistry,
) -> Result<Expr, ExprError> {
    Ok(match e.node() {
        Node::Const(_) | Node::Pi | Node::AltSign => Expr::zero(),
        Node::Index(_) | Node::Var(_) | Node::Shift(..) | Node::Deriv(..) => leaf(e),
        Node::Sum(ts) => {
            let parts = ts
                .iter()
                .map(|t| diff_with(t, leaf, fns))
                .collect::<Result<Vec<_>, _>>()?;
            Expr::sum(parts)
        }
        Node::Product(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                let df = diff_with(f, leaf, fns)?;
                if df.is_zero() {
                    continue;
                }
                let mut factors: Vec<Expr> = fs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, g)| g.clone())
                    .collect();
                factors.push(df);
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Node::Pow(base, k) => {
            let db = diff_with(base, leaf, fns)?;
            if db.is_zero() {
                return Ok(Expr::zero());
            }
            Expr::product([Expr::int(*k), base.pow(k - 1), db])
        }
        Node::Fn(name, arg) => {
            let da = diff_with(arg, leaf, fns)?;
            if da.is_zero() {
                return Ok(Expr::zero());
            }
            outer_derivative(name, arg, fns)? * da
        }
    })
}

/// `f'(arg)` for a built-in or declared function.
fn outer_derivative(name: &str, arg: &Expr, fns: &FnRegistry) -> Result<Expr, ExprError> {
    match name {
        "sin" => return Ok(Expr::call("cos", arg.clone())),
        "cos" => return Ok(-Expr::call("sin", arg.clone())),
        "exp" => return Ok(Expr::call("exp", arg.clone())),
        _ => {}
    }
    let sym = fns
        .get(name)
        .ok_or_else(|| ExprError::MissingDerivative(name.to_string()))?;
    if let Some(d) = sym.derivative_at(arg) {
        return Ok(d);
    }
    // Inverse function rule: (g^-1)'(u) = 1 / g'(g^-1(u)).
    if let Some(inv) = sym.inverse.as_ref().and_then(|i| fns.get(i)) {
        let here = Expr::call(name, arg.clone());
        if let Some(d) = inv.derivative_at(&here) {
            return Ok(d.recip());
        }
    }
    Err(ExprError::MissingDerivative(name.to_string()))
}

/// Total derivative with respect to the continuous index `t`. Variables named
/// in `dependent` are functions of `t`: `x` becomes `x'` and `x'` becomes
/// `x''`. Other variables are constants.
pub fn differentiate(
    e: &Expr,
    dependent: &BTreeSet<String>,
    fns: &FnRegistry,
) -> Result<Expr, ExprError> {
    let leaf = |a: &Expr| match a.node() {
        Node::Index(IndexVar::T) => Expr::one(),
        Node::Var(x) if dependent.contains(x) => Expr::deriv(x, 1),
        Node::Deriv(x, k) => Expr::deriv(x, k + 1),
        _ => Expr::zero(),
    };
    diff_with(&canonicalize(e), &leaf, fns)
}

/// Partial derivative with respect to a single atom.
pub fn partial(e: &Expr, atom: &Expr, fns: &FnRegistry) -> Result<Expr, ExprError> {
    let leaf = |a: &Expr| if a == atom { Expr::one() } else { Expr::zero() };
    diff_with(&canonicalize(e), &leaf, fns)
}
