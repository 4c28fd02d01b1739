use std::collections::HashMap;

use num_traits::ToPrimitive;

use super::{Expr, ExprError, FnRegistry, IndexVar, Node, Num};

/// Evaluation environment.
///
/// `bindings` maps atoms (variables, sequence atoms, derivative atoms) to
/// values. `index` is the value of `n` or `t`. A divisor whose magnitude does
/// not exceed `zero_tol` counts as zero; exact zeros always do.
#[derive(Debug, Clone, Default)]
pub struct Env<'a> {
    pub bindings: HashMap<Expr, Num>,
    pub index: Option<Num>,
    pub fns: Option<&'a FnRegistry>,
    pub zero_tol: f64,
}

impl<'a> Env<'a> {
    pub fn new(fns: &'a FnRegistry) -> Env<'a> {
        Env {
            fns: Some(fns),
            ..Env::default()
        }
    }

    pub fn bind(&mut self, atom: Expr, value: Num) -> &mut Self {
        self.bindings.insert(atom, value);
        self
    }

    pub fn bind_var(&mut self, name: &str, value: Num) -> &mut Self {
        self.bind(Expr::var(name), value)
    }

    pub fn with_index(mut self, value: Num) -> Self {
        self.index = Some(value);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.zero_tol = tol;
        self
    }
}

fn integer_index(v: &Num) -> Option<i64> {
    match v {
        Num::Exact(r) if r.is_integer() => r.to_integer().to_i64(),
        Num::Float(x) if x.fract() == 0.0 => Some(*x as i64),
        _ => None,
    }
}

impl Expr {
    pub fn eval(&self, env: &Env<'_>) -> Result<Num, ExprError> {
        match self.node() {
            Node::Const(c) => Ok(Num::Exact(c.clone())),
            Node::Pi => Ok(Num::Float(std::f64::consts::PI)),
            Node::Index(which) => env.index.clone().ok_or_else(|| {
                ExprError::UnboundVariable(match which {
                    IndexVar::N => "n".to_string(),
                    IndexVar::T => "t".to_string(),
                })
            }),
            Node::AltSign => {
                let n = env
                    .index
                    .as_ref()
                    .and_then(integer_index)
                    .ok_or_else(|| ExprError::UnboundVariable("n".to_string()))?;
                Ok(Num::int(if n.rem_euclid(2) == 0 { 1 } else { -1 }))
            }
            Node::Var(_) | Node::Shift(..) | Node::Deriv(..) => env
                .bindings
                .get(self)
                .cloned()
                .ok_or_else(|| ExprError::UnboundVariable(self.to_string())),
            Node::Sum(ts) => ts
                .iter()
                .try_fold(Num::int(0), |acc, t| Ok(&acc + &t.eval(env)?)),
            Node::Product(fs) => fs
                .iter()
                .try_fold(Num::int(1), |acc, f| Ok(&acc * &f.eval(env)?)),
            Node::Pow(base, k) => {
                let b = base.eval(env)?;
                if *k < 0 && b.is_zero_within(env.zero_tol) {
                    return Err(ExprError::DivisionByZero(base.to_string()));
                }
                Ok(b.powi(*k))
            }
            Node::Fn(name, arg) => eval_fn(name, arg, env),
        }
    }
}

fn eval_fn(name: &str, arg: &Expr, env: &Env<'_>) -> Result<Num, ExprError> {
    let a = arg.eval(env)?;
    let builtin = match name {
        "sin" => Some(f64::sin as fn(f64) -> f64),
        "cos" => Some(f64::cos as fn(f64) -> f64),
        "exp" => Some(f64::exp as fn(f64) -> f64),
        _ => None,
    };
    if let Some(f) = builtin {
        return Ok(Num::Float(f(a.to_f64())));
    }
    let sym = env
        .fns
        .and_then(|r| r.get(name))
        .ok_or_else(|| ExprError::UndefinedFunction(name.to_string()))?;
    if let Some(table) = &sym.table {
        let m = integer_index(&a).ok_or_else(|| ExprError::UndefinedFunction(name.to_string()))?;
        let p = table.len() as i64;
        if p == 0 {
            return Err(ExprError::UndefinedFunction(name.to_string()));
        }
        return Ok(Num::Exact(table[m.rem_euclid(p) as usize].clone()));
    }
    let body = sym
        .definition
        .as_ref()
        .ok_or_else(|| ExprError::UndefinedFunction(name.to_string()))?;
    let mut inner = Env {
        bindings: HashMap::new(),
        index: env.index.clone(),
        fns: env.fns,
        zero_tol: env.zero_tol,
    };
    inner.bind_var(&sym.arg, a);
    body.eval(&inner)
}

/// Evaluates `e` with variables bound by name and the index (`n` or `t`) set
/// to `index`.
pub fn eval_numeric(
    e: &Expr,
    bindings: &HashMap<String, Num>,
    index: Option<Num>,
    fns: &FnRegistry,
) -> Result<Num, ExprError> {
    let mut env = Env::new(fns);
    for (name, v) in bindings {
        env.bind_var(name, v.clone());
    }
    env.index = index;
    e.eval(&env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, parse_expr_with, FnSymbol};

    #[test]
    fn exact_evaluation_stays_exact() {
        let e = parse_expr("(x + 1)/(2*y)").unwrap();
        let reg = FnRegistry::new();
        let b = HashMap::from([("x".to_string(), Num::int(3)), ("y".to_string(), Num::int(5))]);
        let v = eval_numeric(&e, &b, None, &reg).unwrap();
        assert_eq!(v.to_string(), "2/5");
    }

    #[test]
    fn alternating_sign_and_pi() {
        let reg = FnRegistry::new();
        let e = parse_expr("sgn_n + 2*cos(2*pi*n/3)").unwrap();
        let v = eval_numeric(&e, &HashMap::new(), Some(Num::int(3)), &reg).unwrap();
        assert!((v.to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let reg = FnRegistry::new();
        let e = parse_expr("1/(x - 1)").unwrap();
        let b = HashMap::from([("x".to_string(), Num::int(1))]);
        assert!(matches!(
            eval_numeric(&e, &b, None, &reg),
            Err(ExprError::DivisionByZero(_))
        ));
    }

    #[test]
    fn periodic_tables_and_definitions() {
        let mut reg = FnRegistry::new();
        reg.declare(FnSymbol::periodic(
            "A",
            vec![1.into(), 2.into(), 3.into()].into_iter().map(num_rational::BigRational::from_integer).collect(),
        ));
        reg.declare(FnSymbol::opaque("sq").with_definition(parse_expr("u^2").unwrap()));
        let e = parse_expr_with("A(n) + sq(x)", &reg).unwrap();
        let b = HashMap::from([("x".to_string(), Num::int(4))]);
        let v = eval_numeric(&e, &b, Some(Num::int(-2)), &reg).unwrap();
        assert_eq!(v, Num::int(18));
    }
}
