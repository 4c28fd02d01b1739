//! Closed-form foldings of planar linear systems, and semiconjugate
//! factorization of periodic second-order linear equations.

mod eigen;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use crate::expr::{
    denominator_conditions, differentiate, partial, Expr, ExprError, FnRegistry, FnSymbol,
    IndexVar, Node,
};
use crate::foldcore::{decimation_of, difference_init_map, ode_init_map, sequence_name};
use crate::sysmodel::{EqKind, Folding, HigherOrderEq, Recovery, System, SystemKind};

pub use eigen::{
    eigenseq_tables, eigensequence, iterate_factor_pair, EigenError, EigenFactorization,
    PeriodicLinearEq,
};

/// A coefficient sequence: a closed form in `n` (or `t`) or a periodic list.
#[derive(Debug, Clone, PartialEq)]
pub enum Coef {
    Expr(Expr),
    Periodic(Vec<BigRational>),
}

impl Coef {
    pub fn constant(c: BigRational) -> Coef {
        Coef::Expr(Expr::rational(c))
    }
}

impl From<Expr> for Coef {
    fn from(e: Expr) -> Coef {
        Coef::Expr(e)
    }
}

/// `x⁺ = a x + b y + α`, `y⁺ = c x + d y + β`, where `⁺` is the next index
/// or the time derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem2 {
    pub kind: EqKind,
    pub vars: [String; 2],
    pub a: Coef,
    pub b: Coef,
    pub c: Coef,
    pub d: Coef,
    pub alpha: Coef,
    pub beta: Coef,
    pub fns: FnRegistry,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinearError {
    #[error("periodic coefficient lists must share one period (got {0:?})")]
    PeriodMismatch(Vec<usize>),
    #[error("periodic coefficient lists need a difference system")]
    PeriodicInContinuousTime,
    #[error("system is not linear in its state: {0}")]
    NotLinear(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Which closed form produced the folding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinearCase {
    /// `b` never vanishes: recursive second-order form plus passive `y`.
    Invertible,
    /// `b` is a nonzero constant.
    ConstantB,
    /// `b ≡ 0`: the x-equation is recursive; `y` from its own equation.
    ZeroB,
    /// `b` vanishes somewhere but is not constant: non-recursive form with
    /// `b_n` as leading coefficient.
    NonInvertible,
    /// `b` vanishes somewhere, `c` never does: folded around `y` instead.
    PivotSwapped(Box<LinearCase>),
}

impl fmt::Display for LinearCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinearCase::Invertible => f.write_str("b nonvanishing; passive recovery"),
            LinearCase::ConstantB => f.write_str("b constant and nonzero; passive recovery"),
            LinearCase::ZeroB => f.write_str("b = 0; second component from its own first-order equation"),
            LinearCase::NonInvertible => {
                f.write_str("b not invertible everywhere; non-recursive form, second component from its own first-order equation")
            }
            LinearCase::PivotSwapped(inner) => write!(f, "pivot swapped; {inner}"),
        }
    }
}

enum Vanishing {
    Never,
    /// Symbolic; nonvanishing recorded as a side-condition.
    Assumed,
    Somewhere,
}

impl LinearSystem2 {
    /// Constant-coefficient difference system over `x, y`.
    pub fn constant(values: [BigRational; 6]) -> LinearSystem2 {
        let [a, b, c, d, alpha, beta] = values.map(Coef::constant);
        LinearSystem2 {
            kind: EqKind::Difference,
            vars: ["x".into(), "y".into()],
            a,
            b,
            c,
            d,
            alpha,
            beta,
            fns: FnRegistry::new(),
        }
    }

    pub fn with_kind(mut self, kind: EqKind) -> LinearSystem2 {
        self.kind = kind;
        self
    }

    fn coefs(&self) -> [(&'static str, &Coef); 6] {
        [
            ("a", &self.a),
            ("b", &self.b),
            ("c", &self.c),
            ("d", &self.d),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
        ]
    }

    fn table_name(&self, coef: &str) -> String {
        let base = format!("{coef}_n");
        std::iter::once(base.clone())
            .chain((2..).map(|i| format!("{base}{i}")))
            .find(|c| !self.fns.is_known(c) && !self.vars.contains(c))
            .unwrap()
    }

    /// The period shared by every list coefficient, if any.
    pub fn period(&self) -> Result<Option<usize>, LinearError> {
        let lens: BTreeSet<usize> = self
            .coefs()
            .iter()
            .filter_map(|(_, c)| match c {
                Coef::Periodic(v) => Some(v.len()),
                Coef::Expr(_) => None,
            })
            .collect();
        match lens.len() {
            0 => Ok(None),
            1 => Ok(lens.into_iter().next()),
            _ => Err(LinearError::PeriodMismatch(lens.into_iter().collect())),
        }
    }

    /// Coefficients as expressions; list coefficients become table
    /// functions applied to `n`.
    fn expressions(&self) -> Result<(HashMap<&'static str, Expr>, FnRegistry), LinearError> {
        self.period()?;
        let mut fns = self.fns.clone();
        let mut out = HashMap::new();
        for (name, c) in self.coefs() {
            let e = match c {
                Coef::Expr(e) => e.clone(),
                Coef::Periodic(values) => {
                    if self.kind == EqKind::Ode {
                        return Err(LinearError::PeriodicInContinuousTime);
                    }
                    let table = self.table_name(name);
                    fns.declare(FnSymbol::periodic(&table, values.clone()));
                    Expr::call(&table, Expr::n())
                }
            };
            out.insert(name, e);
        }
        Ok((out, fns))
    }

    /// The system written out as ordinary equations.
    pub fn to_system(&self) -> Result<System, LinearError> {
        let (e, fns) = self.expressions()?;
        let (x, y) = (Expr::var(&self.vars[0]), Expr::var(&self.vars[1]));
        let rhs = vec![
            &e["a"] * &x + &e["b"] * &y + e["alpha"].clone(),
            &e["c"] * &x + &e["d"] * &y + e["beta"].clone(),
        ];
        let symbolic = rhs
            .iter()
            .flat_map(|r| r.referenced_names())
            .filter(|name| !self.vars.contains(name))
            .collect();
        let kind = match self.kind {
            EqKind::Difference => SystemKind::Recursive,
            EqKind::Ode => SystemKind::Ode,
        };
        System::new(kind, self.vars.to_vec(), rhs, BTreeMap::new(), symbolic, fns)
            .map_err(|e| LinearError::NotLinear(e.to_string()))
    }

    /// Reads the coefficients off a planar system affine in its state.
    pub fn from_system(sys: &System) -> Result<LinearSystem2, LinearError> {
        if sys.k() != 2 {
            return Err(LinearError::NotLinear(format!("{} equations", sys.k())));
        }
        let kind = if sys.kind == SystemKind::Ode {
            EqKind::Ode
        } else {
            EqKind::Difference
        };
        let rhs = sys.recursive_rhs();
        let (x, y) = (Expr::var(&sys.vars[0]), Expr::var(&sys.vars[1]));
        let mut parts = Vec::new();
        for (v, f) in sys.vars.iter().zip(&rhs) {
            let fx = partial(f, &x, &sys.fns)?;
            let fy = partial(f, &y, &sys.fns)?;
            let rest = f - &(&fx * &x) - &fy * &y;
            for part in [&fx, &fy, &rest] {
                if part.contains(&x) || part.contains(&y) {
                    return Err(LinearError::NotLinear(format!("equation for `{v}`")));
                }
            }
            parts.push((fx, fy, rest));
        }
        let [(a, b, alpha), (c, d, beta)]: [(Expr, Expr, Expr); 2] = parts.try_into().unwrap();
        Ok(LinearSystem2 {
            kind,
            vars: [sys.vars[0].clone(), sys.vars[1].clone()],
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
            alpha: alpha.into(),
            beta: beta.into(),
            fns: sys.fns.clone(),
        })
    }

    fn swapped(&self) -> LinearSystem2 {
        LinearSystem2 {
            kind: self.kind,
            vars: [self.vars[1].clone(), self.vars[0].clone()],
            a: self.d.clone(),
            b: self.c.clone(),
            c: self.b.clone(),
            d: self.a.clone(),
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
            fns: self.fns.clone(),
        }
    }
}

/// Entries of a coefficient known to be periodic or constant.
fn known_values(c: &Coef, fns: &FnRegistry) -> Option<Vec<BigRational>> {
    match c {
        Coef::Periodic(v) => Some(v.clone()),
        Coef::Expr(e) => match e.node() {
            Node::Const(r) => Some(vec![r.clone()]),
            Node::Fn(name, arg) if *arg == Expr::n() => fns.get(name).and_then(|s| s.table.clone()),
            _ => None,
        },
    }
}

fn vanishing(c: &Coef, fns: &FnRegistry) -> Vanishing {
    match known_values(c, fns) {
        Some(v) if v.iter().all(|x| !x.is_zero()) => Vanishing::Never,
        Some(_) => Vanishing::Somewhere,
        None => Vanishing::Assumed,
    }
}

fn is_constant(c: &Coef, fns: &FnRegistry) -> bool {
    match known_values(c, fns) {
        Some(v) => v.windows(2).all(|w| w[0] == w[1]),
        None => match c {
            Coef::Expr(e) => {
                !e.contains(&Expr::n()) && !e.contains(&Expr::t()) && !e.contains(&Expr::alt_sign())
            }
            Coef::Periodic(_) => false,
        },
    }
}

fn is_zero_coef(c: &Coef, fns: &FnRegistry) -> bool {
    known_values(c, fns).is_some_and(|v| v.iter().all(Zero::is_zero))
}

/// Raises `n` by one in a coefficient expression.
fn next(e: &Expr) -> Expr {
    e.map_leaves(&mut |x| match x.node() {
        Node::Index(IndexVar::N) => Some(Expr::n() + Expr::one()),
        Node::AltSign => Some(-Expr::alt_sign()),
        _ => None,
    })
}

/// Closed-form folding of a planar linear difference or differential
/// system.
pub fn fold_linear_2d(sys: &LinearSystem2) -> Result<(Folding, LinearCase), LinearError> {
    if sys.kind == EqKind::Ode {
        return fold_linear_ode_2d(sys);
    }
    let fns = sys.expressions()?.1;
    match vanishing(&sys.b, &fns) {
        Vanishing::Never | Vanishing::Assumed => {
            let case = if is_constant(&sys.b, &fns) {
                LinearCase::ConstantB
            } else {
                LinearCase::Invertible
            };
            Ok((difference_folding(sys, &case)?, case))
        }
        Vanishing::Somewhere => {
            if matches!(vanishing(&sys.c, &fns), Vanishing::Never | Vanishing::Assumed) {
                let (mut f, inner) = fold_linear_2d(&sys.swapped())?;
                // Initial states arrive in the caller's variable order.
                f.vars = sys.vars.to_vec();
                return Ok((f, LinearCase::PivotSwapped(Box::new(inner))));
            }
            let case = if is_zero_coef(&sys.b, &fns) {
                LinearCase::ZeroB
            } else {
                LinearCase::NonInvertible
            };
            Ok((difference_folding(sys, &case)?, case))
        }
    }
}

fn difference_folding(sys: &LinearSystem2, case: &LinearCase) -> Result<Folding, LinearError> {
    let (e, fns) = sys.expressions()?;
    let system = sys.to_system()?;
    let seq = sequence_name(&system);
    let (s0, s1) = (Expr::shift(&seq, 0), Expr::shift(&seq, 1));
    let (a, b, c, d, al, be) = (&e["a"], &e["b"], &e["c"], &e["d"], &e["alpha"], &e["beta"]);
    let (a1, b1, al1) = (next(a), next(b), next(al));

    let (rhs, lead) = match case {
        LinearCase::Invertible => {
            let big_a = &a1 + &(&b1 * d / b);
            let big_b = &b1 * &(c - &(d * a / b));
            let big_c = &(&b1 * &(be - &(d * al / b))) + &al1;
            (big_a * &s1 + big_b * &s0 + big_c, None)
        }
        LinearCase::ConstantB | LinearCase::ZeroB => (
            (&a1 + d) * &s1 - (d * a - b * c) * &s0 - d * al + b * be + al1,
            None,
        ),
        LinearCase::NonInvertible => (
            (b * &a1 + &b1 * d) * &s1 + &b1 * &(b * c - d * a) * &s0
                - &b1 * &(d * al - b * be)
                + b * &al1,
            Some(b.clone()),
        ),
        LinearCase::PivotSwapped(_) => unreachable!("swapping happens before building"),
    };
    let y = &sys.vars[1];
    let recovery = match case {
        LinearCase::Invertible | LinearCase::ConstantB => {
            Recovery::Passive((&s1 - &(a * &s0) - al.clone()) / b.clone())
        }
        _ => Recovery::Recurrence(d * &Expr::var(y) + c * &s0 + be.clone()),
    };
    let rhs = crate::expr::canonicalize(&rhs);
    let mut side = denominator_conditions(&rhs, &fns);
    side.extend(denominator_conditions(recovery.expr(), &fns));
    if let Some(l) = &lead {
        side.insert(crate::expr::SideCondition::nonzero(l.clone()));
    }
    let equation = HigherOrderEq {
        kind: EqKind::Difference,
        order: 2,
        seq,
        rhs,
        lead,
    };
    Ok(Folding {
        decimation: decimation_of(&equation),
        equation,
        pivot: sys.vars[0].clone(),
        vars: system.vars.clone(),
        recovery: vec![(y.clone(), recovery)],
        init_map: difference_init_map(&system, &sys.vars[0], 2),
        side_conditions: side,
        kappa: 2,
        fns,
        notes: Vec::new(),
    })
}

/// Closed-form folding of `x' = a x + b y + α`, `y' = c x + d y + β` with
/// coefficients in `t`.
pub fn fold_linear_ode_2d(sys: &LinearSystem2) -> Result<(Folding, LinearCase), LinearError> {
    let (e, fns) = sys.expressions()?;
    let system = sys.to_system()?;
    let none = BTreeSet::new();
    let dt = |x: &Expr| differentiate(x, &none, &fns);
    let (a, b, c, d, al, be) = (&e["a"], &e["b"], &e["c"], &e["d"], &e["alpha"], &e["beta"]);
    let pivot = &sys.vars[0];
    let (x, x1) = (Expr::var(pivot), Expr::deriv(pivot, 1));
    let (da, db, dal) = (dt(a)?, dt(b)?, dt(al)?);

    let constant_b = is_constant(&sys.b, &fns);
    let rhs = if constant_b {
        (a + d) * &x1 + (b * c - a * d + da) * &x - d * al + b * be + dal
    } else {
        (a + d + &db / b) * &x1 + (b * c - a * d + da - &(&db * a) / b) * &x - d * al + b * be
            - &(&db * al) / b
            + dal
    };
    let (case, recovery) = if constant_b && is_zero_coef(&sys.b, &fns) {
        (
            LinearCase::ZeroB,
            Recovery::Recurrence(c * &x + d * &Expr::var(&sys.vars[1]) + be.clone()),
        )
    } else {
        let case = if constant_b {
            LinearCase::ConstantB
        } else {
            LinearCase::Invertible
        };
        (case, Recovery::Passive((&x1 - &(a * &x) - al.clone()) / b.clone()))
    };
    let rhs = crate::expr::canonicalize(&rhs);
    let mut side = denominator_conditions(&rhs, &fns);
    side.extend(denominator_conditions(recovery.expr(), &fns));
    Ok((
        Folding {
            equation: HigherOrderEq::ode(2, pivot, rhs),
            pivot: pivot.clone(),
            vars: system.vars.clone(),
            recovery: vec![(sys.vars[1].clone(), recovery)],
            init_map: ode_init_map(&system, pivot, 2)?,
            side_conditions: side,
            kappa: 2,
            decimation: None,
            fns,
            notes: Vec::new(),
        },
        case,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, rat};
    use crate::foldcore::fold;

    fn consts(v: [i64; 6]) -> LinearSystem2 {
        LinearSystem2::constant(v.map(|x| rat(x, 1)))
    }

    #[test]
    fn rotation_gives_negated_second_shift() {
        let (f, case) = fold_linear_2d(&consts([0, 1, -1, 0, 0, 0])).unwrap();
        assert_eq!(case, LinearCase::ConstantB);
        assert_eq!(f.equation.rhs, parse_expr("-s[n]").unwrap());
    }

    #[test]
    fn trace_and_determinant() {
        let (f, _) = fold_linear_2d(&consts([2, 3, 5, 7, 0, 0])).unwrap();
        // (a + d) s[n+1] - (ad - bc) s[n]
        assert_eq!(f.equation.rhs, parse_expr("9*s[n+1] + s[n]").unwrap());
        let (g, _) = fold(&consts([2, 3, 5, 7, 0, 0]).to_system().unwrap(), "x").unwrap();
        assert_eq!(f.equation, g.equation);
        assert_eq!(f.recovery, g.recovery);
    }

    #[test]
    fn zero_b_swaps_pivot_when_c_is_invertible() {
        let (f, case) = fold_linear_2d(&consts([1, 0, 2, 3, 0, 0])).unwrap();
        assert_eq!(case, LinearCase::PivotSwapped(Box::new(LinearCase::ConstantB)));
        assert_eq!(f.pivot, "y");
    }

    #[test]
    fn zero_b_and_c_uses_auxiliary_equation() {
        let (f, case) = fold_linear_2d(&consts([1, 0, 0, 3, 1, 1])).unwrap();
        assert_eq!(case, LinearCase::ZeroB);
        assert!(matches!(f.recovery[0].1, Recovery::Recurrence(_)));
    }

    #[test]
    fn periodic_b_with_zero_is_non_recursive() {
        let mut sys = consts([1, 0, 0, 1, 0, 0]);
        sys.b = Coef::Periodic(vec![rat(1, 1), rat(0, 1)]);
        sys.c = Coef::Periodic(vec![rat(0, 1), rat(2, 1)]);
        let (f, case) = fold_linear_2d(&sys).unwrap();
        assert_eq!(case, LinearCase::NonInvertible);
        assert!(f.equation.lead.is_some());
    }

    #[test]
    fn symbolic_b_records_side_condition() {
        let mut sys = consts([0, 0, 1, 0, 0, 0]);
        sys.b = Coef::Expr(parse_expr("q").unwrap());
        let (f, case) = fold_linear_2d(&sys).unwrap();
        assert_eq!(case, LinearCase::ConstantB);
        assert!(f.side_conditions.iter().any(|c| c.to_string() == "q != 0"));
    }

    #[test]
    fn ode_constant_coefficients() {
        let sys = consts([0, 1, -1, 0, 0, 0]).with_kind(EqKind::Ode);
        let (f, _) = fold_linear_ode_2d(&sys).unwrap();
        assert_eq!(f.equation.rhs, parse_expr("-x").unwrap());
        let sys = LinearSystem2 {
            a: Coef::Expr(parse_expr("a").unwrap()),
            b: Coef::Expr(parse_expr("b").unwrap()),
            c: Coef::Expr(parse_expr("c").unwrap()),
            d: Coef::Expr(parse_expr("d").unwrap()),
            ..consts([0; 6]).with_kind(EqKind::Ode)
        };
        let (f, _) = fold_linear_ode_2d(&sys).unwrap();
        assert_eq!(f.equation.rhs, parse_expr("(a + d)*x' + (b*c - a*d)*x").unwrap());
    }

    #[test]
    fn ode_time_varying_b() {
        let sys = LinearSystem2 {
            b: Coef::Expr(parse_expr("exp(t)").unwrap()),
            ..consts([0, 0, 0, 0, 0, 0]).with_kind(EqKind::Ode)
        };
        let (f, case) = fold_linear_ode_2d(&sys).unwrap();
        assert_eq!(case, LinearCase::Invertible);
        assert_eq!(f.equation.rhs, parse_expr("x'").unwrap());
    }
}
