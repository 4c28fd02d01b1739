//! Symbolic expression kernel.
//!
//! Expressions are immutable trees over exact rationals, named variables, the
//! time index (`n` for difference contexts, `t` for differential ones), the
//! alternating sign `(-1)^n`, sequence atoms `x[n+k]`, derivative atoms `x''`,
//! and applications of declared function symbols.
//!
//! Every public constructor returns the canonical form described in [`canon`]:
//! an expanded sum of monomials in which multi-term denominators are kept as
//! normalized sum atoms with negative exponents. Two expressions are equal
//! exactly when their canonical trees are structurally equal.

mod calculus;
mod canon;
mod eval;
mod num;
mod parse;
mod solve;
mod symbols;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use calculus::{differentiate, partial};
pub use canon::canonicalize;
pub use eval::{eval_numeric, Env};
pub use num::Num;
pub use parse::{parse_expr, parse_expr_with, parse_rational};
pub use solve::solve_for;
pub use symbols::{FnRegistry, FnSymbol, BUILTIN_FUNCTIONS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function symbol `{name}` at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },
    #[error("cannot isolate `{target}`: {reason}")]
    NotIsolatable { target: String, reason: String },
    #[error("no derivative declared for function `{0}`")]
    MissingDerivative(String),
    #[error("division by zero: denominator `{0}` vanishes")]
    DivisionByZero(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("function `{0}` has no numeric definition")]
    UndefinedFunction(String),
}

/// The two index variables: `n` (discrete) and `t` (continuous).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexVar {
    N,
    T,
}

/// Tree node. Variant order fixes the canonical ordering of factors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(BigRational),
    Pi,
    /// `(-1)^n`
    AltSign,
    Index(IndexVar),
    Var(String),
    /// `name[n+offset]`
    Shift(String, i64),
    /// `name` differentiated `order >= 1` times with respect to `t`.
    Deriv(String, u32),
    Fn(String, Expr),
    Pow(Expr, i64),
    Product(Vec<Expr>),
    Sum(Vec<Expr>),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    /// Wraps a node without canonicalizing it.
    pub fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn rational(value: BigRational) -> Expr {
        Expr::from_node(Node::Const(value))
    }

    pub fn int(value: i64) -> Expr {
        Expr::rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn frac(num: i64, den: i64) -> Expr {
        Expr::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(name.to_string()))
    }

    pub fn shift(name: &str, offset: i64) -> Expr {
        Expr::from_node(Node::Shift(name.to_string(), offset))
    }

    /// Derivative atom; order 0 is the plain variable.
    pub fn deriv(name: &str, order: u32) -> Expr {
        if order == 0 {
            Expr::var(name)
        } else {
            Expr::from_node(Node::Deriv(name.to_string(), order))
        }
    }

    pub fn n() -> Expr {
        Expr::from_node(Node::Index(IndexVar::N))
    }

    pub fn t() -> Expr {
        Expr::from_node(Node::Index(IndexVar::T))
    }

    pub fn pi() -> Expr {
        Expr::from_node(Node::Pi)
    }

    pub fn alt_sign() -> Expr {
        Expr::from_node(Node::AltSign)
    }

    pub fn call(name: &str, arg: Expr) -> Expr {
        canonicalize(&Expr::from_node(Node::Fn(name.to_string(), arg)))
    }

    pub fn pow(&self, exp: i64) -> Expr {
        canonicalize(&Expr::from_node(Node::Pow(self.clone(), exp)))
    }

    pub fn recip(&self) -> Expr {
        self.pow(-1)
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        canonicalize(&Expr::from_node(Node::Sum(terms.into_iter().collect())))
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        canonicalize(&Expr::from_node(Node::Product(factors.into_iter().collect())))
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    /// Leaf atoms that can be bound or substituted.
    pub fn is_symbol(&self) -> bool {
        matches!(
            self.node(),
            Node::Var(_) | Node::Shift(..) | Node::Deriv(..) | Node::Index(_)
        )
    }

    /// Rebuilds the tree bottom-up, replacing any subtree for which `f`
    /// returns `Some`, then canonicalizes.
    pub fn map_leaves(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        canonicalize(&self.map_raw(f))
    }

    fn map_raw(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(replacement) = f(self) {
            return replacement;
        }
        match self.node() {
            Node::Fn(name, arg) => Expr::from_node(Node::Fn(name.clone(), arg.map_raw(f))),
            Node::Pow(base, k) => Expr::from_node(Node::Pow(base.map_raw(f), *k)),
            Node::Product(fs) => {
                Expr::from_node(Node::Product(fs.iter().map(|x| x.map_raw(f)).collect()))
            }
            Node::Sum(ts) => Expr::from_node(Node::Sum(ts.iter().map(|x| x.map_raw(f)).collect())),
            _ => self.clone(),
        }
    }

    /// Simultaneous substitution of variables by name.
    pub fn substitute(&self, bindings: &HashMap<String, Expr>) -> Expr {
        if bindings.is_empty() {
            return canonicalize(self);
        }
        self.map_leaves(&mut |e| match e.node() {
            Node::Var(name) => bindings.get(name).cloned(),
            _ => None,
        })
    }

    /// Simultaneous substitution keyed by atom (variables, sequence atoms,
    /// derivative atoms, or the index variable).
    pub fn substitute_atoms(&self, bindings: &HashMap<Expr, Expr>) -> Expr {
        if bindings.is_empty() {
            return canonicalize(self);
        }
        self.map_leaves(&mut |e| {
            if e.is_symbol() {
                bindings.get(e).cloned()
            } else {
                None
            }
        })
    }

    /// Index shift `n -> n + amount`. Sequence atoms have their offsets raised
    /// and `(-1)^n` picks up the factor `(-1)^amount`.
    pub fn shift_index(&self, amount: i64) -> Expr {
        if amount == 0 {
            return canonicalize(self);
        }
        self.map_leaves(&mut |e| match e.node() {
            Node::Index(IndexVar::N) => Some(Expr::from_node(Node::Sum(vec![
                Expr::n(),
                Expr::int(amount),
            ]))),
            Node::AltSign if amount % 2 != 0 => Some(Expr::from_node(Node::Product(vec![
                Expr::int(-1),
                Expr::alt_sign(),
            ]))),
            Node::Shift(name, off) => Some(Expr::shift(name, off + amount)),
            _ => None,
        })
    }

    /// Sets `n` to a concrete integer, resolving `(-1)^n` as well.
    pub fn at_index(&self, n: i64) -> Expr {
        self.map_leaves(&mut |e| match e.node() {
            Node::Index(IndexVar::N) => Some(Expr::int(n)),
            Node::AltSign => Some(Expr::int(if n.rem_euclid(2) == 0 { 1 } else { -1 })),
            _ => None,
        })
    }

    /// Whether `atom` occurs anywhere in the tree.
    pub fn contains(&self, atom: &Expr) -> bool {
        if self == atom {
            return true;
        }
        match self.node() {
            Node::Fn(_, arg) => arg.contains(atom),
            Node::Pow(base, _) => base.contains(atom),
            Node::Product(xs) | Node::Sum(xs) => xs.iter().any(|x| x.contains(atom)),
            _ => false,
        }
    }

    /// Number of leaf occurrences of `atom`.
    pub fn count(&self, atom: &Expr) -> usize {
        if self == atom {
            return 1;
        }
        match self.node() {
            Node::Fn(_, arg) => arg.count(atom),
            Node::Pow(base, _) => base.count(atom),
            Node::Product(xs) | Node::Sum(xs) => xs.iter().map(|x| x.count(atom)).sum(),
            _ => 0,
        }
    }

    /// All symbol atoms (see [`Expr::is_symbol`]) in the tree.
    pub fn symbols(&self) -> BTreeSet<Expr> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Expr>) {
        match self.node() {
            _ if self.is_symbol() => {
                out.insert(self.clone());
            }
            Node::Fn(_, arg) => arg.collect_symbols(out),
            Node::Pow(base, _) => base.collect_symbols(out),
            Node::Product(xs) | Node::Sum(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
            _ => {}
        }
    }

    /// Names of plain variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        self.symbols()
            .into_iter()
            .filter_map(|s| match s.node() {
                Node::Var(name) => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    /// Names of every symbol atom: variables, sequence atoms and derivative
    /// atoms all report their base name.
    pub fn referenced_names(&self) -> BTreeSet<String> {
        self.symbols()
            .into_iter()
            .filter_map(|s| match s.node() {
                Node::Var(name) | Node::Shift(name, _) | Node::Deriv(name, _) => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn mentions_index(&self) -> bool {
        self.contains(&Expr::n()) || self.contains(&Expr::t()) || self.contains(&Expr::alt_sign())
    }

    /// Function symbol names applied anywhere in the tree.
    pub fn functions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_functions(&mut out);
        out
    }

    fn collect_functions(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Fn(name, arg) => {
                out.insert(name.clone());
                arg.collect_functions(out);
            }
            Node::Pow(base, _) => base.collect_functions(out),
            Node::Product(xs) | Node::Sum(xs) => xs.iter().for_each(|x| x.collect_functions(out)),
            _ => {}
        }
    }

    /// Bases of every negative power in the (canonical) tree, including those
    /// nested in function arguments. Rational constants never appear here
    /// since numeric denominators are folded into coefficients.
    pub fn denominators(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        self.collect_denominators(&mut out);
        out
    }

    fn collect_denominators(&self, out: &mut Vec<Expr>) {
        match self.node() {
            Node::Pow(base, k) => {
                if *k < 0 && !out.contains(base) {
                    out.push(base.clone());
                }
                base.collect_denominators(out);
            }
            Node::Fn(_, arg) => arg.collect_denominators(out),
            Node::Product(xs) | Node::Sum(xs) => {
                xs.iter().for_each(|x| x.collect_denominators(out))
            }
            _ => {}
        }
    }
}

/// Shorthand for the exact rational `p/q`.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// A nonvanishing requirement accumulated while isolating variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SideCondition {
    pub expr: Expr,
}

impl SideCondition {
    pub fn nonzero(expr: Expr) -> SideCondition {
        SideCondition {
            expr: canonicalize(&expr),
        }
    }
}

impl fmt::Display for SideCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} != 0", self.expr)
    }
}

/// Nonvanishing conditions for every denominator of `e`, skipping
/// applications of symbols declared nonvanishing.
pub fn denominator_conditions(e: &Expr, fns: &FnRegistry) -> BTreeSet<SideCondition> {
    e.denominators()
        .into_iter()
        .filter(|d| match d.node() {
            Node::Fn(name, _) => !fns.get(name).is_some_and(|s| s.nonvanishing),
            _ => true,
        })
        .map(SideCondition::nonzero)
        .collect()
}

macro_rules! binop {
    ($trait:ident, $method:ident, $build:expr) => {
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let build: fn(&Expr, &Expr) -> Expr = $build;
                build(self, rhs)
            }
        }
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                (&self).$method(rhs)
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::sum([
    a.clone(),
    Expr::from_node(Node::Product(vec![Expr::int(-1), b.clone()]))
]));
binop!(Mul, mul, |a, b| Expr::product([a.clone(), b.clone()]));
binop!(Div, div, |a, b| Expr::product([
    a.clone(),
    Expr::from_node(Node::Pow(b.clone(), -1))
]));

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::int(-1), self.clone()])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(value: i64) -> Expr {
        Expr::int(value)
    }
}

// ---------------------------------------------------------------------------
// Printing. Output re-parses to the same canonical expression.

fn is_negative_term(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => c.is_negative(),
        Node::Product(fs) => fs
            .first()
            .and_then(|f| f.as_const())
            .is_some_and(|c| c.is_negative()),
        _ => false,
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: &BigRational) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

/// Writes `e` as a factor: sums, negative or fractional constants and
/// products are parenthesized.
fn write_factor(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    let needs_parens = match e.node() {
        Node::Sum(_) | Node::Product(_) => true,
        Node::Const(c) => c.is_negative() || !c.is_integer(),
        Node::Pow(_, k) => *k < 0,
        _ => false,
    };
    if needs_parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_power(f: &mut fmt::Formatter<'_>, base: &Expr, k: i64) -> fmt::Result {
    write_factor(f, base)?;
    if k != 1 {
        write!(f, "^{k}")?;
    }
    Ok(())
}

fn write_product(f: &mut fmt::Formatter<'_>, factors: &[Expr]) -> fmt::Result {
    let mut coeff = BigRational::one();
    let mut numer: Vec<(&Expr, i64)> = Vec::new();
    let mut denom: Vec<(&Expr, i64)> = Vec::new();
    for x in factors {
        match x.node() {
            Node::Const(c) => coeff *= c,
            Node::Pow(base, k) if *k < 0 => denom.push((base, -k)),
            Node::Pow(base, k) => numer.push((base, *k)),
            _ => numer.push((x, 1)),
        }
    }
    if coeff.is_negative() {
        write!(f, "-")?;
        coeff = -coeff;
    }
    let c_num = coeff.numer().clone();
    let c_den = coeff.denom().clone();
    let mut wrote = false;
    if !c_num.is_one() || numer.is_empty() {
        write!(f, "{c_num}")?;
        wrote = true;
    }
    for (base, k) in &numer {
        if wrote {
            write!(f, "*")?;
        }
        write_power(f, base, *k)?;
        wrote = true;
    }
    let den_items = denom.len() + usize::from(!c_den.is_one());
    if den_items == 0 {
        return Ok(());
    }
    write!(f, "/")?;
    if den_items > 1 {
        write!(f, "(")?;
    }
    let mut first = true;
    if !c_den.is_one() {
        write!(f, "{c_den}")?;
        first = false;
    }
    for (base, k) in &denom {
        if !first {
            write!(f, "*")?;
        }
        write_power(f, base, *k)?;
        first = false;
    }
    if den_items > 1 {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_const(f, c),
            Node::Pi => write!(f, "pi"),
            Node::AltSign => write!(f, "sgn_n"),
            Node::Index(IndexVar::N) => write!(f, "n"),
            Node::Index(IndexVar::T) => write!(f, "t"),
            Node::Var(name) => write!(f, "{name}"),
            Node::Shift(name, 0) => write!(f, "{name}[n]"),
            Node::Shift(name, k) if *k > 0 => write!(f, "{name}[n+{k}]"),
            Node::Shift(name, k) => write!(f, "{name}[n-{}]", -k),
            Node::Deriv(name, k) => write!(f, "{name}{}", "'".repeat(*k as usize)),
            Node::Fn(name, arg) => write!(f, "{name}({arg})"),
            Node::Pow(base, k) if *k < 0 => write_product(f, std::slice::from_ref(self)),
            Node::Pow(base, k) => write_power(f, base, *k),
            Node::Product(fs) => write_product(f, fs),
            Node::Sum(ts) => {
                for (i, term) in ts.iter().enumerate() {
                    if i == 0 {
                        write!(f, "{term}")?;
                    } else if is_negative_term(term) {
                        write!(f, " - {}", -term)?;
                    } else {
                        match term.node() {
                            Node::Sum(_) => write!(f, " + ({term})")?,
                            _ => write!(f, " + {term}")?,
                        }
                    }
                }
                Ok(())
            }
        }
    }
}
