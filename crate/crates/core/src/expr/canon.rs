//! Canonical form.
//!
//! An expression is brought to a sum of Laurent monomials with rational
//! coefficients. Atoms are leaves (variables, sequence and derivative atoms,
//! the index, `pi`, `(-1)^n`), function applications with canonical
//! arguments, and *denominator atoms*: multi-term sums that only ever appear
//! with negative exponent. A denominator atom is normalized so that it has no
//! monomial factor and its leading term (graded lexicographic order) has
//! coefficient one; content is pushed into the coefficient.
//!
//! All terms are brought over one common denominator, and a denominator atom
//! is cancelled whenever it divides the expanded numerator exactly, so
//! `(x^2 - 1)/(x - 1)` becomes `x + 1`. The numerator is then spread back into
//! monomials over the reduced denominator. Without factoring denominator atoms
//! this is unique only up to the choice of atoms, which is enough for sums,
//! products and derivatives of the same rational pieces. The result is
//! emitted as a `Sum` of `Product`s with deterministic ordering, which makes
//! structural equality the identity test.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Expr, Node};

pub(crate) type Mono = BTreeMap<Expr, i64>;

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Poly {
    pub terms: BTreeMap<Mono, BigRational>,
}

const DIVISION_STEPS: usize = 5000;

fn is_den_atom(a: &Expr) -> bool {
    matches!(a.node(), Node::Sum(_) | Node::Const(_))
}

fn rational_pow(c: &BigRational, k: i64) -> BigRational {
    let base = if k < 0 { c.recip() } else { c.clone() };
    let mut acc = BigRational::one();
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = a.clone();
    for (atom, e) in b {
        *out.entry(atom.clone()).or_insert(0) += e;
    }
    tidy(out)
}

fn mono_div(a: &Mono, b: &Mono) -> Mono {
    let mut out = a.clone();
    for (atom, e) in b {
        *out.entry(atom.clone()).or_insert(0) -= e;
    }
    tidy(out)
}

fn tidy(mut m: Mono) -> Mono {
    if let Some(e) = m.get_mut(&Expr::alt_sign()) {
        *e = e.rem_euclid(2);
    }
    m.retain(|_, e| *e != 0);
    m
}

fn degree(m: &Mono) -> i64 {
    m.values().sum()
}

/// Graded lexicographic order over monomials.
pub(crate) fn grlex(a: &Mono, b: &Mono) -> Ordering {
    degree(a).cmp(&degree(b)).then_with(|| {
        let mut keys: Vec<&Expr> = a.keys().chain(b.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let ea = a.get(k).copied().unwrap_or(0);
            let eb = b.get(k).copied().unwrap_or(0);
            if ea != eb {
                return ea.cmp(&eb);
            }
        }
        Ordering::Equal
    })
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Mono::new(), c);
        p
    }

    pub fn mono(m: Mono, c: BigRational) -> Poly {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn atom(a: Expr) -> Poly {
        Poly::mono(Mono::from([(a, 1)]), BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn mul_mono(&self, m: &Mono, c: &BigRational) -> Poly {
        let mut out = Poly::zero();
        for (mm, v) in &self.terms {
            out.add_term(mono_mul(mm, m), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u64) -> Poly {
        let mut acc = Poly::constant(BigRational::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn leading(&self) -> Option<(&Mono, &BigRational)> {
        self.terms.iter().max_by(|a, b| grlex(a.0, b.0))
    }
}

/// Expands positive powers of denominator atoms (which can appear after
/// inverting a monomial) back into polynomials.
fn expand_mono(m: &Mono, c: &BigRational) -> Poly {
    let mut plain = Mono::new();
    let mut acc = Poly::constant(c.clone());
    for (atom, e) in m {
        if *e > 0 && is_den_atom(atom) {
            acc = acc.mul(&to_poly(atom).pow(*e as u64));
        } else {
            plain.insert(atom.clone(), *e);
        }
    }
    acc.mul_mono(&plain, &BigRational::one())
}

fn inv_mono(m: &Mono, k: i64) -> Poly {
    let inverted: Mono = m.iter().map(|(a, e)| (a.clone(), -e * k)).collect();
    expand_mono(&tidy(inverted), &BigRational::one())
}

/// `p^(-k)` for `k > 0`.
fn inv_pow(p: &Poly, k: i64) -> Poly {
    let p = reduce(p.clone());
    if p.is_zero() {
        return Poly::mono(Mono::from([(Expr::zero(), -k)]), BigRational::one());
    }
    if p.terms.len() == 1 {
        let (m, c) = p.terms.iter().next().unwrap();
        return inv_mono(m, k).scale(&rational_pow(c, -k));
    }
    // Pull out the common monomial factor until none remains.
    let mut factored = Mono::new();
    let mut core = p;
    loop {
        let mut atoms: Vec<Expr> = core.terms.keys().flat_map(|m| m.keys().cloned()).collect();
        atoms.sort();
        atoms.dedup();
        let g: Mono = tidy(
            atoms
                .into_iter()
                .map(|a| {
                    let e = core
                        .terms
                        .keys()
                        .map(|m| m.get(&a).copied().unwrap_or(0))
                        .min()
                        .unwrap_or(0);
                    (a, e)
                })
                .collect(),
        );
        if g.is_empty() {
            break;
        }
        let mut next = Poly::zero();
        for (m, c) in &core.terms {
            next = next.add(&expand_mono(&mono_div(m, &g), c));
        }
        factored = mono_mul(&factored, &g);
        core = next;
        if core.terms.len() <= 1 {
            break;
        }
    }
    if core.terms.len() == 1 {
        let (m, c) = core.terms.iter().next().unwrap();
        let whole = mono_mul(&factored, m);
        return inv_mono(&whole, k).scale(&rational_pow(c, -k));
    }
    if core.is_zero() {
        return Poly::mono(Mono::from([(Expr::zero(), -k)]), BigRational::one());
    }
    let lc = core.leading().map(|(_, c)| c.clone()).unwrap();
    let core = core.scale(&lc.recip());
    let atom = from_poly(&core);
    inv_mono(&factored, k)
        .scale(&rational_pow(&lc, -k))
        .mul_mono(&Mono::from([(atom, -k)]), &BigRational::one())
}

/// Multivariate division of `num` by `den` (single divisor, grlex order).
/// Returns `(quotient, remainder)`.
fn divide(num: &Poly, den: &Poly) -> (Poly, Poly) {
    let Some((lt, lc)) = den.leading().map(|(m, c)| (m.clone(), c.clone())) else {
        return (Poly::zero(), num.clone());
    };
    let mut p = num.clone();
    let mut q = Poly::zero();
    let mut r = Poly::zero();
    for _ in 0..DIVISION_STEPS {
        let Some((m, c)) = p.leading().map(|(m, c)| (m.clone(), c.clone())) else {
            return (q, r);
        };
        let divisible = lt
            .iter()
            .all(|(a, e)| m.get(a).copied().unwrap_or(0) >= *e);
        if divisible {
            let qm = mono_div(&m, &lt);
            let qc = &c / &lc;
            q.add_term(qm.clone(), qc.clone());
            p = p.add(&den.mul_mono(&qm, &-qc));
        } else {
            r.add_term(m.clone(), c.clone());
            p.add_term(m, -c);
        }
    }
    (Poly::zero(), num.clone())
}

fn is_zero_atom(a: &Expr) -> bool {
    matches!(a.node(), Node::Const(_))
}

/// Brings `p` over one common denominator, cancels every denominator atom
/// that divides the numerator exactly, and spreads the numerator back into
/// monomials over that denominator. Terms dividing by a literal zero collapse
/// into a single `1/0`.
fn reduce(p: Poly) -> Poly {
    let (undefined, p): (Vec<_>, Vec<_>) = p
        .terms
        .into_iter()
        .partition(|(m, _)| m.keys().any(is_zero_atom));
    if p.is_empty() {
        return marker(!undefined.is_empty());
    }
    // Exponent of each atom in the common denominator.
    let mut den: BTreeMap<Expr, i64> = BTreeMap::new();
    for (m, _) in &p {
        for (a, e) in m {
            if *e < 0 {
                let d = den.entry(a.clone()).or_insert(0);
                *d = (*d).max(-e);
            }
        }
    }
    let mut num = Poly::zero();
    let mut expanded: BTreeMap<(Expr, i64), Poly> = BTreeMap::new();
    for (m, c) in &p {
        let mut acc = Poly::constant(c.clone());
        let mut plain = Mono::new();
        for (a, d) in &den {
            let e = m.get(a).copied().unwrap_or(0) + d;
            if is_den_atom(a) {
                if e > 0 {
                    let f = expanded
                        .entry((a.clone(), e))
                        .or_insert_with(|| to_poly(a).pow(e as u64));
                    acc = acc.mul(f);
                }
            } else {
                plain.insert(a.clone(), e);
            }
        }
        for (a, e) in m {
            if !den.contains_key(a) {
                plain.insert(a.clone(), *e);
            }
        }
        num = num.add(&acc.mul_mono(&tidy(plain), &BigRational::one()));
    }
    for (a, d) in den.iter_mut() {
        if num.is_zero() {
            break;
        }
        if is_den_atom(a) {
            let s = to_poly(a);
            while *d > 0 {
                let (q, r) = divide(&num, &s);
                if !r.is_zero() || q.is_zero() {
                    break;
                }
                num = q;
                *d -= 1;
            }
        } else {
            let low = num.terms.keys().map(|m| m.get(a).copied().unwrap_or(0)).min().unwrap_or(0);
            let cut = low.min(*d);
            if cut > 0 {
                let shift = Mono::from([(a.clone(), -cut)]);
                num = num.mul_mono(&shift, &BigRational::one());
                *d -= cut;
            }
        }
    }
    let inverse: Mono = tidy(den.into_iter().map(|(a, d)| (a, -d)).collect());
    let mut out = num.mul_mono(&inverse, &BigRational::one());
    if !undefined.is_empty() {
        out = out.add(&marker(true));
    }
    out
}

fn marker(present: bool) -> Poly {
    if present {
        Poly::mono(Mono::from([(Expr::zero(), -1)]), BigRational::one())
    } else {
        Poly::zero()
    }
}

fn fold_builtin_at_zero(name: &str, arg: &Expr) -> Option<Poly> {
    if !arg.is_zero() {
        return None;
    }
    match name {
        "sin" => Some(Poly::zero()),
        "cos" | "exp" => Some(Poly::constant(BigRational::one())),
        _ => None,
    }
}

pub(crate) fn to_poly(e: &Expr) -> Poly {
    match e.node() {
        Node::Const(c) => Poly::constant(c.clone()),
        Node::Pi
        | Node::AltSign
        | Node::Index(_)
        | Node::Var(_)
        | Node::Shift(..)
        | Node::Deriv(..) => Poly::atom(e.clone()),
        Node::Fn(name, arg) => {
            let arg = canonicalize(arg);
            fold_builtin_at_zero(name, &arg)
                .unwrap_or_else(|| Poly::atom(Expr::from_node(Node::Fn(name.clone(), arg))))
        }
        Node::Sum(ts) => ts.iter().fold(Poly::zero(), |acc, t| acc.add(&to_poly(t))),
        Node::Product(fs) => {
            let mut acc = Poly::constant(BigRational::one());
            for f in fs {
                acc = acc.mul(&to_poly(f));
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        Node::Pow(base, k) => match k.cmp(&0) {
            Ordering::Equal => Poly::constant(BigRational::one()),
            Ordering::Greater => to_poly(base).pow(*k as u64),
            Ordering::Less => match base.node() {
                // Inverting factor by factor keeps printed denominator atoms intact.
                Node::Product(fs) => fs.iter().fold(Poly::constant(BigRational::one()), |acc, f| {
                    acc.mul(&to_poly(&Expr::from_node(Node::Pow(f.clone(), *k))))
                }),
                Node::Pow(inner, j) => to_poly(&Expr::from_node(Node::Pow(inner.clone(), j * k))),
                _ => inv_pow(&to_poly(base), -k),
            },
        },
    }
}

fn term_expr(m: &Mono, c: &BigRational) -> Expr {
    let mut factors = Vec::new();
    if !c.is_one() {
        factors.push(Expr::rational(c.clone()));
    }
    for (atom, e) in m {
        if *e == 1 {
            factors.push(atom.clone());
        } else {
            factors.push(Expr::from_node(Node::Pow(atom.clone(), *e)));
        }
    }
    match factors.len() {
        0 => Expr::one(),
        1 => factors.pop().unwrap(),
        _ => Expr::from_node(Node::Product(factors)),
    }
}

pub(crate) fn from_poly(p: &Poly) -> Expr {
    let mut terms: Vec<(&Mono, &BigRational)> = p.terms.iter().collect();
    terms.sort_by(|a, b| grlex(b.0, a.0).then_with(|| a.0.cmp(b.0)));
    let mut exprs: Vec<Expr> = terms.into_iter().map(|(m, c)| term_expr(m, c)).collect();
    match exprs.len() {
        0 => Expr::zero(),
        1 => exprs.pop().unwrap(),
        _ => Expr::from_node(Node::Sum(exprs)),
    }
}

/// Canonical form of `e`. Idempotent.
pub fn canonicalize(e: &Expr) -> Expr {
    from_poly(&reduce(to_poly(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn c(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn expands_and_collects() {
        assert_eq!(c("(x+1)^2"), c("x^2 + 2*x + 1"));
        assert_eq!(c("x - x"), Expr::zero());
        assert_eq!(c("2*x/(4*y)"), c("x/(2*y)"));
    }

    #[test]
    fn cancels_divisible_numerators() {
        assert_eq!(c("(x^2 - 1)/(x - 1)"), c("x + 1"));
        assert_eq!(c("(a*x + a*y)/(x + y)"), c("a"));
        assert_eq!(c("(d - a^2*c)/(a^2*c - d)"), Expr::int(-1));
    }

    #[test]
    fn normalizes_denominator_sums() {
        assert_eq!(c("1/(2*x + 2)"), c("(1/2)/(x + 1)"));
        assert_eq!(c("1/(x^2 + x)"), c("x^-1/(x + 1)"));
        assert_eq!(c("1/(-x - 1)"), c("-1/(1 + x)"));
    }

    #[test]
    fn alternating_sign_squares_to_one() {
        assert_eq!(c("sgn_n*sgn_n"), Expr::one());
        assert_eq!(c("1/sgn_n"), c("sgn_n"));
    }

    #[test]
    fn idempotent_on_nested_fractions() {
        let e = c("1/(1/(x+1) + y)");
        assert_eq!(canonicalize(&e), e);
        assert_eq!(e, c("(x + 1)/(x*y + y + 1)"));
    }

    #[test]
    fn zero_denominator_is_kept() {
        let e = c("1/(x - x)");
        assert!(e.denominators().iter().any(|d| d.is_zero()));
    }

    #[test]
    fn builtins_fold_at_zero() {
        assert_eq!(c("sin(0) + cos(x - x) + exp(0)"), Expr::int(2));
    }
}
