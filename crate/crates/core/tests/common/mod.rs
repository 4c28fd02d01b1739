//! Random expression trees and oracle checks shared by the property suite
//! and the acceptance run.
#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use sysfold::expr::{canonicalize, partial, solve_for, Env, Expr, FnRegistry, Num};

/// Raw syntax tree, evaluated independently of the canonicalizer.
#[derive(Debug, Clone)]
pub enum T {
    Var(usize),
    Const(i64, i64),
    Add(Box<T>, Box<T>),
    Sub(Box<T>, Box<T>),
    Mul(Box<T>, Box<T>),
    Div(Box<T>, Box<T>),
    Pow(Box<T>, i64),
}

pub const NAMES: [&str; 3] = ["x", "y", "z"];

pub fn tree() -> impl Strategy<Value = T> {
    let leaf = prop_oneof![
        (0..3usize).prop_map(T::Var),
        (-5i64..=5, 1i64..=4).prop_map(|(p, q)| T::Const(p, q)),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| T::Add(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| T::Sub(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| T::Mul(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| T::Div(a.into(), b.into())),
            (inner, -2i64..=3).prop_map(|(a, k)| T::Pow(a.into(), k)),
        ]
    })
}

pub fn to_expr(t: &T) -> Expr {
    match t {
        T::Var(i) => Expr::var(NAMES[*i]),
        T::Const(p, q) => Expr::frac(*p, *q),
        T::Add(a, b) => to_expr(a) + to_expr(b),
        T::Sub(a, b) => to_expr(a) - to_expr(b),
        T::Mul(a, b) => to_expr(a) * to_expr(b),
        T::Div(a, b) => to_expr(a) / to_expr(b),
        T::Pow(a, k) => to_expr(a).pow(*k),
    }
}

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// `None` when a division by zero occurs anywhere in the tree.
pub fn oracle(t: &T, at: &[BigRational; 3]) -> Option<BigRational> {
    Some(match t {
        T::Var(i) => at[*i].clone(),
        T::Const(p, q) => rat(*p, *q),
        T::Add(a, b) => oracle(a, at)? + oracle(b, at)?,
        T::Sub(a, b) => oracle(a, at)? - oracle(b, at)?,
        T::Mul(a, b) => oracle(a, at)? * oracle(b, at)?,
        T::Div(a, b) => {
            let d = oracle(b, at)?;
            if d.is_zero() {
                return None;
            }
            oracle(a, at)? / d
        }
        T::Pow(a, k) => {
            let base = oracle(a, at)?;
            if *k < 0 && base.is_zero() {
                return None;
            }
            let mut acc = BigRational::one();
            for _ in 0..k.unsigned_abs() {
                acc *= &base;
            }
            if *k < 0 {
                acc.recip()
            } else {
                acc
            }
        }
    })
}

pub fn eval_at(e: &Expr, at: &[BigRational; 3]) -> Option<Num> {
    let fns = FnRegistry::new();
    let mut env = Env::new(&fns);
    for (name, v) in NAMES.iter().zip(at) {
        env.bind_var(name, Num::Exact(v.clone()));
    }
    e.eval(&env).ok()
}

pub fn eval_f64(e: &Expr, at: &[f64]) -> Option<f64> {
    let fns = FnRegistry::new();
    let mut env = Env::new(&fns);
    for (name, v) in NAMES.iter().zip(at) {
        env.bind_var(name, Num::Float(*v));
    }
    e.eval(&env).ok().map(|v| v.to_f64())
}

pub fn point() -> impl Strategy<Value = [BigRational; 3]> {
    [(-9i64..=9, 1i64..=7), (-9i64..=9, 1i64..=7), (-9i64..=9, 1i64..=7)]
        .prop_map(|ps| ps.map(|(p, q)| rat(p, q)))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

/// Canonical forms are fixed points and keep the value of the raw tree.
pub fn canonical_form_checks(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(tree(), point()), |(t, at)| {
            let e = to_expr(&t);
            prop_assert_eq!(canonicalize(&e), e.clone());
            if let Some(expected) = oracle(&t, &at) {
                prop_assert_eq!(eval_at(&e, &at), Some(Num::Exact(expected)));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Maps `x, y, z` onto `u` and constants so the coefficient is free of `v`.
fn rename(t: &T) -> T {
    match t {
        T::Var(0) => T::Var(0),
        T::Var(_) => T::Const(3, 2),
        T::Const(p, q) => T::Const(*p, *q),
        T::Add(a, b) => T::Add(rename(a).into(), rename(b).into()),
        T::Sub(a, b) => T::Sub(rename(a).into(), rename(b).into()),
        T::Mul(a, b) => T::Mul(rename(a).into(), rename(b).into()),
        T::Div(a, b) => T::Div(rename(a).into(), rename(b).into()),
        T::Pow(a, k) => T::Pow(rename(a).into(), *k),
    }
}

/// Linear-fractional shapes in `v` with coefficients drawn from trees in `u`.
fn isolable() -> impl Strategy<Value = (T, T, u8)> {
    (tree().prop_map(|t| rename(&t)), tree().prop_map(|t| rename(&t)), 0u8..3)
}

/// `w = f(u, v)` solved for `v` gives back `v` at random exact points.
pub fn solve_round_trip(cases: u32, points: usize) -> Result<(), String> {
    let fns = FnRegistry::new();
    let draws = proptest::collection::vec((-9i64..=9, 1i64..=7, -9i64..=9, 1i64..=7), points);
    runner(cases)
        .run(&(isolable(), draws), |((a, b, shape), points)| {
            let u = |t: &T| to_expr(t).substitute(&HashMap::from([("x".to_string(), Expr::var("u"))]));
            let (ca, cb) = (u(&a), u(&b));
            let v = Expr::var("v");
            let f = match shape {
                0 => &ca * &v + &cb,
                1 => &ca / &v + &cb,
                _ => (&v + &ca) / (&v + &cb),
            };
            let Ok((h, _)) = solve_for(&Expr::var("w"), &f, &v, &fns) else {
                // Degenerate draws (coefficient identically zero) are not isolable.
                return Ok(());
            };
            for (p, q, r, s) in points {
                let (uu, vv) = (rat(p, q), rat(r, s));
                let mut env = Env::new(&fns);
                env.bind_var("u", Num::Exact(uu.clone()));
                env.bind_var("v", Num::Exact(vv.clone()));
                let Ok(w) = f.eval(&env) else { continue };
                let mut env = Env::new(&fns);
                env.bind_var("u", Num::Exact(uu));
                env.bind_var("w", w);
                if let Ok(back) = h.eval(&env) {
                    prop_assert_eq!(back, Num::Exact(vv), "f = {}, h = {}", f, h);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn third_derivative(e: &Expr, at: &[f64; 3]) -> Option<f64> {
    let fns = FnRegistry::new();
    let x = Expr::var("x");
    let d = |e: &Expr| partial(e, &x, &fns).unwrap();
    eval_f64(&d(&d(&d(e))), at)
}

/// Symbolic `d/dx` agrees with a central difference to `1e-6` relative at
/// non-singular points.
pub fn derivative_vs_difference(cases: u32) -> Result<(), String> {
    let fns = FnRegistry::new();
    let step = 1e-5;
    runner(cases)
        .run(&(tree(), proptest::array::uniform3(-2.0f64..2.0)), |(t, at)| {
            let e = to_expr(&t);
            let d = partial(&e, &Expr::var("x"), &fns).unwrap();
            let plus = [at[0] + step, at[1], at[2]];
            let minus = [at[0] - step, at[1], at[2]];
            let (Some(fp), Some(fm), Some(exact), Some(mid)) =
                (eval_f64(&e, &plus), eval_f64(&e, &minus), eval_f64(&d, &at), eval_f64(&e, &at))
            else {
                return Ok(());
            };
            // Near poles the difference quotient's h^2 error term dominates;
            // such points are not "non-singular".
            if mid.abs() > 1e3 || exact.abs() > 1e3 || third_derivative(&e, &at).is_none_or(|v| v.abs() > 1e3) {
                return Ok(());
            }
            let fd = (fp - fm) / (2.0 * step);
            prop_assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                "d/dx {} at {:?}: {} vs {}", e, at, fd, exact
            );
            Ok(())
        })
        .map_err(|e| e.to_string())
}
