mod common;

use proptest::prelude::*;

use common::{canonical_form_checks, derivative_vs_difference, eval_at, oracle, point, solve_round_trip, to_expr, tree};
use sysfold::expr::{canonicalize, parse_expr, partial, Expr, FnRegistry, Num};

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn canonical_form_is_idempotent(t in tree()) {
        let e = to_expr(&t);
        prop_assert_eq!(canonicalize(&e), e.clone());
        prop_assert_eq!(canonicalize(&canonicalize(&e)), canonicalize(&e));
    }

    #[test]
    fn printed_form_parses_back(t in tree()) {
        let e = to_expr(&t);
        prop_assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn canonicalization_preserves_value(t in tree(), at in point()) {
        // Canonical forms may cancel a vanishing factor, so only points
        // where the raw tree is defined are compared.
        if let Some(expected) = oracle(&t, &at) {
            let got = eval_at(&to_expr(&t), &at);
            prop_assert_eq!(got, Some(Num::Exact(expected)));
        }
    }

    #[test]
    fn product_rule_holds(a in tree(), b in tree()) {
        let fns = FnRegistry::new();
        let x = Expr::var("x");
        let (f, g) = (to_expr(&a), to_expr(&b));
        // A literal division by zero is undefined everywhere and has no derivative.
        let undefined = |e: &Expr| e.denominators().iter().any(|d| d.is_zero());
        prop_assume!(!undefined(&f) && !undefined(&g));
        let lhs = partial(&(&f * &g), &x, &fns).unwrap();
        let rhs = partial(&f, &x, &fns).unwrap() * &g + &f * partial(&g, &x, &fns).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn differentiation_is_linear(a in tree(), b in tree(), p in -4i64..=4, q in 1i64..=3) {
        let fns = FnRegistry::new();
        let x = Expr::var("x");
        let (f, g, c) = (to_expr(&a), to_expr(&b), Expr::frac(p, q));
        let lhs = partial(&(&c * &f + &g), &x, &fns).unwrap();
        let rhs = &c * partial(&f, &x, &fns).unwrap() + partial(&g, &x, &fns).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn canonical_forms_hold_on_a_second_stream() {
    canonical_form_checks(256).unwrap();
}

#[test]
fn solve_round_trip_on_random_bindings() {
    solve_round_trip(64, 200).unwrap();
}

#[test]
fn derivative_matches_central_difference() {
    derivative_vs_difference(200).unwrap();
}
