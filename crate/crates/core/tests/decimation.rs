use num_rational::BigRational;

use sysfold::expr::{parse_expr_with, rat, Expr, Num};
use sysfold::foldcore::{fold, fold_no_inversion, matches_ske_shape};
use sysfold::sysmodel::{iterate_equation, parse_spec, HigherOrderEq, System};
use sysfold::verify::{decimation_check, verify_folding, Status, VerifyConfig};

const SP3: &str = "\
kind: difference
vars: x y z
param a
param b
param c
param al
param be
fn f
fn g
eq x = f(a*y + b*z)
eq y = c*x + g(z)
eq z = al*x + be
";

fn ex(sys: &System, text: &str) -> Expr {
    parse_expr_with(text, &sys.fns).unwrap()
}

fn q(p: i64, d: i64) -> Num {
    Num::Exact(rat(p, d))
}

#[test]
fn sp3_folds_without_inversion() {
    let sys = parse_spec(SP3).unwrap();
    assert!(matches_ske_shape(&sys));
    let f = fold_no_inversion(&sys).unwrap();
    assert_eq!(f.kappa, 3);
    assert_eq!(
        f.equation.rhs,
        ex(&sys, "f((a*c + b*al)*s[n+1] + a*g(al*s[n] + be) + b*be)")
    );
    assert!(f.side_conditions.is_empty());
    assert!(f.decimation.is_none());
}

fn sp3_cancelling() -> System {
    let text = SP3.replace("fn f\nfn g\n", "fn f def=u/2 + 1/3\nfn g def=u^2 - u\n");
    parse_spec(&text)
        .unwrap()
        .with_params(&[("a", rat(2, 1)), ("b", rat(-1, 1)), ("c", rat(1, 3)), ("al", rat(2, 3)), ("be", rat(1, 2))])
}

#[test]
fn cancelling_sp3_decimates_with_stride_three() {
    let sys = sp3_cancelling();
    let f = fold_no_inversion(&sys).unwrap();
    assert_eq!(f.equation.rhs, ex(&sys, "f(2*g(2*s[n]/3 + 1/2) - 1/2)"));
    let dec = f.decimation.as_ref().expect("stride-3 decimation");
    assert_eq!(dec.stride, 3);
    assert_eq!(dec.map.order, 1);

    for init in [[q(1, 2), q(-1, 3), q(2, 1)], [q(0, 1), q(1, 1), q(-3, 4)]] {
        assert!(decimation_check(&f.equation, &dec.map, &init, 30, &f.fns).unwrap());
    }
    // A map differing from F must be rejected.
    let wrong = HigherOrderEq::difference(1, &dec.map.seq, dec.map.rhs.clone() + Expr::one());
    assert!(!decimation_check(&f.equation, &wrong, &[q(1, 2), q(1, 3), q(1, 5)], 9, &f.fns).unwrap());

    let report = verify_folding(&sys, &f, &VerifyConfig { trials: 20, steps: 30, ..Default::default() }).unwrap();
    assert_eq!(report.status, Status::Pass, "{}", report.to_text());
}

fn bs1(a: BigRational, b: BigRational) -> System {
    parse_spec("kind: difference\nvars: x y\nparam a\nparam b\neq x = x*y\neq y = (a + b*x)/y\n")
        .unwrap()
        .with_params(&[("a", a), ("b", b)])
}

#[test]
fn bs1_even_and_odd_terms_follow_one_quadratic_map() {
    let sys = bs1(rat(3, 2), rat(-1, 2));
    let (f, _) = fold(&sys, "x").unwrap();
    let dec = f.decimation.as_ref().expect("stride-2 decimation");
    assert_eq!(dec.stride, 2);
    let r0 = Expr::shift(&dec.map.seq, 0);
    let expected = r0.clone() * (Expr::frac(3, 2) - Expr::frac(1, 2) * r0);
    assert_eq!(dec.map.rhs, expected);
    for init in [[q(1, 3), q(2, 5)], [q(-1, 2), q(7, 3)]] {
        assert!(decimation_check(&f.equation, &dec.map, &init, 30, &f.fns).unwrap());
    }
}

#[test]
fn quadratic_map_is_conjugate_to_the_logistic_map() {
    for (a, b) in [(rat(3, 2), rat(-1, 2)), (rat(-2, 1), rat(5, 3)), (rat(7, 2), rat(1, 1))] {
        let sys = bs1(a.clone(), b.clone());
        let (f, _) = fold(&sys, "x").unwrap();
        let map = f.decimation.unwrap().map;
        let s0 = Expr::shift("s", 0);
        let logistic = HigherOrderEq::difference(1, "s", Expr::rational(a.clone()) * &s0 * (Expr::one() - &s0));
        let scale = Num::Exact(-(&b / &a));
        for r0 in [rat(1, 3), rat(-2, 7)] {
            let rs = iterate_equation(&map, &[Num::Exact(r0.clone())], 10, &f.fns);
            let ss = iterate_equation(&logistic, &[&scale * &Num::Exact(r0)], 10, &f.fns);
            assert_eq!(rs.values.len(), 11);
            for (r, s) in rs.values.iter().zip(&ss.values) {
                assert_eq!(&scale * r, *s);
            }
        }
    }
}
