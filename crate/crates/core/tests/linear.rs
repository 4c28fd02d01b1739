use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sysfold::expr::{Expr, Num};
use sysfold::foldcore::fold;
use sysfold::linfold::{
    eigensequence, fold_linear_2d, iterate_factor_pair, LinearCase, LinearSystem2, PeriodicLinearEq,
};
use sysfold::sysmodel::{Recovery, System};
use sysfold::verify::{verify_folding, Status, VerifyConfig};

fn random_rational(rng: &mut ChaCha8Rng, nonzero: bool) -> BigRational {
    loop {
        let p = rng.gen_range(-9i64..=9);
        let q = rng.gen_range(1i64..=6);
        if !(nonzero && p == 0) {
            return BigRational::new(BigInt::from(p), BigInt::from(q));
        }
    }
}

fn c(v: &BigRational) -> Expr {
    Expr::rational(v.clone())
}

/// `s[n+2] = (a+d) s[n+1] + (bc-ad) s[n] + b*beta + (1-d)*alpha`, derived by
/// eliminating `y` by hand.
fn trace_det_oracle(v: &[BigRational; 6]) -> Expr {
    let [a, b, cc, d, alpha, beta] = v;
    let (s0, s1) = (Expr::shift("s", 0), Expr::shift("s", 1));
    (c(a) + c(d)) * s1 + (c(b) * c(cc) - c(a) * c(d)) * s0 + c(b) * c(beta)
        + (Expr::one() - c(d)) * c(alpha)
}

#[test]
fn closed_form_matches_generic_engine_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..50 {
        let v: [BigRational; 6] = std::array::from_fn(|i| random_rational(&mut rng, i == 1));
        let lin = LinearSystem2::constant(v.clone());
        let (closed, case) = fold_linear_2d(&lin).unwrap();
        assert_eq!(case, LinearCase::ConstantB, "trial {trial}");

        let sys: System = lin.to_system().unwrap();
        let (generic, _) = fold(&sys, "x").unwrap();
        assert_eq!(closed.equation.rhs, generic.equation.rhs, "trial {trial}");
        assert_eq!(closed.recovery, generic.recovery, "trial {trial}");
        assert_eq!(closed.equation.rhs, trace_det_oracle(&v), "trial {trial}");

        let cfg = VerifyConfig { trials: 10, steps: 30, seed: trial, ..VerifyConfig::default() };
        let report = verify_folding(&sys, &closed, &cfg).unwrap();
        assert_eq!(report.status, Status::Pass, "trial {trial}: {}", report.to_text());
        assert_eq!(report.max_abs_dev, 0.0);
    }
}

#[test]
fn zero_b_recovers_second_component_by_recurrence() {
    let r = |p: i64| BigRational::from_integer(p.into());
    let lin = LinearSystem2::constant([r(2), r(0), r(0), r(3), r(1), r(-1)]);
    let (f, case) = fold_linear_2d(&lin).unwrap();
    assert_eq!(case, LinearCase::ZeroB);
    assert!(matches!(f.recovery[0].1, Recovery::Recurrence(_)));
    let sys = lin.to_system().unwrap();
    let report = verify_folding(&sys, &f, &VerifyConfig { trials: 10, steps: 20, ..Default::default() }).unwrap();
    assert_eq!(report.status, Status::Pass, "{}", report.to_text());
}

#[test]
fn zero_b_with_coupling_swaps_the_pivot() {
    let r = |p: i64| BigRational::from_integer(p.into());
    let lin = LinearSystem2::constant([r(2), r(0), r(1), r(3), r(1), r(-1)]);
    let (f, case) = fold_linear_2d(&lin).unwrap();
    assert_eq!(case, LinearCase::PivotSwapped(Box::new(LinearCase::ConstantB)));
    assert_eq!(f.pivot, "y");
    let sys = lin.to_system().unwrap();
    let report = verify_folding(&sys, &f, &VerifyConfig { trials: 10, steps: 20, ..Default::default() }).unwrap();
    assert_eq!(report.status, Status::Pass, "{}", report.to_text());
}

fn ints(v: &[i64]) -> Vec<Num> {
    v.iter().map(|&x| Num::int(x)).collect()
}

fn cosine_example() -> PeriodicLinearEq {
    PeriodicLinearEq::homogeneous(ints(&[-1, -1, 2]), ints(&[1, 1, 1])).unwrap()
}

#[test]
fn period_three_eigensequence_golden_values() {
    let fac = eigensequence(&cosine_example(), 0).unwrap();
    assert_eq!(fac.alpha[2..=4], ints(&[-1, 2, 3]));
    assert_eq!(fac.beta[2..=4], ints(&[1, -1, -1]));
    assert_eq!(fac.quadratic_text(), "2r^2 - 4r + 1");

    let s2 = 2f64.sqrt();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    assert!(close(fac.roots[0], (2.0 - s2) / 2.0));
    assert!(close(fac.roots[1], (2.0 + s2) / 2.0));
    assert!(close(fac.r(1), (2.0 - s2) / 2.0));
    assert!(close(fac.r(2), 1.0 + s2), "r2 = {}", fac.r(2));
    assert!(close(fac.r(3), -2.0 + s2), "r3 = {}", fac.r(3));
    assert!(close(fac.growth_factor, 1.0 + s2), "rho = {}", fac.growth_factor);
}

#[test]
fn special_solutions_decay_and_generic_ones_grow() {
    let eq = cosine_example();
    let fac = eigensequence(&eq, 0).unwrap();
    let rho = 1.0 + 2f64.sqrt();

    for x0 in [1.0, -2.5, 0.3] {
        let x1 = fac.r(1) * x0;
        assert!(fac.is_special(x0, x1));
        let xs = iterate_factor_pair(&fac, x0, x1, 18);
        let direct = eq.iterate(x0, x1, 18);
        for n in 0..=6 {
            let expected = (-1f64).powi(n as i32) * x0 / rho.powi(n as i32);
            assert!((xs[3 * n] - expected).abs() <= 1e-9, "x0 {x0}, n {n}: {} vs {expected}", xs[3 * n]);
            assert!((direct[3 * n] - expected).abs() <= 1e-9);
        }
    }

    for (x0, x1) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-0.7, 2.0)] {
        assert!(!fac.is_special(x0, x1));
        let xs = iterate_factor_pair(&fac, x0, x1, 30);
        let direct = eq.iterate(x0, x1, 30);
        let start = x0.abs().max(x1.abs());
        assert!(xs[30].abs() >= 10.0 * start, "({x0}, {x1}) reached {}", xs[30]);
        for (a, b) in xs.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }
}
