use sysfold::expr::{parse_expr_with, Expr};
use sysfold::odefold::{fold_ode, integrate_rk4, VectorField};
use sysfold::sysmodel::{parse_spec, System};
use sysfold::verify::{verify_ode_folding, verify_ode_folding_from, OdeVerifyConfig, Status};

fn ex(sys: &System, text: &str) -> Expr {
    parse_expr_with(text, &sys.fns).unwrap()
}

fn cfg(t_end: f64, tol: f64) -> OdeVerifyConfig {
    OdeVerifyConfig { t0: 0.0, t_end, h: 1e-3, trials: 5, seed: 3, tol }
}

#[test]
fn des1_flow_matches_harmonic_equation() {
    let sys = parse_spec(
        "kind: ode\nvars: x y\nparam a = 1\neq x = t*x^2 - y\neq y = a*x + x^2 + 2*t^2*x^3 - 2*t*x*y\n",
    )
    .unwrap();
    let f = fold_ode(&sys, "x").unwrap();
    assert_eq!(f.equation.rhs, ex(&sys, "-x"));
    let report = verify_ode_folding(&sys, &f, &cfg(5.0, 1e-5)).unwrap();
    assert_eq!(report.status, Status::Pass, "{}", report.to_text());
}

#[test]
fn des3e_jerk_flow_matches_on_unit_interval() {
    let sys = parse_spec(
        "kind: ode\nvars: x y z\nparam a = 1\nparam b = -1\nparam c = 1/2\nparam d = -1/2\n\
         fn rho deriv=2*u def=u^2\neq x = a*y + z\neq y = b*x + c*z\neq z = rho(x) + d*y\n",
    )
    .unwrap();
    let f = fold_ode(&sys, "x").unwrap();
    assert_eq!(f.equation.rhs, ex(&sys, "(2*x - 1 - 1/4)*x' + rho(x)/2 - x/2 + x"));
    let report = verify_ode_folding(&sys, &f, &cfg(1.0, 1e-5)).unwrap();
    assert_eq!(report.status, Status::Pass, "{}", report.to_text());
}

#[test]
fn volterra_flow_matches_from_the_reference_state() {
    let sys = parse_spec(
        "kind: ode\nvars: x y\nparam a = 1\nparam b = 1\nparam c = 1\nparam d = 1\n\
         eq x = x*(a - b*y)\neq y = y*(c - d*x)\n",
    )
    .unwrap();
    let f = fold_ode(&sys, "x").unwrap();
    assert_eq!(f.equation.rhs, ex(&sys, "x'^2/x + (x' - x)*(1 - x)"));
    let report = verify_ode_folding_from(&sys, &f, &[vec![1.0, 2.0]], &cfg(5.0, 1e-5)).unwrap();
    assert_eq!(report.status, Status::Pass, "{}", report.to_text());
    assert!(report.singular_events.is_empty());
}

#[test]
fn rk4_error_drops_sixteenfold_when_step_halves() {
    // x'' = -x from (1, 0): exact solution cos t.
    let sys = parse_spec("kind: ode\nvars: x y\neq x = y\neq y = -x\n").unwrap();
    let field = VectorField::from_system(&sys);
    let error = |h: f64| {
        let steps = (2.0 / h).round() as usize;
        let traj = integrate_rk4(&field, &[1.0, 0.0], 0.0, h, steps);
        (traj.states[steps][0] - 2f64.cos()).abs()
    };
    for h in [0.1, 0.05, 0.025] {
        let ratio = error(h) / error(h / 2.0);
        assert!(ratio >= 12.0, "h = {h}: ratio {ratio}");
    }
}

#[test]
fn rk4_order_holds_for_a_nonautonomous_field() {
    // x' = t*x from 1: exact solution exp(t^2/2).
    let sys = parse_spec("kind: ode\nvars: x\neq x = t*x\n").unwrap();
    let field = VectorField::from_system(&sys);
    let error = |h: f64| {
        let steps = (1.0 / h).round() as usize;
        let traj = integrate_rk4(&field, &[1.0], 0.0, h, steps);
        (traj.states[steps][0] - 0.5f64.exp()).abs()
    };
    let ratio = error(0.05) / error(0.025);
    assert!(ratio >= 12.0, "ratio {ratio}");
}
