// The inverse problem: choose the second equation of a planar system so it
// folds to a prescribed second-order equation.
//
// ```bash
// cargo run --example unfold
// ```

use sysfold::expr::{canonicalize, parse_expr, FnRegistry};
use sysfold::foldcore::fold;
use sysfold::inverse::{unfold_difference, unfold_ode, UnfoldMode};
use sysfold::odefold::fold_ode;
use sysfold::sysmodel::to_spec_text;

fn main() {
    let fns = FnRegistry::new();
    let p = |t: &str| parse_expr(t).unwrap();

    // x[n+1] = x*y must produce s[n+2] = s[n]*(a + b*s[n]).
    let un = unfold_difference(&p("u*v"), &p("u*(a + b*u)"), UnfoldMode::General, &fns).unwrap();
    println!("g = {}", canonicalize(&un.g));
    let sys = un.to_system(&fns);
    print!("{}", to_spec_text(&sys));
    println!("folds back to {}\n", fold(&sys, "x").unwrap().0.equation);

    // Duffing's equation from x' = -b*x + y.
    let un = unfold_ode(&p("-b*u + v"), &p("A*sin(omega*t) - k*u^3 - b*w"), &fns).unwrap();
    println!("g = {}", canonicalize(&un.g));
    let sys = un.to_system(&fns);
    println!("folds back to {}", fold_ode(&sys, "x").unwrap().equation);
}
