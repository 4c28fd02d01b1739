// Closed-form foldings of planar linear systems: constant coefficients, a
// periodic coefficient that vanishes, and the continuous-time analogue.
//
// ```bash
// cargo run --example linear_closed_form
// ```

use sysfold::expr::{rat, Expr};
use sysfold::linfold::{fold_linear_2d, fold_linear_ode_2d, Coef, LinearSystem2};
use sysfold::sysmodel::{EqKind, Recovery};

fn show(label: &str, sys: &LinearSystem2, ode: bool) {
    let (f, case) = if ode { fold_linear_ode_2d(sys) } else { fold_linear_2d(sys) }.unwrap();
    println!("{label}\n  {}\n  case: {case}", f.equation);
    for (v, r) in &f.recovery {
        match r {
            Recovery::Passive(e) => println!("  {v} = {e}"),
            Recovery::Recurrence(e) => println!("  {v}[n+1] = {e}"),
        }
    }
    println!();
}

fn main() {
    let r = |p: i64| rat(p, 1);
    let constant = LinearSystem2::constant([r(2), r(3), r(1), r(-1), r(1), rat(1, 2)]);
    show("constant coefficients", &constant, false);

    let mut periodic = constant.clone();
    periodic.b = Coef::Periodic(vec![r(1), r(0), r(2)]);
    show("b = 1, 0, 2, ... (vanishes every third step)", &periodic, false);

    periodic.c = Coef::Periodic(vec![r(0), r(1), r(1)]);
    show("b and c both vanish somewhere", &periodic, false);

    let mut rotation = LinearSystem2::constant([r(0), r(1), r(-1), r(0), r(0), r(0)]).with_kind(EqKind::Ode);
    rotation.alpha = Coef::Expr(Expr::t());
    show("rotation with forcing t", &rotation, true);
}
