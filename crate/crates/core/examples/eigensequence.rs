// Semiconjugate factorization of x[n+2] = A_n x[n+1] + B_n x[n] with
// period-3 coefficients, and the special solutions it singles out.
//
// ```bash
// cargo run --example eigensequence
// ```

use sysfold::expr::Num;
use sysfold::linfold::{eigensequence, iterate_factor_pair, PeriodicLinearEq};

fn main() {
    let ints = |v: &[i64]| v.iter().map(|&x| Num::int(x)).collect::<Vec<_>>();
    let eq = PeriodicLinearEq::homogeneous(ints(&[-1, -1, 2]), ints(&[1, 1, 1])).unwrap();
    let fac = eigensequence(&eq, 0).unwrap();

    println!("quadratic: {} = 0", fac.quadratic_text());
    println!("r_1..r_3: {:?}", fac.r_seq);
    println!("growth per period: {}", fac.growth_factor);

    let x0 = 1.0;
    let special = iterate_factor_pair(&fac, x0, fac.r(1) * x0, 12);
    let generic = iterate_factor_pair(&fac, x0, 0.0, 12);
    println!("\n  n  special             generic");
    for n in (0..=12).step_by(3) {
        println!("{n:>3}  {:<18.12}  {:.6}", special[n], generic[n]);
    }
}
