// Triangular systems fold by substitution alone. When the coefficients
// cancel, the folded equation only sees s[n] and splits into three
// interleaved orbits of a first-order map.
//
// ```bash
// cargo run --example no_inversion
// ```

use sysfold::expr::{rat, Num};
use sysfold::foldcore::fold_no_inversion;
use sysfold::sysmodel::{iterate_equation, parse_spec};
use sysfold::verify::decimation_check;

const SP3: &str = "\
kind: difference
vars: x y z
param a = 1
param b = 1
param c = -1
param al = 1
param be = 1/2
fn f def=u/2 + 1/3
fn g def=u^2
eq x = f(a*y + b*z)
eq y = c*x + g(z)
eq z = al*x + be
";

fn main() {
    let sys = parse_spec(SP3).unwrap();
    let f = fold_no_inversion(&sys).unwrap();
    println!("{}", f.equation);
    let dec = f.decimation.as_ref().expect("a*c + b*al = 0");
    println!("stride {}: {}", dec.stride, dec.map);

    let init = [Num::Exact(rat(1, 3)), Num::Exact(rat(-1, 2)), Num::Exact(rat(1, 5))];
    let s = iterate_equation(&f.equation, &init, 8, &f.fns);
    for (n, v) in s.values.iter().enumerate() {
        println!("  s[{n}] = {v}");
    }
    let ok = decimation_check(&f.equation, &dec.map, &init, 12, &f.fns).unwrap();
    println!("decimation holds exactly: {ok}");
}
