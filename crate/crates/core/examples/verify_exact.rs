// Compare a folding against brute-force orbits of the original system in
// exact rational arithmetic, then look at a seed that hits a singularity.
//
// ```bash
// cargo run --example verify_exact
// ```

use sysfold::expr::{rat, Num};
use sysfold::foldcore::fold;
use sysfold::sysmodel::parse_spec;
use sysfold::verify::{verify_folding, verify_folding_from, Mode, VerifyConfig};

fn main() {
    let sys = parse_spec("kind: difference\nvars: x y\nparam a\nparam b\neq x = x*y\neq y = (a + b*x)/y\n")
        .unwrap()
        .with_params(&[("a", rat(3, 2)), ("b", rat(-1, 2))]);
    let (folding, _) = fold(&sys, "x").unwrap();

    let cfg = VerifyConfig { trials: 25, steps: 20, ..VerifyConfig::default() };
    let report = verify_folding(&sys, &folding, &cfg).unwrap();
    println!("{}", report.to_text());

    // x0 = -a/b sends the system's y to zero at step 1, but the folded
    // equation keeps going.
    let seed = vec![vec![Num::int(3), Num::Exact(rat(5, 7))]];
    let report = verify_folding_from(&sys, &folding, &seed, 10, Mode::Exact, 0.0).unwrap();
    println!("{}", report.to_text());
}
