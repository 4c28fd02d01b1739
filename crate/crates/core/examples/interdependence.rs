// Interdependence degrees: how far a system can be folded, and when it
// cannot be folded at all.
//
// ```bash
// cargo run --example interdependence
// ```

use sysfold::foldcore::interdependence_degree;
use sysfold::sysmodel::parse_spec;

fn main() {
    let systems = [
        ("fully coupled", "kind: difference\nvars: x1 x2 x3\nparam a = 1/2\nparam b = 1\nparam c = -1\nparam d = 2\n\
          eq x1 = a*x2 + x3\neq x2 = b*x1 + c*x3\neq x3 = x1^2 + d*x2\n"),
        ("d = a^2*c", "kind: difference\nvars: x1 x2 x3\nparam a = 2\nparam b = 1/3\nparam c = -1/2\nparam d = -2\n\
          eq x1 = a*x2 + x3\neq x2 = b*x1 + c*x3\neq x3 = x1^2 + d*x2\n"),
        ("uncoupled", "kind: difference\nvars: x y\neq x = 2*x\neq y = y^2\n"),
        ("two blocks", "kind: difference\nvars: x y z\neq x = y\neq y = x + y\neq z = z/2\n"),
    ];
    for (label, text) in systems {
        let sys = parse_spec(text).unwrap();
        println!("{label:>14}: {}", interdependence_degree(&sys));
    }
}
