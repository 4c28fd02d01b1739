// Fold a planar recurrence into one second-order equation and show each
// elimination step.
//
// ```bash
// cargo run --example fold_system
// ```

use sysfold::foldcore::fold;
use sysfold::sysmodel::{parse_spec, Recovery};

const SPEC: &str = "\
kind: difference
vars: x y
param a
param b
eq x = x*y
eq y = (a + b*x)/y
";

fn main() {
    let sys = parse_spec(SPEC).expect("spec parses");
    let (folding, trace) = fold(&sys, "x").expect("system folds");

    for step in &trace.steps {
        print!("level {}: {}", step.level, step.equation);
        if let (Some(v), Some(inv)) = (&step.eliminated, &step.inversion) {
            print!("   (solved for {v} = {inv})");
        }
        println!();
    }

    println!("\n{}", folding.equation);
    for (v, rec) in &folding.recovery {
        match rec {
            Recovery::Passive(e) => println!("  {v} = {e}"),
            Recovery::Recurrence(e) => println!("  {v}[n+1] = {e}"),
        }
    }
    for c in &folding.side_conditions {
        println!("  requires {c}");
    }
    if let Some(d) = &folding.decimation {
        println!("  stride-{} decimation onto {}", d.stride, d.map);
    }
}
