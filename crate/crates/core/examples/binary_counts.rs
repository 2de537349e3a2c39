//! Counts the binary variables a model needs as horizon, zones and obstacles
//! grow, and compares the formula with a model that was actually built.

use searchplan::miqp::{build, count_binaries};
use searchplan::scenario::{bundled, load_scenario};

fn main() {
    println!("  T  zones          avoid       z     z~   z^    eps      y    y~    total");
    for (t, sizes, avoid) in [
        (1, vec![1], 0),
        (10, vec![9, 4, 1], 1),
        (20, vec![9, 4, 1], 1),
        (60, vec![36, 16, 4], 1),
        (90, vec![36, 16, 4], 1),
    ] {
        let c = count_binaries(t, &sizes, avoid);
        println!(
            "{t:3}  {:<14} {avoid:5} {:7} {:6} {:4} {:6} {:6} {:5} {:8}",
            format!("{sizes:?}"),
            c.z,
            c.z_tilde,
            c.z_hat,
            c.eps,
            c.y,
            c.y_tilde,
            c.total()
        );
    }
    let worst = count_binaries(90, &[36, 16, 4], 1).worst_case;
    println!("worst case for the 60 m building at T = 90: {worst}");

    let scenario = load_scenario(bundled("zone_selection").unwrap()).unwrap();
    let zones = scenario.build_zones().unwrap();
    let model = build(&scenario, &zones).unwrap();
    println!(
        "built zone_selection model: {} variables, {} binaries, {} rows",
        model.num_variables(),
        model.num_binaries(),
        model.constraints().len()
    );
}
