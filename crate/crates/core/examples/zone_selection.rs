//! Solves the zone-selection mission at two detection requirements. A looser
//! requirement lets the planner settle for a farther zone with fewer cells.

use searchplan::scenario::{bundled, load_scenario_with, Overrides};
use searchplan::solver::solve_scenario;

fn main() {
    for q in [0.9, 0.7] {
        let overrides = Overrides {
            detection_requirement: Some(q),
            time_limit_s: Some(20.0),
            ..Default::default()
        };
        let scenario = load_scenario_with(bundled("zone_selection").unwrap(), &overrides).unwrap();
        let zones = scenario.build_zones().unwrap();
        let (model, sol) = solve_scenario(&scenario, &zones).expect("model builds");
        println!(
            "Q = {q}: {:?}, objective {:.3}, gap {:.2e}, {} nodes in {:.1} s",
            sol.status, sol.objective, sol.gap, sol.nodes_explored, sol.wall_time_s
        );
        for zi in sol.selected_zones(&model) {
            let z = &zones[zi];
            println!("    selected zone {} with pd {:.2} and {} cells", z.spec.index, z.spec.pd, z.len());
        }
    }
}
