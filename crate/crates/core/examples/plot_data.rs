//! Writes per-step position, velocity and control series plus the scene
//! geometry as CSV and JSON for external plotting.
//!
//! ```text
//! cargo run --example plot_data -- /tmp/plot
//! ```

use std::path::PathBuf;

use searchplan::io::{scene_document, write_json, write_plot_data};
use searchplan::scenario::{bundled, load_scenario};
use searchplan::solver::solve_scenario;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "plot".to_string()));
    let scenario = load_scenario(bundled("weights").unwrap()).unwrap();
    let zones = scenario.build_zones().unwrap();
    let (model, sol) = solve_scenario(&scenario, &zones).unwrap();
    let traj = sol.trajectory(&model, &scenario.start).expect("a plan");

    for path in write_plot_data(&traj, &dir).expect("series written") {
        println!("wrote {}", path.display());
    }
    let scene = dir.join("scene.json");
    write_json(&scene_document(&scenario, &zones), &scene).expect("scene written");
    println!("wrote {}", scene.display());
}
