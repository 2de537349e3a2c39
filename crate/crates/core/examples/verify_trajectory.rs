//! Verifies a planned trajectory, then tampers with one sample and shows the
//! verifier catching the broken dynamics.

use searchplan::io::{read_trajectory, trajectory_to_string};
use searchplan::scenario::{bundled, load_scenario_with, Overrides};
use searchplan::solver::solve_scenario;
use searchplan::verifier::{verify, VerifyOptions};

fn main() {
    let overrides = Overrides {
        weight_time: Some(1.0),
        weight_energy: Some(0.0),
        ..Default::default()
    };
    let scenario = load_scenario_with(bundled("weights").unwrap(), &overrides).unwrap();
    let zones = scenario.build_zones().unwrap();
    let (model, sol) = solve_scenario(&scenario, &zones).unwrap();
    let traj = sol.trajectory(&model, &scenario.start).expect("a plan");

    // Round-trip through the CSV form the CLI writes.
    let csv = trajectory_to_string(&traj);
    let traj = read_trajectory(csv.as_bytes()).unwrap();

    let opts = VerifyOptions::default();
    let report = verify(&scenario, &zones, &traj, &opts);
    println!(
        "planned: pass {}, dynamics residual {:.1e}, goal at {:?}, zones {:?}",
        report.pass, report.dynamics_residual_max, report.goal_reached_at, report.selected_zones
    );
    for c in &report.face_coverage_fraction {
        println!("    object {} part {} face {}: {:.1}% covered", c.object, c.part, c.face.label(), 100.0 * c.fraction);
    }

    let mut tampered = traj.clone();
    tampered.states[3].position.x += 2.0;
    let report = verify(&scenario, &zones, &tampered, &opts);
    println!("tampered: pass {}", report.pass);
    for f in &report.failures {
        println!("    {f}");
    }
}
