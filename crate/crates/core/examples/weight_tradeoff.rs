//! Solves the same mission once with only the time weight and once with only
//! the energy weight, then compares arrival step and control fluctuation.

use searchplan::io::penalties;
use searchplan::scenario::{bundled, load_scenario_with, Overrides};
use searchplan::solver::solve_scenario;
use searchplan::verifier::{verify, VerifyOptions};

fn main() {
    for (w1, w2) in [(1.0, 0.0), (0.0, 1.0)] {
        let overrides = Overrides {
            weight_time: Some(w1),
            weight_energy: Some(w2),
            ..Default::default()
        };
        let scenario = load_scenario_with(bundled("weights").unwrap(), &overrides).unwrap();
        let zones = scenario.build_zones().unwrap();
        let (model, sol) = solve_scenario(&scenario, &zones).unwrap();
        let Some(traj) = sol.trajectory(&model, &scenario.start) else {
            println!("w = ({w1}, {w2}): {:?}, no plan", sol.status);
            continue;
        };
        let report = verify(&scenario, &zones, &traj, &VerifyOptions::default());
        let pen = penalties(&traj, scenario.goal.center());
        println!(
            "w = ({w1}, {w2}): {:?}, arrives at step {:?}, path error {:.1}, input fluctuation {:.1}, verified: {}",
            sol.status, report.goal_reached_at, pen.path_error, pen.input_fluctuation, report.pass
        );
    }
}
