//! Plans the full 60 m building mission with the rolling-horizon heuristic:
//! windows of 10 steps that overlap by 3, over a 120-step mission.

use searchplan::scenario::{bundled, load_scenario_with, Overrides};
use searchplan::solver::{solve_scenario, SolveMode};
use searchplan::verifier::{verify, VerifyOptions};

fn main() {
    env_logger::init();
    let overrides = Overrides {
        horizon: Some(120),
        mode: Some(SolveMode::RollingHorizon { window: 10, overlap: 3 }),
        ..Default::default()
    };
    let scenario = load_scenario_with(bundled("building_60").unwrap(), &overrides).unwrap();
    let zones = scenario.build_zones().unwrap();
    match solve_scenario(&scenario, &zones) {
        Ok((model, sol)) => {
            println!("{:?} (heuristic: {}), objective {:.1} in {:.1} s", sol.status, sol.heuristic, sol.objective, sol.wall_time_s);
            let traj = sol.trajectory(&model, &scenario.start).expect("a stitched plan");
            let report = verify(&scenario, &zones, &traj, &VerifyOptions::default());
            println!(
                "verified: {}, selected zones {:?} (pd {:.2}), goal at {:?}",
                report.pass, report.selected_zones, report.selected_zone_pd, report.goal_reached_at
            );
        }
        Err(e) => println!("{e}"),
    }
}
