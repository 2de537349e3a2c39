//! Plans around a wall that blocks the straight line from start to goal and
//! reports what the verifier sees between the samples.

use searchplan::scenario::{bundled, load_scenario};
use searchplan::solver::solve_scenario;
use searchplan::verifier::{verify, VerifyOptions};

fn main() {
    let scenario = load_scenario(bundled("obstacle").unwrap()).unwrap();
    let zones = scenario.build_zones().unwrap();
    let wall = scenario.obstacles[0].parts()[0].clone();
    println!(
        "straight line blocked by the wall: {}",
        wall.segment_intersects(&scenario.start.position, scenario.goal.center())
    );

    let (model, sol) = solve_scenario(&scenario, &zones).unwrap();
    let traj = sol.trajectory(&model, &scenario.start).expect("a plan");
    let report = verify(&scenario, &zones, &traj, &VerifyOptions::default());
    println!("{:?}, objective {:.2} in {:.1} s", sol.status, sol.objective, sol.wall_time_s);
    println!("sampled positions inside an obstacle: {}", report.obstacle_violations.len());
    for hit in &report.corner_cut_warnings {
        println!("segment {} -> {} cuts through {}", hit.t - 1, hit.t, hit.name);
    }
    println!("goal reached at step {:?}, verified: {}", report.goal_reached_at, report.pass);
}
