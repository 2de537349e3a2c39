//! Branch-and-bound against exhaustive enumeration on small models.

mod common;

use common::{brute_force, exact, random_miqp, single_cell_text};
use searchplan::miqp::{build_with, BuildOptions, MiqpModel};
use searchplan::scenario::load_scenario;
use searchplan::solver::{branch_and_bound, Branching, MipStatus, NodeSelection, SolveOptions};

fn agree(m: &MiqpModel, opts: &SolveOptions) {
    let oracle = brute_force(m);
    let sol = branch_and_bound(m, opts);
    match oracle {
        None => assert_eq!(sol.status, MipStatus::Infeasible, "{}", m.name),
        Some(v) => {
            assert_eq!(sol.status, MipStatus::Optimal, "{}", m.name);
            let rel = (sol.objective - v).abs() / v.abs().max(1.0);
            assert!(rel <= 1e-6, "{}: {} vs {v}", m.name, sol.objective);
        }
    }
}

fn single_cell_model(start: [f64; 3]) -> MiqpModel {
    let s = load_scenario(&single_cell_text(start, 1)).unwrap();
    let zones = s.build_zones().unwrap();
    let opts = BuildOptions {
        skip_goal: true,
        ..Default::default()
    };
    build_with(&s, &zones, &opts).unwrap()
}

#[test]
fn random_models_match_enumeration() {
    for seed in 0..10 {
        agree(&random_miqp(seed, 6 + seed as usize), &exact());
    }
}

#[test]
fn every_rule_reaches_the_same_optimum() {
    let m = random_miqp(4, 12);
    for node_selection in [NodeSelection::BestBound, NodeSelection::DepthFirst] {
        for branching in [Branching::MostFractional, Branching::FirstFractional, Branching::Proximity] {
            let opts = SolveOptions {
                node_selection,
                branching,
                ..exact()
            };
            agree(&m, &opts);
        }
    }
}

#[test]
fn parallel_batches_match_enumeration() {
    let opts = SolveOptions { workers: 4, ..exact() };
    agree(&random_miqp(8, 14), &opts);
}

#[test]
fn single_cell_models_match_enumeration() {
    let s = load_scenario(&single_cell_text([40.0, 0.0, 6.0], 1)).unwrap();
    let cube = s.build_zones().unwrap()[0].cells[0].interior_cube.clone();
    let c = cube.center();
    let inside = single_cell_model([c.x, c.y, c.z]);
    assert!(brute_force(&inside).is_some());
    agree(&inside, &exact());
    let outside = single_cell_model([40.0, 0.0, 6.0]);
    agree(&outside, &exact());
    assert_eq!(branch_and_bound(&outside, &exact()).status, MipStatus::Infeasible);
}
