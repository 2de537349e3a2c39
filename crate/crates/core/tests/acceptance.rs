//! Acceptance checks. Prints one line per criterion and exits non-zero when
//! a criterion outside `KNOWN_FAILURES` fails.

mod common;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::process::Command;
use std::time::Instant;

use common::{brute_force, exact, random_miqp, single_cell_text};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use searchplan::dynamics::{AgentParams, ControlInput, Dynamics, State, Trajectory};
use searchplan::geometry::Vec3;
use searchplan::io::penalties;
use searchplan::miqp::{build, count_binaries, export_lp, BinaryCounts, MiqpModel};
use searchplan::scenario::{bundled, load_scenario, load_scenario_with, Overrides, Scenario};
use searchplan::solver::{branch_and_bound, solve_scenario, MipSolution, MipStatus, SolveMode};
use searchplan::verifier::{verify, VerificationReport, VerifyOptions};
use searchplan::zoning::Zone;

/// Criteria that fail for reasons recorded in the README.
const KNOWN_FAILURES: &[u8] = &[7];

struct Verdict {
    pass: bool,
    skipped: bool,
    detail: String,
}

impl Verdict {
    fn check(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            skipped: false,
            detail: detail.into(),
        }
    }

    fn skip(detail: impl Into<String>) -> Self {
        Self {
            pass: true,
            skipped: true,
            detail: detail.into(),
        }
    }
}

/// A solved and verified scenario.
struct Run {
    scenario: Scenario,
    outcome: Result<MipSolution, String>,
    trajectory: Option<Trajectory>,
    report: Option<VerificationReport>,
    seconds: f64,
}

impl Run {
    fn new(scenario: Scenario) -> Self {
        let t = Instant::now();
        let zones = scenario.build_zones().expect("bundled zones build");
        let (outcome, trajectory) = match solve_scenario(&scenario, &zones) {
            Ok((model, solution)) => {
                let trajectory = solution.trajectory(&model, &scenario.start);
                (Ok(solution), trajectory)
            }
            Err(e) => (Err(e.to_string()), None),
        };
        let report = trajectory
            .as_ref()
            .map(|traj| verify(&scenario, &zones, traj, &VerifyOptions::default()));
        Self {
            scenario,
            outcome,
            trajectory,
            report,
            seconds: t.elapsed().as_secs_f64(),
        }
    }

    fn summary(&self) -> String {
        match &self.outcome {
            Ok(sol) => format!(
                "{:?} obj {:.3} gap {:.2e} in {:.1} s",
                sol.status, sol.objective, sol.gap, self.seconds
            ),
            Err(e) => format!("{e} after {:.1} s", self.seconds),
        }
    }
}

fn bundled_with(name: &str, o: Overrides) -> Scenario {
    load_scenario_with(bundled(name).expect("bundled scenario"), &o).expect("bundled scenario loads")
}

fn dynamics_oracle() -> Verdict {
    let dynamics = Dynamics::new(AgentParams::reference()).unwrap();
    let p = dynamics.params().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x0 = State::new(
            Vec3::from_fn(|_, _| rng.random_range(-100.0..100.0)),
            Vec3::from_fn(|d, _| rng.random_range(p.velocity_min[d]..p.velocity_max[d])),
        );
        let us: Vec<ControlInput> = (0..50)
            .map(|_| ControlInput::new(Vec3::from_fn(|d, _| rng.random_range(p.force_min[d]..p.force_max[d]))))
            .collect();
        let states = dynamics.rollout(&x0, &us).unwrap();
        for t in 1..=50 {
            let closed = dynamics.closed_form_state(&x0, &us, t).unwrap();
            worst = worst.max(closed.max_abs_diff(&states[t - 1]));
        }
    }
    Verdict::check(worst <= 1e-9, format!("max deviation {worst:.2e} over 100 runs of 50 steps"))
}

fn zone_structure() -> Verdict {
    let s = load_scenario(bundled("building_60").unwrap()).unwrap();
    let zones = s.build_zones().unwrap();
    let lens: Vec<usize> = zones.iter().map(Zone::len).collect();
    let want = [[20.0, 20.0, 10.0], [30.0, 30.0, 26.0], [60.0, 60.0, 40.0]];
    let dims_ok = zones.len() == 3 && zones.iter().zip(want).all(|(z, w)| z.cells.iter().all(|c| c.sigma() == w));
    Verdict::check(
        lens == [36, 16, 4] && dims_ok,
        format!("zone sizes {lens:?}, cell dims exact: {dims_ok}"),
    )
}

fn binary_counts() -> Verdict {
    let counts = |z, zt, zh, eps, y, yt| (z, zt, zh, eps, y, yt);
    let blocks = |c: BinaryCounts| (c.z, c.z_tilde, c.z_hat, c.eps, c.y, c.y_tilde);
    let cases = [
        ((1, vec![1], 0), counts(6, 1, 1, 0, 6, 1)),
        ((3, vec![2, 1], 2), counts(54, 9, 2, 36, 18, 3)),
        ((20, vec![9, 4, 1], 1), counts(1680, 280, 3, 120, 120, 20)),
        ((5, vec![], 3), counts(0, 0, 0, 90, 30, 5)),
        ((90, vec![36, 16, 4], 1), counts(30240, 5040, 3, 540, 540, 90)),
    ];
    let mut bad = Vec::new();
    for (k, ((t, sizes, avoid), want)) in cases.iter().enumerate() {
        if blocks(count_binaries(*t, sizes, *avoid)) != *want {
            bad.push(k);
        }
    }
    let worst = count_binaries(90, &[36, 16, 4], 1).worst_case;
    // Built models agree with the formula.
    let s = load_scenario(bundled("zone_selection").unwrap()).unwrap();
    let m = build(&s, &s.build_zones().unwrap()).unwrap();
    let built_ok = blocks(m.layout().unwrap().counts()) == cases[2].1 && m.num_binaries() == 2223;
    Verdict::check(
        worst == 22_680 && bad.is_empty() && built_ok,
        format!("worst case {worst}, constructed cases wrong: {bad:?}, built model agrees: {built_ok}"),
    )
}

fn brute_force_agreement() -> Verdict {
    let mut models: Vec<MiqpModel> = (0..10).map(|seed| random_miqp(seed, 6 + seed as usize)).collect();
    let inside = {
        let s = load_scenario(&single_cell_text([40.0, 0.0, 6.0], 1)).unwrap();
        let c = *s.build_zones().unwrap()[0].cells[0].interior_cube.center();
        [c.x, c.y, c.z]
    };
    for start in [inside, [40.0, 0.0, 6.0]] {
        let s = load_scenario(&single_cell_text(start, 1)).unwrap();
        let zones = s.build_zones().unwrap();
        let opts = searchplan::miqp::BuildOptions {
            skip_goal: true,
            ..Default::default()
        };
        models.push(searchplan::miqp::build_with(&s, &zones, &opts).unwrap());
    }
    let mut mismatches = Vec::new();
    let (mut feasible, mut infeasible) = (0, 0);
    for m in &models {
        let sol = branch_and_bound(m, &exact());
        let ok = match brute_force(m) {
            None => {
                infeasible += 1;
                sol.status == MipStatus::Infeasible
            }
            Some(v) => {
                feasible += 1;
                sol.status == MipStatus::Optimal && (sol.objective - v).abs() / v.abs().max(1.0) <= 1e-6
            }
        };
        if !ok {
            mismatches.push(m.name.clone());
        }
    }
    let max_free = models
        .iter()
        .map(|m| {
            let (lo, hi) = (m.lower_bounds(), m.upper_bounds());
            m.binary_indices().into_iter().filter(|&j| lo[j] != hi[j]).count()
        })
        .max()
        .unwrap_or(0);
    Verdict::check(
        mismatches.is_empty(),
        format!(
            "{} instances ({feasible} feasible, {infeasible} infeasible, at most {max_free} free binaries), mismatches {mismatches:?}",
            models.len()
        ),
    )
}

fn selected(run: &Run) -> Option<(f64, usize, bool)> {
    let report = run.report.as_ref()?;
    let zone = *report.selected_zones.get(&0)?;
    let v = report.visitation.iter().find(|v| v.zone == zone)?;
    Some((v.pd, v.cells.len(), v.is_complete() && report.pass))
}

fn zone_selection(high: &Run, low: &Run) -> Verdict {
    let (a, b) = (selected(high), selected(low));
    let ok = matches!(a, Some((pd, 9, true)) if pd == 0.95) && matches!(b, Some((pd, 4, true)) if pd == 0.75);
    let show = |s: Option<(f64, usize, bool)>| match s {
        Some((pd, n, ok)) => format!("pd {pd} with {n} cells, verified {ok}"),
        None => "no plan".to_string(),
    };
    Verdict::check(
        ok,
        format!(
            "Q=0.9: {} [{}]; Q=0.7: {} [{}]",
            show(a),
            high.summary(),
            show(b),
            low.summary()
        ),
    )
}

fn weight_tradeoff(time: &Run, energy: &Run) -> Verdict {
    let measure = |r: &Run| -> Option<(usize, f64)> {
        let arrival = r.report.as_ref()?.goal_reached_at?;
        let ifp = penalties(r.trajectory.as_ref()?, r.scenario.goal.center()).input_fluctuation;
        Some((arrival, ifp))
    };
    match (measure(time), measure(energy)) {
        (Some((ta, ia)), Some((tb, ib))) => Verdict::check(
            ta <= tb && ib <= ia,
            format!(
                "(1,0): arrival {ta}, fluctuation {ia:.3} [{}]; (0,1): arrival {tb}, fluctuation {ib:.3} [{}]",
                time.summary(),
                energy.summary()
            ),
        ),
        _ => Verdict::check(
            false,
            format!("missing plan: (1,0) [{}]; (0,1) [{}]", time.summary(), energy.summary()),
        ),
    }
}

fn obstacle_avoidance(run: &Run) -> Verdict {
    let s = &run.scenario;
    let blocked = s
        .obstacles
        .iter()
        .flat_map(|o| o.parts())
        .any(|c| c.segment_intersects(&s.start.position, s.goal.center()));
    match &run.report {
        Some(r) => Verdict::check(
            blocked && r.obstacle_violations.is_empty() && r.corner_cut_warnings.is_empty(),
            format!(
                "straight line blocked: {blocked}; {} violations, {} corner cuts at steps {:?} [{}]",
                r.obstacle_violations.len(),
                r.corner_cut_warnings.len(),
                r.corner_cut_warnings.iter().map(|h| h.t).collect::<Vec<_>>(),
                run.summary()
            ),
        ),
        None => Verdict::check(false, format!("no plan [{}]", run.summary())),
    }
}

fn soundness(runs: &[(&str, &Run)]) -> Verdict {
    let mut produced = 0;
    let mut failed = Vec::new();
    let mut none = Vec::new();
    for (name, run) in runs {
        match &run.report {
            Some(r) => {
                produced += 1;
                if !r.pass {
                    failed.push(format!("{name}: {}", r.failures.join("; ")));
                }
            }
            None => none.push(*name),
        }
    }
    Verdict::check(
        failed.is_empty() && produced > 0,
        format!("{produced} plans verified, failures {failed:?}, no plan: {none:?}"),
    )
}

const SCIP_SCRIPT: &str = r#"
import sys, pyscipopt
m = pyscipopt.Model()
m.hideOutput()
m.readProblem(sys.argv[1])
m.setParam("limits/gap", 1e-9)
m.setParam("limits/absgap", 1e-9)
m.optimize()
print(m.getStatus(), repr(m.getObjVal()) if m.getNSols() > 0 else "nan")
"#;

fn lp_round_trip() -> Verdict {
    let probe = Command::new("python3").args(["-c", "import pyscipopt"]).output();
    if !matches!(probe, Ok(ref o) if o.status.success()) {
        return Verdict::skip("pyscipopt not importable; install it to compare against SCIP");
    }
    let dir = tempfile::TempDir::new().unwrap();
    let mut models = Vec::new();
    for (start, horizon) in [([40.0, 0.0, 6.0], 6), ([42.0, 5.0, 8.0], 5)] {
        let s = load_scenario(&single_cell_text(start, horizon)).unwrap();
        models.push(build(&s, &s.build_zones().unwrap()).unwrap());
    }
    models.push(random_miqp(2, 10));
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, m) in models.iter().enumerate() {
        let ours = branch_and_bound(m, &exact());
        let path = dir.path().join(format!("m{k}.lp"));
        std::fs::write(&path, export_lp(m)).unwrap();
        let out = Command::new("python3")
            .args(["-c", SCIP_SCRIPT, path.to_str().unwrap()])
            .output()
            .unwrap();
        let text = String::from_utf8_lossy(&out.stdout);
        let theirs: f64 = text.split_whitespace().nth(1).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
        let rel = (ours.objective - theirs).abs() / ours.objective.abs().max(1.0);
        ok &= ours.status == MipStatus::Optimal && rel <= 1e-6;
        lines.push(format!("{}: ours {:.6} scip {:.6} rel {rel:.1e}", m.name, ours.objective, theirs));
    }
    Verdict::check(ok, lines.join("; "))
}

fn main() {
    let mut results: BTreeMap<u8, (&str, Verdict, f64)> = BTreeMap::new();
    let mut record = |id: u8, title: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        let tag = match (v.skipped, v.pass) {
            (true, _) => "SKIP",
            (false, true) => "PASS",
            (false, false) if KNOWN_FAILURES.contains(&id) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("[{tag}] {id} {title}: {} ({secs:.1} s)", v.detail);
        let _ = std::io::stdout().flush();
        results.insert(id, (title, v, secs));
    };

    record(1, "dynamics oracle equivalence", &mut dynamics_oracle);
    record(2, "zone structure", &mut zone_structure);
    record(3, "binary counts", &mut binary_counts);
    record(4, "branch-and-bound vs brute force", &mut brute_force_agreement);

    let q = |v| Overrides {
        detection_requirement: Some(v),
        ..Default::default()
    };
    let high = Run::new(bundled_with("zone_selection", q(0.9)));
    let low = Run::new(bundled_with("zone_selection", q(0.7)));
    record(5, "zone selection vs Q", &mut || zone_selection(&high, &low));

    let weights = |w1, w2| Overrides {
        weight_time: Some(w1),
        weight_energy: Some(w2),
        ..Default::default()
    };
    let time = Run::new(bundled_with("weights", weights(1.0, 0.0)));
    let energy = Run::new(bundled_with("weights", weights(0.0, 1.0)));
    record(6, "weight trade-off", &mut || weight_tradeoff(&time, &energy));

    let obstacle = Run::new(bundled_with("obstacle", Overrides::default()));
    record(7, "obstacle avoidance", &mut || obstacle_avoidance(&obstacle));

    let weights_default = Run::new(bundled_with("weights", Overrides::default()));
    let rolling = |horizon| Overrides {
        horizon,
        mode: Some(SolveMode::RollingHorizon { window: 10, overlap: 3 }),
        ..Default::default()
    };
    let building = Run::new(bundled_with("building_60", rolling(None)));
    let building_long = Run::new(bundled_with("building_60", rolling(Some(120))));
    record(8, "end-to-end soundness", &mut || {
        soundness(&[
            ("zone_selection", &high),
            ("zone_selection Q=0.7", &low),
            ("weights", &weights_default),
            ("weights (1,0)", &time),
            ("weights (0,1)", &energy),
            ("obstacle", &obstacle),
            ("building_60 rolling", &building),
            ("building_60 rolling T=120", &building_long),
        ])
    });
    record(9, "LP round-trip", &mut lp_round_trip);

    let passed = results.values().filter(|(_, v, _)| v.pass && !v.skipped).count();
    let skipped = results.values().filter(|(_, v, _)| v.skipped).count();
    let unexpected: Vec<u8> = results
        .iter()
        .filter(|(id, (_, v, _))| !v.pass && !KNOWN_FAILURES.contains(id))
        .map(|(id, _)| *id)
        .collect();
    println!(
        "acceptance: {passed} passed, {} failed, {skipped} skipped",
        results.len() - passed - skipped
    );
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
