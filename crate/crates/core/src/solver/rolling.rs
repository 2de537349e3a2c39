//! Rolling-horizon heuristic for instances too large for one exact solve.
//!
//! Per object, the smallest zone meeting the detection requirement is chosen
//! up front, and its cells are ordered into a tour by estimated flight time.
//! Each window of `W` steps must visit the next batch of tour cells within
//! its first `W - overlap` steps, which are then executed; its objective
//! pulls towards the first cell beyond the batch. Cells whose interior
//! cubes were entered along the executed positions are struck off, and the
//! next window starts from the reached state. The goal
//! is only required in the final window, which absorbs a tail shorter than
//! one more stride. The stitched plan is re-checked
//! against the full-horizon model.

use std::time::Instant;

use super::bnb::branch_and_bound;
use super::options::{SolveMode, SolveOptions};
use super::{MipSolution, MipStatus, SearchStats, SolveError};
use crate::dynamics::{AgentParams, ControlInput, Dynamics, State, Trajectory};
use crate::geometry::{Cuboid, Vec3};
use crate::miqp::{build, build_with, BuildOptions, MiqpModel};
use crate::scenario::Scenario;
use crate::zoning::{SearchCell, Zone};

/// Tolerance for striking a cell off as visited.
const VISIT_TOL: f64 = 1e-6;

#[derive(Clone)]
struct Pending {
    object: usize,
    zone: usize,
    cell: SearchCell,
}

/// Smallest qualifying zone per object (ties: higher detection probability).
fn preselect(scenario: &Scenario, zones: &[Zone]) -> Vec<usize> {
    let q = scenario.detection_requirement;
    (0..scenario.objects.len())
        .filter_map(|o| {
            zones
                .iter()
                .enumerate()
                .filter(|(_, z)| z.object == o && z.spec.pd >= q)
                .min_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.1.spec.pd.total_cmp(&a.1.spec.pd)))
                .map(|(i, _)| i)
        })
        .collect()
}

/// Sustainable speed along each axis, as `(negative, positive)` magnitudes:
/// the steady-state speed under full force, capped by the velocity bounds.
fn cruise_speeds(p: &AgentParams) -> [(f64, f64); 3] {
    let ug = p.hover_force();
    let steady = |f: f64| {
        let v = p.input_gain() * f;
        if p.air_resistance > 0.0 {
            v / p.air_resistance
        } else {
            v * f64::INFINITY
        }
    };
    std::array::from_fn(|d| {
        let down = (-steady(p.force_min[d] - ug[d])).min(-p.velocity_min[d]);
        let up = steady(p.force_max[d] - ug[d]).min(p.velocity_max[d]);
        (down.max(f64::MIN_POSITIVE), up.max(f64::MIN_POSITIVE))
    })
}

/// Lower estimate of the steps needed to fly from `a` to `b`.
fn travel_time(speeds: &[(f64, f64); 3], a: &Vec3, b: &Vec3) -> f64 {
    (0..3)
        .map(|d| {
            let delta = b[d] - a[d];
            let v = if delta < 0.0 { speeds[d].0 } else { speeds[d].1 };
            delta.abs() / v
        })
        .fold(0.0, f64::max)
}

fn tour_time(speeds: &[(f64, f64); 3], start: &Vec3, goal: &Vec3, points: &[Vec3], order: &[usize]) -> f64 {
    let mut at = start;
    let mut total = 0.0;
    for &i in order {
        total += travel_time(speeds, at, &points[i]);
        at = &points[i];
    }
    total + travel_time(speeds, at, goal)
}

/// Visiting order for `points` from `start` ending at `goal`: a greedy
/// quickest-next chain improved by segment reversals and single moves
/// until neither shortens the estimated flight time.
fn plan_tour(speeds: &[(f64, f64); 3], start: &Vec3, goal: &Vec3, points: &[Vec3]) -> Vec<usize> {
    let mut order = Vec::with_capacity(points.len());
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut at = *start;
    while !left.is_empty() {
        let k = (0..left.len())
            .min_by(|&a, &b| travel_time(speeds, &at, &points[left[a]]).total_cmp(&travel_time(speeds, &at, &points[left[b]])))
            .expect("cells remain");
        let i = left.remove(k);
        at = points[i];
        order.push(i);
    }
    let n = order.len();
    let mut best = tour_time(speeds, start, goal, points, &order);
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n {
            for j in i + 1..n {
                let mut trial = order.clone();
                trial[i..=j].reverse();
                let t = tour_time(speeds, start, goal, points, &trial);
                if t < best - 1e-9 {
                    (order, best, improved) = (trial, t, true);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut trial = order.clone();
                let c = trial.remove(i);
                trial.insert(j, c);
                let t = tour_time(speeds, start, goal, points, &trial);
                if t < best - 1e-9 {
                    (order, best, improved) = (trial, t, true);
                }
            }
        }
    }
    order
}

/// Whether `cube` meets the reachable box of some step.
fn reachable(boxes: &[Option<(Vec3, Vec3)>], cube: &Cuboid) -> bool {
    boxes.iter().flatten().any(|(lo, hi)| (0..3).all(|d| cube.min()[d] <= hi[d] && cube.max()[d] >= lo[d]))
}

fn window_zones(zones: &[Zone], pending: &[Pending], chosen: &[usize]) -> Vec<Zone> {
    let mut out: Vec<Zone> = Vec::new();
    for &i in chosen {
        let p = &pending[i];
        match out.iter_mut().find(|z| z.object == p.object) {
            Some(z) => z.cells.push(p.cell.clone()),
            None => {
                let mut spec = zones[p.zone].spec.clone();
                spec.pd = 1.0;
                out.push(Zone {
                    spec,
                    object: p.object,
                    cells: vec![p.cell.clone()],
                });
            }
        }
    }
    out
}

/// Plans the mission window by window. Returns the full-horizon model
/// together with the stitched plan expressed in its variables.
pub fn solve_rolling_horizon(
    scenario: &Scenario,
    zones: &[Zone],
    opts: &SolveOptions,
) -> Result<(MiqpModel, MipSolution), SolveError> {
    let start_time = Instant::now();
    let horizon = scenario.horizon;
    let (window, overlap) = match opts.mode {
        SolveMode::RollingHorizon { window, overlap } => (window, overlap),
        SolveMode::Exact => (horizon, 0),
    };
    if window >= horizon {
        let model = build(scenario, zones)?;
        let sol = branch_and_bound(&model, opts);
        return Ok((model, sol));
    }
    let full = build(scenario, zones)?;
    let dynamics = Dynamics::new(scenario.agent.clone()).map_err(crate::miqp::BuildError::from)?;
    let window_opts = SolveOptions {
        mode: SolveMode::Exact,
        ..opts.clone()
    };

    let cells: Vec<Pending> = preselect(scenario, zones)
        .into_iter()
        .flat_map(|zi| {
            zones[zi].cells.iter().map(move |c| Pending {
                object: zones[zi].object,
                zone: zi,
                cell: c.clone(),
            })
        })
        .collect();
    let speeds = cruise_speeds(&scenario.agent);
    let centers: Vec<Vec3> = cells.iter().map(|c| *c.cell.interior_cube.center()).collect();
    let tour = plan_tour(&speeds, &scenario.start.position, scenario.goal.center(), &centers);
    // Pending cells stay in tour order.
    let mut pending: Vec<Pending> = tour.iter().map(|&i| cells[i].clone()).collect();
    let mut state = scenario.start;
    let mut previous: Option<Vec3> = None;
    let mut controls: Vec<ControlInput> = Vec::with_capacity(horizon);
    let mut stats = SearchStats::default();
    let mut t0 = 0;
    let mut index = 0;
    while t0 < horizon {
        let steps_left = horizon - t0;
        // The final window absorbs a tail shorter than one more stride.
        let last = steps_left < 2 * window - overlap;
        let w = if last { steps_left } else { window };
        let executed = if last { w } else { window - overlap };
        let target = if last {
            pending.len()
        } else {
            // Leave time for the final leg to the goal.
            let home = travel_time(&speeds, &state.position, scenario.goal.center()).ceil() as usize;
            let budget = steps_left.saturating_sub(home).max(executed);
            (pending.len() * executed).div_ceil(budget).max(1).min(pending.len())
        };
        let boxes = dynamics.reachable_boxes(&state, executed);
        let lead = if last {
            pending.len()
        } else {
            pending.iter().take_while(|p| reachable(&boxes, &p.cell.interior_cube)).count()
        };
        let target = target.min(lead);
        let mut sub = scenario.clone();
        sub.horizon = w;
        sub.start = state;
        sub.goal_window_start = scenario.goal_window_start.saturating_sub(t0).clamp(1, w);
        sub.solver = window_opts.clone();
        if let (0, Some(next)) = (target, pending.first()) {
            log::debug!("window {index}: next cell out of reach, steering to {:?}", next.cell.interior_cube.center());
            sub.goal = next.cell.interior_cube.clone();
        }
        let build_opts = BuildOptions {
            skip_goal: !last,
            previous_control: previous,
        };
        let mut k = target;
        let (model, sol) = loop {
            let chosen: Vec<usize> = (0..k).collect();
            let wz = window_zones(zones, &pending, &chosen);
            if let (false, Some(next)) = (last, pending.get(k).or(pending.last())) {
                sub.goal = next.cell.interior_cube.clone();
            }
            log::debug!(
                "window {index} from {:?}: cells {:?}",
                state,
                chosen.iter().map(|&i| pending[i].cell.interior_cube.center()).collect::<Vec<_>>()
            );
            let mut model = build_with(&sub, &wz, &build_opts)?;
            if !last {
                // Visits must land in the executed part of the window.
                let layout = model.layout().expect("built models carry a layout").clone();
                for t in executed + 1..=w {
                    for (i, z) in wz.iter().enumerate() {
                        for c in 0..z.len() {
                            model.set_bounds(layout.z_tilde(t, c, i), 0.0, 0.0);
                        }
                    }
                }
            }
            let sol = branch_and_bound(&model, &window_opts);
            stats.nodes += sol.nodes_explored;
            stats.numerical_failures += sol.stats.numerical_failures;
            log::info!(
                "window {index} (steps {t0}..{}): {k} cells, {:?}, {} nodes",
                t0 + w,
                sol.status,
                sol.nodes_explored
            );
            if sol.status.has_solution() {
                break (model, sol);
            }
            if last || k == 0 {
                return Err(SolveError::WindowInfeasible {
                    window: index,
                    first: t0,
                    last: t0 + w,
                    reason: sol.message.unwrap_or_else(|| format!("{:?}", sol.status)),
                });
            }
            k -= 1;
        };
        let traj = sol.trajectory(&model, &state).expect("window model has a layout");
        for t in 0..executed {
            controls.push(traj.controls[t]);
            let p = traj.position(t + 1);
            pending.retain(|c| !c.cell.interior_cube.contains_within(&p, VISIT_TOL));
        }
        state = traj.states[executed];
        previous = controls.last().map(|u| u.force);
        t0 += executed;
        index += 1;
    }

    let trajectory = Trajectory::simulate(&dynamics, scenario.start, controls)
        .map_err(crate::miqp::BuildError::from)?;
    let mut values = vec![0.0; full.num_variables()];
    write_trajectory(&full, &trajectory, &mut values);
    let (lo, hi) = (full.lower_bounds(), full.upper_bounds());
    stats.wall_time_s = start_time.elapsed().as_secs_f64();
    let completed = full.complete_binaries(&values, &lo, &hi, opts.feasibility_tolerance);
    let sol = match completed {
        Some(point) => MipSolution {
            status: MipStatus::FeasibleGap,
            objective: full.objective_value(&point),
            values: point,
            bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes_explored: stats.nodes,
            wall_time_s: stats.wall_time_s,
            message: Some(format!("rolling horizon over {index} windows; no optimality bound")),
            heuristic: true,
            stats,
        },
        None => MipSolution {
            status: MipStatus::LimitHit,
            objective: f64::INFINITY,
            values: Vec::new(),
            bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes_explored: stats.nodes,
            wall_time_s: stats.wall_time_s,
            message: Some(format!(
                "rolling horizon finished with {} cells unvisited or the goal missed",
                pending.len()
            )),
            heuristic: true,
            stats,
        },
    };
    Ok((full, sol))
}

fn write_trajectory(model: &MiqpModel, traj: &Trajectory, values: &mut [f64]) {
    let layout = model.layout().expect("built models carry a layout");
    for t in 1..=layout.horizon {
        let s: &State = &traj.states[t];
        for d in 0..3 {
            values[layout.state(t, d)] = s.position[d];
            values[layout.state(t, d + 3)] = s.velocity[d];
        }
    }
    for t in 0..layout.horizon {
        for d in 0..3 {
            values[layout.control(t, d)] = traj.controls[t].force[d];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cruise_speeds_of_the_reference_agent() {
        let s = cruise_speeds(&AgentParams::reference());
        assert_eq!(s[0], (15.0, 15.0));
        assert_eq!(s[1], (15.0, 15.0));
        let climb = (35.0 - 3.35 * 9.81) / 3.35 / 0.2;
        assert!((s[2].1 - climb).abs() < 1e-12);
        assert_eq!(s[2].0, 15.0);
    }

    #[test]
    fn travel_time_is_set_by_the_slowest_axis() {
        let s = cruise_speeds(&AgentParams::reference());
        let a = Vec3::zeros();
        assert!((travel_time(&s, &a, &Vec3::new(30.0, 0.0, 0.0)) - 2.0).abs() < 1e-12);
        assert!((travel_time(&s, &a, &Vec3::new(30.0, 0.0, -30.0)) - 2.0).abs() < 1e-12);
        assert!(travel_time(&s, &a, &Vec3::new(30.0, 0.0, 30.0)) > 9.0);
    }

    #[test]
    fn tour_is_a_permutation_no_slower_than_listing_order() {
        let s = cruise_speeds(&AgentParams::reference());
        let points: Vec<Vec3> = (0..9)
            .map(|k| Vec3::new(20.0 * ((k * 7) % 9) as f64, 10.0 * (k % 3) as f64, 10.0 * (k % 2) as f64))
            .collect();
        let (start, goal) = (Vec3::new(-50.0, 0.0, 0.0), Vec3::new(200.0, 0.0, 0.0));
        let tour = plan_tour(&s, &start, &goal, &points);
        let mut sorted = tour.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..9).collect::<Vec<_>>());
        let listed: Vec<usize> = (0..9).collect();
        assert!(tour_time(&s, &start, &goal, &points, &tour) <= tour_time(&s, &start, &goal, &points, &listed));
    }
}
