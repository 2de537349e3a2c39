//! Exact branch-and-bound and the rolling-horizon heuristic.

mod bnb;
mod options;
mod qp;
mod rolling;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub use bnb::branch_and_bound;
pub use options::{Branching, NodeSelection, OptionsError, SolveMode, SolveOptions};
pub use qp::{solve_qp_relaxation, QpSolution, QpStatus};
pub use rolling::solve_rolling_horizon;

use crate::dynamics::{ControlInput, State, Trajectory};
use crate::geometry::Vec3;
use crate::miqp::{build, BuildError, MiqpModel};
use crate::scenario::Scenario;
use crate::zoning::Zone;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MipStatus {
    Optimal,
    /// A limit stopped the search (or the plan is heuristic) with an incumbent.
    FeasibleGap,
    Infeasible,
    /// A limit stopped the search before any incumbent was found.
    LimitHit,
}

impl MipStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, MipStatus::Optimal | MipStatus::FeasibleGap)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchStats {
    pub nodes: u64,
    #[serde(serialize_with = "finite_or_null_opt")]
    pub root_bound: Option<f64>,
    /// Largest amount by which a child relaxation fell below its parent's.
    pub max_bound_drop: f64,
    /// `(nodes solved so far, objective)` at every incumbent improvement.
    pub incumbent_history: Vec<(u64, f64)>,
    pub numerical_failures: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MipSolution {
    pub status: MipStatus,
    /// Full variable vector of the model; empty without a solution.
    #[serde(skip)]
    pub values: Vec<f64>,
    #[serde(serialize_with = "finite_or_null")]
    pub objective: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub bound: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub gap: f64,
    pub nodes_explored: u64,
    pub wall_time_s: f64,
    pub message: Option<String>,
    /// True for rolling-horizon plans, which carry no optimality claim.
    pub heuristic: bool,
    #[serde(skip)]
    pub stats: SearchStats,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn finite_or_null_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_finite() => s.serialize_some(x),
        _ => s.serialize_none(),
    }
}

impl MipSolution {
    /// Planned trajectory `x_0..x_T`, read from the model's state and
    /// control blocks.
    pub fn trajectory(&self, model: &MiqpModel, start: &State) -> Option<Trajectory> {
        let layout = model.layout()?;
        if self.values.len() != model.num_variables() {
            return None;
        }
        let x = &self.values;
        let mut states = vec![*start];
        for t in 1..=layout.horizon {
            let s = |d| x[layout.state(t, d)];
            states.push(State::new(Vec3::new(s(0), s(1), s(2)), Vec3::new(s(3), s(4), s(5))));
        }
        let controls = (0..layout.horizon)
            .map(|t| {
                let u = |d| x[layout.control(t, d)];
                ControlInput::new(Vec3::new(u(0), u(1), u(2)))
            })
            .collect();
        Trajectory::new(states, controls).ok()
    }

    /// Model zone indices with `z^ = 1`.
    pub fn selected_zones(&self, model: &MiqpModel) -> Vec<usize> {
        let Some(layout) = model.layout() else {
            return Vec::new();
        };
        if self.values.len() != model.num_variables() {
            return Vec::new();
        }
        (0..layout.num_zones())
            .filter(|&i| self.values[layout.z_hat(i)] > 0.5)
            .collect()
    }

    /// `(name, value)` of every binary set to one.
    pub fn active_binaries(&self, model: &MiqpModel) -> Vec<String> {
        if self.values.len() != model.num_variables() {
            return Vec::new();
        }
        model
            .variables()
            .iter()
            .zip(&self.values)
            .filter(|(v, x)| v.binary && **x > 0.5)
            .map(|(v, _)| v.name.clone())
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("rolling-horizon window {window} (steps {first}..{last}) is infeasible: {reason}")]
    WindowInfeasible {
        window: usize,
        first: usize,
        last: usize,
        reason: String,
    },
}

/// Builds the model for `scenario` and solves it in the configured mode.
pub fn solve_scenario(scenario: &Scenario, zones: &[Zone]) -> Result<(MiqpModel, MipSolution), SolveError> {
    match scenario.solver.mode {
        SolveMode::RollingHorizon { window, .. } if window < scenario.horizon => {
            solve_rolling_horizon(scenario, zones, &scenario.solver)
        }
        _ => {
            let model = build(scenario, zones)?;
            let sol = branch_and_bound(&model, &scenario.solver);
            Ok((model, sol))
        }
    }
}
