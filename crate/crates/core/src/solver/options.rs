use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptionsError {
    #[error("`{0}` must be positive and finite")]
    NonPositive(&'static str),
    #[error("rolling horizon needs window > overlap, got window {window} and overlap {overlap}")]
    Window { window: usize, overlap: usize },
    #[error("at least one worker is required")]
    Workers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NodeSelection {
    #[default]
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Branching {
    #[default]
    MostFractional,
    FirstFractional,
    /// Occupancy binaries whose cube is closest to the relaxed position
    /// first; most fractional otherwise.
    Proximity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SolveMode {
    #[default]
    Exact,
    RollingHorizon {
        window: usize,
        overlap: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub integer_tolerance: f64,
    pub relative_gap: f64,
    pub absolute_gap: f64,
    pub node_limit: Option<u64>,
    pub time_limit_s: Option<f64>,
    pub node_selection: NodeSelection,
    pub branching: Branching,
    pub mode: SolveMode,
    /// Relaxations solved concurrently per batch.
    pub workers: usize,
    /// Row tolerance used when accepting incumbents.
    pub feasibility_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            integer_tolerance: 1e-6,
            relative_gap: 1e-4,
            absolute_gap: 1e-6,
            node_limit: None,
            time_limit_s: None,
            node_selection: NodeSelection::BestBound,
            branching: Branching::MostFractional,
            mode: SolveMode::Exact,
            workers: 1,
            feasibility_tolerance: 1e-6,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), OptionsError> {
        let positive = |v: f64, what| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(OptionsError::NonPositive(what))
            }
        };
        positive(self.integer_tolerance, "integer_tolerance")?;
        positive(self.relative_gap, "relative_gap")?;
        positive(self.absolute_gap, "absolute_gap")?;
        positive(self.feasibility_tolerance, "feasibility_tolerance")?;
        if let Some(t) = self.time_limit_s {
            positive(t, "time_limit_s")?;
        }
        if let SolveMode::RollingHorizon { window, overlap } = self.mode {
            if window == 0 || window <= overlap {
                return Err(OptionsError::Window { window, overlap });
            }
        }
        if self.workers == 0 {
            return Err(OptionsError::Workers);
        }
        Ok(())
    }
}
