//! Search-trajectory planning for a single UAV around cuboid structures.
//!
//! The pipeline runs scenario → zones → MIQP → branch-and-bound → verifier:
//!
//! * [`scenario`] loads and validates a TOML mission description.
//! * [`zoning`] discretizes the space around each object of interest into
//!   zones of search cells, each with an interior waypoint cube.
//! * [`miqp`] compiles dynamics, search, avoidance and goal requirements into
//!   a mixed-integer quadratic program.
//! * [`solver`] solves it by branch-and-bound over QP relaxations, or by a
//!   rolling-horizon heuristic.
//! * [`verifier`] re-checks any trajectory against geometry and dynamics only.
//! * [`io`] writes trajectories, reports and zone geometry.
//! * [`cli`] wires the pipeline into the `searchplan` command.

pub mod cli;
pub mod dynamics;
pub mod geometry;
pub mod io;
pub mod miqp;
pub mod scenario;
pub mod sensing;
pub mod solver;
pub mod verifier;
pub mod zoning;
