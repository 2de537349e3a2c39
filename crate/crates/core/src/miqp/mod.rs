//! The search-planning MIQP: a generic sparse container, the scenario
//! compiler that fills it, and LP text export.

mod builder;
mod layout;
mod lp;
mod model;

pub use builder::{big_m, build, build_with, BuildError, BuildOptions, BIG_M_MARGIN};
pub use layout::{count_binaries, BinaryCounts, CompletionRole, VariableLayout};
pub use lp::{export_lp, CONSTANT_VARIABLE};
pub use model::{Completion, Constraint, MiqpModel, ModelError, Objective, Sense, Variable, Violations};
