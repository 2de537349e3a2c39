//! Command-line front end: `plan`, `verify`, `export-lp`, `zones` and
//! `plot-data`.
//!
//! Exit codes: 0 success, 1 infeasible (or a trajectory that fails
//! `verify`), 2 invalid input, 3 limit hit without a plan, 4 internal error.
//! A plan the verifier rejects is an internal error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::{self, PlanMetadata};
use crate::miqp::{build, export_lp, BuildError};
use crate::scenario::{bundled, load_scenario_with, Overrides, Scenario, ScenarioError};
use crate::solver::{solve_scenario, MipStatus, SolveError, SolveMode};
use crate::verifier::{verify, VerificationReport, VerifyOptions};
use crate::zoning::Zone;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_LIMIT: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "searchplan", version, about = "Plan and verify UAV search trajectories around cuboid structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario, verify the plan and write the artifacts.
    Plan(PlanArgs),
    /// Check a trajectory table against a scenario.
    Verify(VerifyArgs),
    /// Write the scenario's model in LP format.
    ExportLp(ExportArgs),
    /// Write zone, object and obstacle geometry as JSON.
    Zones(ZonesArgs),
    /// Turn a plan directory into per-quantity plot series.
    PlotData(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Rolling,
}

/// Overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default, Args)]
pub struct OverrideArgs {
    /// Detection requirement.
    #[arg(long = "Q", visible_alias = "q")]
    pub q: Option<f64>,
    /// Path-error weight.
    #[arg(long)]
    pub w1: Option<f64>,
    /// Input-fluctuation weight.
    #[arg(long)]
    pub w2: Option<f64>,
    /// Horizon in steps.
    #[arg(long = "T", visible_alias = "horizon")]
    pub horizon: Option<usize>,
    /// First step of the goal window.
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Rolling-horizon window length.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Rolling-horizon overlap.
    #[arg(long, default_value_t = 3)]
    pub overlap: usize,
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Relaxations solved in parallel.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl OverrideArgs {
    pub fn to_overrides(&self) -> Overrides {
        Overrides {
            detection_requirement: self.q,
            weight_time: self.w1,
            weight_energy: self.w2,
            horizon: self.horizon,
            goal_window_start: self.tau,
            node_limit: self.node_limit,
            time_limit_s: self.time_limit,
            mode: self.mode.map(|m| match m {
                ModeArg::Exact => SolveMode::Exact,
                ModeArg::Rolling => SolveMode::RollingHorizon {
                    window: self.window,
                    overlap: self.overlap,
                },
            }),
            workers: self.workers,
        }
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Scenario file, or `bundled:NAME`.
    pub scenario: String,
    /// Output directory.
    #[arg(short, long, default_value = "plan")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub scenario: String,
    pub trajectory: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Coverage raster spacing in metres.
    #[arg(long, default_value_t = crate::verifier::DEFAULT_RESOLUTION)]
    pub resolution: f64,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub scenario: String,
    #[arg(short, long, default_value = "model.lp")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct ZonesArgs {
    pub scenario: String,
    #[arg(short, long, default_value = "zones.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Directory written by `plan`.
    pub dir: PathBuf,
    /// Defaults to `DIR/plot`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

/// Result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub code: u8,
    pub artifacts: Vec<PathBuf>,
    pub message: String,
}

impl CommandOutcome {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            artifacts: Vec::new(),
            message: message.into(),
        }
    }

    fn with(mut self, artifacts: Vec<PathBuf>) -> Self {
        self.artifacts = artifacts;
        self
    }
}

fn invalid(e: &ScenarioError) -> CommandOutcome {
    CommandOutcome::new(EXIT_INVALID, e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CommandOutcome {
    CommandOutcome::new(EXIT_INTERNAL, format!("internal error: {e}"))
}

/// Reads a scenario path, or `bundled:NAME`.
pub fn scenario_text(spec: &str) -> Result<String, CommandOutcome> {
    if let Some(name) = spec.strip_prefix("bundled:") {
        return bundled(name)
            .map(str::to_string)
            .ok_or_else(|| CommandOutcome::new(EXIT_INVALID, format!("no bundled scenario named {name:?}")));
    }
    std::fs::read_to_string(spec).map_err(|e| CommandOutcome::new(EXIT_INVALID, format!("{spec}: {e}")))
}

fn prepare(spec: &str, overrides: &Overrides) -> Result<(Scenario, Vec<Zone>), CommandOutcome> {
    let text = scenario_text(spec)?;
    let scenario = load_scenario_with(&text, overrides).map_err(|e| invalid(&e))?;
    let zones = scenario.build_zones().map_err(|e| invalid(&e))?;
    Ok((scenario, zones))
}

fn build_failure(e: &BuildError) -> CommandOutcome {
    match e {
        BuildError::Dynamics(_) => internal(e),
        _ => CommandOutcome::new(EXIT_INVALID, e.to_string()),
    }
}

pub fn cmd_plan(args: &PlanArgs) -> CommandOutcome {
    let (scenario, zones) = match prepare(&args.scenario, &args.overrides.to_overrides()) {
        Ok(v) => v,
        Err(o) => return o,
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        return internal(e);
    }
    let (model, sol) = match solve_scenario(&scenario, &zones) {
        Ok(v) => v,
        Err(SolveError::Build(e)) => return build_failure(&e),
        Err(e @ SolveError::WindowInfeasible { .. }) => return CommandOutcome::new(EXIT_INFEASIBLE, e.to_string()),
    };
    let meta = PlanMetadata::new(&scenario, &zones, &model, &sol);
    let meta_path = args.out.join("solution.json");
    if let Err(e) = io::write_json(&meta, &meta_path) {
        return internal(e);
    }
    let mut artifacts = vec![meta_path];
    let detail = sol.message.clone().unwrap_or_default();
    match sol.status {
        MipStatus::Infeasible => {
            return CommandOutcome::new(EXIT_INFEASIBLE, format!("infeasible: {detail}")).with(artifacts)
        }
        MipStatus::LimitHit => {
            return CommandOutcome::new(EXIT_LIMIT, format!("no plan found: {detail}")).with(artifacts)
        }
        MipStatus::Optimal | MipStatus::FeasibleGap => {}
    }
    let Some(traj) = sol.trajectory(&model, &scenario.start) else {
        return internal("solution vector does not match the model").with(artifacts);
    };
    let report = verify(&scenario, &zones, &traj, &VerifyOptions::default());
    let report_path = args.out.join("report.json");
    let traj_path = args.out.join(if report.pass { "trajectory.csv" } else { "trajectory.rejected.csv" });
    let written = io::write_json(&report, &report_path).and_then(|_| io::write_trajectory_file(&traj, &traj_path));
    if let Err(e) = written {
        return internal(e).with(artifacts);
    }
    let scene_path = args.out.join("scene.json");
    if let Err(e) = io::write_json(&io::scene_document(&scenario, &zones), &scene_path) {
        return internal(e).with(artifacts);
    }
    artifacts.extend([report_path, traj_path, scene_path]);
    if !report.pass {
        return CommandOutcome::new(
            EXIT_INTERNAL,
            format!("verifier rejected the plan: {}", report.failures.join("; ")),
        )
        .with(artifacts);
    }
    let status = serde_json::to_value(sol.status).map(|v| v.as_str().unwrap_or_default().to_string());
    CommandOutcome::new(
        EXIT_OK,
        format!(
            "{}: objective {:.6}, gap {:.3e}, zones {:?}, goal at step {}",
            status.unwrap_or_default(),
            sol.objective,
            sol.gap,
            meta.selected_zones,
            report.goal_reached_at.map_or("-".into(), |t| t.to_string())
        ),
    )
    .with(artifacts)
}

/// Loads and checks a trajectory file; returns the report.
pub fn verify_file(
    spec: &str,
    trajectory: &Path,
    overrides: &Overrides,
    opts: &VerifyOptions,
) -> Result<VerificationReport, CommandOutcome> {
    let (scenario, zones) = prepare(spec, overrides)?;
    let traj = io::read_trajectory_file(trajectory)
        .map_err(|e| CommandOutcome::new(EXIT_INVALID, format!("{}: {e}", trajectory.display())))?;
    Ok(verify(&scenario, &zones, &traj, opts))
}

pub fn cmd_verify(args: &VerifyArgs) -> CommandOutcome {
    if args.resolution.is_nan() || args.resolution <= 0.0 {
        return CommandOutcome::new(EXIT_INVALID, "resolution must be positive");
    }
    let opts = VerifyOptions {
        resolution: args.resolution,
        ..VerifyOptions::default()
    };
    let report = match verify_file(&args.scenario, &args.trajectory, &args.overrides.to_overrides(), &opts) {
        Ok(r) => r,
        Err(o) => return o,
    };
    let mut artifacts = Vec::new();
    match &args.report {
        Some(path) => {
            if let Err(e) = io::write_json(&report, path) {
                return internal(e);
            }
            artifacts.push(path.clone());
        }
        None => match serde_json::to_string_pretty(&report) {
            Ok(text) => println!("{text}"),
            Err(e) => return internal(e),
        },
    }
    if report.pass {
        CommandOutcome::new(EXIT_OK, "pass").with(artifacts)
    } else {
        CommandOutcome::new(EXIT_INFEASIBLE, format!("fail: {}", report.failures.join("; "))).with(artifacts)
    }
}

pub fn cmd_export_lp(args: &ExportArgs) -> CommandOutcome {
    let (scenario, zones) = match prepare(&args.scenario, &args.overrides.to_overrides()) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let model = match build(&scenario, &zones) {
        Ok(m) => m,
        Err(e) => return build_failure(&e),
    };
    if let Err(e) = std::fs::write(&args.out, export_lp(&model)) {
        return internal(e);
    }
    CommandOutcome::new(
        EXIT_OK,
        format!(
            "{} variables ({} binary), {} rows",
            model.num_variables(),
            model.num_binaries(),
            model.constraints().len()
        ),
    )
    .with(vec![args.out.clone()])
}

pub fn cmd_zones(args: &ZonesArgs) -> CommandOutcome {
    let (scenario, zones) = match prepare(&args.scenario, &Overrides::default()) {
        Ok(v) => v,
        Err(o) => return o,
    };
    if let Err(e) = io::write_json(&io::scene_document(&scenario, &zones), &args.out) {
        return internal(e);
    }
    let sizes: Vec<usize> = zones.iter().map(Zone::len).collect();
    CommandOutcome::new(EXIT_OK, format!("zone sizes {sizes:?}")).with(vec![args.out.clone()])
}

pub fn cmd_plot_data(args: &PlotArgs) -> CommandOutcome {
    let source = args.dir.join("trajectory.csv");
    let traj = match io::read_trajectory_file(&source) {
        Ok(t) => t,
        Err(e) => return CommandOutcome::new(EXIT_INVALID, format!("{}: {e}", source.display())),
    };
    let out = args.out.clone().unwrap_or_else(|| args.dir.join("plot"));
    match io::write_plot_data(&traj, &out) {
        Ok(files) => CommandOutcome::new(EXIT_OK, format!("{} series written", files.len())).with(files),
        Err(e) => internal(e),
    }
}

pub fn run(cli: &Cli) -> CommandOutcome {
    match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Verify(a) => cmd_verify(a),
        Command::ExportLp(a) => cmd_export_lp(a),
        Command::Zones(a) => cmd_zones(a),
        Command::PlotData(a) => cmd_plot_data(a),
    }
}
