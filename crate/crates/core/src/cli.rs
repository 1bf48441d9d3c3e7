//! Thin command-line front end.
//!
//! Four subcommands cover the library surface: `verify` runs the identity
//! suite, `geodesic` integrates a spray across a tower of lifts, `flow`
//! integrates one vector field (optionally cross-checking the dual-number
//! flow map against the lifted flow), and `loop` runs a closed curve of
//! geodesics sample by sample. Every run is described by one TOML config;
//! a few flags override it. Exit codes: 0 success, 1 a run that started but
//! failed (integration breakdown, deviation over tolerance), 2 a rejected
//! configuration.

use std::f64::consts::TAU;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ObjectKind, RunConfig};
use crate::element::TangentElement;
use crate::error::{Error, Result};
use crate::flow::{flow_map_tangent, integrate_field, lifetime_probe};
use crate::loop_space::{loop_geodesic, loop_lift_commutes, LoopPoint};
use crate::metric::rel_dev;
use crate::report::{loop_trajectory_csv, threading_csv, trajectory_csv, write_text};
use crate::tower::{tower_geodesic, LiftTower, TowerState};
use crate::verify::{run_verification, VerifyObject, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "ttower", version, about = "Iterated tangent bundle workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the identity suite against the configured object.
    Verify(CommonArgs),
    /// Integrate spray geodesics across a tower of complete lifts.
    Geodesic(CommonArgs),
    /// Integrate the configured vector field's flow.
    Flow(FlowArgs),
    /// Integrate a closed loop of geodesics sample by sample.
    Loop(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the tower depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Override the sampling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the structural tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also compare the dual-number flow map with the lifted field's flow.
    #[arg(long)]
    pub check_conjugation: bool,
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse(_)
        | Error::FlowSpec(_)
        | Error::Dimension { .. }
        | Error::OrderTooLow { .. }
        | Error::BudgetExceeded { .. } => 2,
        Error::Eval(_)
        | Error::PartialTrajectory { .. }
        | Error::Structural { .. }
        | Error::Io(_) => 1,
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Geodesic(args) => cmd_geodesic(args),
        Command::Flow(args) => cmd_flow(args),
        Command::Loop(args) => cmd_loop(args),
    }
}

fn load(args: &CommonArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    config.apply_overrides(args.depth, args.seed, args.out.clone(), args.tol);
    Ok(config)
}

fn out_dir(config: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&config.output.dir)?;
    Ok(&config.output.dir)
}

fn object_label(config: &RunConfig) -> String {
    match (&config.object.name, config.object.kind) {
        (Some(name), _) => name.clone(),
        (None, ObjectKind::Field) => "custom field".into(),
        (None, _) => "custom spray".into(),
    }
}

fn verify_options(config: &RunConfig) -> VerifyOptions {
    VerifyOptions {
        depth: config.object.depth,
        samples: config.run.samples,
        seed: config.run.seed,
        tol_structural: config.tolerances.structural,
        tol_conjugation: config.tolerances.conjugation,
        tol_homogeneity: config.tolerances.homogeneity,
        tol_fd: config.tolerances.fd,
    }
}

fn cmd_verify(args: &CommonArgs) -> Result<i32> {
    let config = load(args)?;
    let object = match config.object.kind {
        ObjectKind::Field => VerifyObject::Field(config.build_field()?),
        _ => VerifyObject::Spray(config.build_spray()?),
    };
    let report = run_verification(&object, &object_label(&config), &verify_options(&config))?;
    for c in &report.checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        let kind = if c.must_fail { "gap >=" } else { "tol" };
        println!("{status} {} (deviation {:.3e}, {kind} {:.3e})", c.name, c.deviation, c.tol);
    }
    let dir = out_dir(&config)?;
    let path = dir.join("verify_report.json");
    report.write_json(&path)?;
    println!(
        "{} of {} checks passed; report: {}",
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len(),
        path.display()
    );
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_geodesic(args: &CommonArgs) -> Result<i32> {
    let config = load(args)?;
    let spray = config.build_spray()?;
    let spec = config.flow_spec()?;
    let depth = config.object.depth;
    let n = spray.base_dim();
    let base_order = spray.level() - 1;
    let pos = TangentElement::new(base_order, n, config.position()?.to_vec())?;
    let vel = TangentElement::new(base_order, n, config.velocity()?.to_vec())?;
    let tower = LiftTower::from_spray(&spray, depth)?;
    let positions = TowerState::thread(&pos, depth, config.fill())?;
    let velocities = TowerState::thread(&vel, depth, config.fill())?;
    let run = tower_geodesic(&tower, &positions, &velocities, &spec, config.tolerances.structural)?;

    let dir = out_dir(&config)?;
    for (i, traj) in run.trajectories.iter().enumerate() {
        let path = dir.join(format!("geodesic_level{i}.csv"));
        write_text(&path, &trajectory_csv(traj, config.output.thin))?;
    }
    write_text(&dir.join("threading.csv"), &threading_csv(&run)?)?;
    if config.output.write_json {
        let summary = serde_json::json!({
            "kind": "geodesic_tower",
            "object": object_label(&config),
            "depth": depth,
            "steps": run.trajectories[0].len() - 1,
            "dt": run.trajectories[0].dt(),
            "threading": run.threading,
        });
        write_text(
            &dir.join("geodesic_report.json"),
            &serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
    }
    println!(
        "integrated levels 0..={} over {} steps; threading max deviation {:.3e}",
        depth,
        run.trajectories[0].len() - 1,
        run.threading.max_deviation
    );
    Ok(if run.threading.passed { 0 } else { 1 })
}

fn cmd_flow(args: &FlowArgs) -> Result<i32> {
    let config = load(&args.common)?;
    let field = config.build_field()?;
    let spec = config.flow_spec()?;
    let xi0 = TangentElement::new(field.level(), field.base_dim(), config.state()?.to_vec())?;
    let traj = integrate_field(&field, &xi0, &spec)?;
    let lifetime = lifetime_probe(&field, &xi0, &spec)?;

    let mut conjugation: Option<f64> = None;
    if args.check_conjugation || config.run.check_conjugation {
        let fiber = match &config.initial.velocity {
            Some(v) => v.clone(),
            None => vec![1.0; xi0.coords().len()],
        };
        let seeded = xi0.with_fiber(&fiber)?;
        let via_dual = flow_map_tangent(&field, &seeded, &spec)?;
        let via_lift = integrate_field(&field.complete_lift()?, &seeded, &spec)?;
        conjugation = Some(rel_dev(via_dual.coords(), via_lift.final_state().coords()));
    }

    let dir = out_dir(&config)?;
    write_text(&dir.join("flow.csv"), &trajectory_csv(&traj, config.output.thin))?;
    if config.output.write_json {
        let summary = serde_json::json!({
            "kind": "flow",
            "object": object_label(&config),
            "steps": traj.len() - 1,
            "dt": traj.dt(),
            "final_state": traj.final_state().coords(),
            "lifetime_probe": lifetime,
            "conjugation_deviation": conjugation,
            "conjugation_tol": config.tolerances.conjugation,
        });
        write_text(
            &dir.join("flow_report.json"),
            &serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
    }
    println!(
        "integrated {} steps to t = {}; lifetime probe {}",
        traj.len() - 1,
        traj.times().last().expect("nonempty trajectory"),
        lifetime
    );
    if let Some(dev) = conjugation {
        let ok = dev <= config.tolerances.conjugation;
        println!(
            "{} conjugation (deviation {dev:.3e}, tol {:.3e})",
            if ok { "pass" } else { "FAIL" },
            config.tolerances.conjugation
        );
        if !ok {
            return Ok(1);
        }
    }
    Ok(0)
}

/// A closed ring of base points around `center`, phase-shifted per
/// coordinate so the curve is not axis-aligned.
fn ring_loop(center: &[f64], n_samples: usize, base_dim: usize) -> Result<LoopPoint> {
    let radius = 0.25;
    let mut samples = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let angle = TAU * s as f64 / n_samples as f64;
        let coords: Vec<f64> = center
            .iter()
            .enumerate()
            .map(|(j, c)| c + radius * (angle + TAU * j as f64 / base_dim as f64).cos())
            .collect();
        samples.push(TangentElement::new(0, base_dim, coords)?);
    }
    LoopPoint::new(samples)
}

fn constant_loop(value: &[f64], n_samples: usize, base_dim: usize) -> Result<LoopPoint> {
    let samples = (0..n_samples)
        .map(|_| TangentElement::new(0, base_dim, value.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    LoopPoint::new(samples)
}

fn cmd_loop(args: &CommonArgs) -> Result<i32> {
    let config = load(args)?;
    let spray = config.build_spray()?;
    if spray.level() != 1 {
        return Err(Error::Config("loop runs start from a base-level spray".into()));
    }
    let spec = config.flow_spec()?;
    let n = spray.base_dim();
    let n_samples = config.loop_cfg.n_samples;
    let c0 = ring_loop(config.position()?, n_samples, n)?;
    let v0 = constant_loop(config.velocity()?, n_samples, n)?;
    let traj = loop_geodesic(&spray, &c0, &v0, &spec)?;

    let probe = LoopPoint::random(n_samples, spray.level() + 1, n, config.loop_cfg.seed)?;
    let commutation = loop_lift_commutes(&spray, &probe, config.tolerances.structural)?;

    let dir = out_dir(&config)?;
    write_text(&dir.join("loop.csv"), &loop_trajectory_csv(&traj, config.output.thin))?;
    if config.output.write_json {
        let summary = serde_json::json!({
            "kind": "loop",
            "object": object_label(&config),
            "n_samples": n_samples,
            "steps": traj.len() - 1,
            "dt": traj.dt(),
            "lift_commutation": commutation,
        });
        write_text(
            &dir.join("loop_report.json"),
            &serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
    }
    println!(
        "integrated {n_samples} samples over {} steps; lift commutation deviation {:.3e}",
        traj.len() - 1,
        commutation.max_deviation
    );
    Ok(if commutation.passed { 0 } else { 1 })
}
