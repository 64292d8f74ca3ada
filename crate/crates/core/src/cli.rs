//! Subcommand orchestration behind the `cavity-bjj` binary.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical
//! failure. A numerical failure leaves `diagnostic.json` in the output
//! directory.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConfigError, ParamSource, RunConfig};
use crate::dynamics::{self, IntegrateOptions};
use crate::error::Error;
use crate::fixed_points::{self, FixedPoint, Verification};
use crate::model::{DimensionlessParams, MeanFieldState};
use crate::output::{self, write_atomic};
use crate::quantum;
use crate::reduced::{self, PortraitSpec, ReducedOptions};
use crate::wannier::{self, ParamsReport};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CAVITY_BJJ_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cavity-bjj", version, about = "Bosonic Josephson junction coupled to a driven cavity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Kind {
    Params,
    Simulate,
    FixedPoints,
    Portrait,
    Reduced,
    Quantum,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive the dimensionless parameters (Wannier pipeline report).
    Params(RunArgs),
    /// Integrate the full mean-field equations and write the trajectory.
    Simulate(RunArgs),
    /// Locate, verify and classify the stationary points.
    FixedPoints(RunArgs),
    /// Reduced-model phase portrait (SVG plus grid CSV).
    Portrait(RunArgs),
    /// Reduced trajectory and comparison with the full model.
    Reduced(RunArgs),
    /// Small-N quantum evolution against the mean-field trajectory.
    Quantum(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Configuration file.
    pub config: PathBuf,
    /// Output directory (overrides the `output` key).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sampling stride in units of ħ/J.
    #[arg(long)]
    pub stride: Option<f64>,
    /// Integration horizon in units of ħ/J.
    #[arg(long)]
    pub horizon: Option<f64>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Params(_) => "params",
            Command::Simulate(_) => "simulate",
            Command::FixedPoints(_) => "fixed-points",
            Command::Portrait(_) => "portrait",
            Command::Reduced(_) => "reduced",
            Command::Quantum(_) => "quantum",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Params(a)
            | Command::Simulate(a)
            | Command::FixedPoints(a)
            | Command::Portrait(a)
            | Command::Reduced(a)
            | Command::Quantum(a) => a,
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Usage(String),
    Numerical(Error),
    Io(PathBuf, std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Usage(m) => write!(f, "{m}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(p, e) => write!(f, "cannot write {}: {e}", p.display()),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 1,
            RunError::Numerical(_) | RunError::Io(..) => 2,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numerical(e)
    }
}

fn usage(msg: impl Into<String>) -> RunError {
    RunError::Usage(msg.into())
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let path = dir.join(name);
    write_atomic(&path, contents.as_bytes()).map_err(|e| RunError::Io(path.clone(), e))?;
    written.push(path);
    Ok(())
}

/// Command-line overrides applied on top of the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub stride: Option<f64>,
    pub horizon: Option<f64>,
}

fn check_overrides(o: &Overrides) -> Result<(), RunError> {
    for (name, v) in [("--stride", o.stride), ("--horizon", o.horizon)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("{name} must be a positive number, got {v}")));
            }
        }
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(RunError::Config)
}

/// Resolves the dimensionless parameters, running the Wannier pipeline for a
/// derived source.
pub fn resolve_params(cfg: &RunConfig) -> Result<(DimensionlessParams, Option<ParamsReport>), RunError> {
    match &cfg.source {
        ParamSource::Direct(p) => Ok((*p, None)),
        ParamSource::Derived(d) => {
            let (report, _) = wannier::derive_params(&d.well, &d.cavity, d.g_gg, d.n_atoms, d.xi_sq_max)?;
            Ok((report.dimensionless, Some(report)))
        }
    }
}

fn initial(cfg: &RunConfig, sub: &str) -> Result<MeanFieldState, RunError> {
    cfg.initial.ok_or_else(|| usage(format!("{sub} needs an [initial] section")))
}

#[derive(Serialize)]
struct DirectParamsReport<'a> {
    source: &'static str,
    params: &'a DimensionlessParams,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct FixedPointsReport {
    params: DimensionlessParams,
    fixed_points: Vec<FixedPointEntry>,
    /// Zero-imbalance candidates with a negative photon amplitude.
    rejected: Vec<String>,
}

#[derive(Serialize)]
struct FixedPointEntry {
    #[serde(flatten)]
    point: FixedPoint,
    accepted: bool,
    near_separatrix: bool,
    detuning: f64,
}

#[derive(Serialize)]
struct ReducedSummary<'a> {
    params: DimensionlessParams,
    z0: f64,
    theta0: f64,
    horizon: f64,
    truncated: &'a Option<String>,
    energy_drift: f64,
    comparison: Option<ComparisonSummary>,
    comparison_error: Option<String>,
}

#[derive(Serialize)]
struct ComparisonSummary {
    max_dz: f64,
    max_dtheta: f64,
    min_abs_detuning: f64,
    scale_separation: f64,
    adiabatic_valid: bool,
}

#[derive(Serialize)]
struct QuantumSummary {
    n_atoms: u64,
    photon_cutoff: usize,
    breakdown_time: Option<f64>,
    max_dz: f64,
    norm_drift: f64,
    energy_drift: f64,
    meanfield_energy_drift: f64,
}

/// Runs one subcommand and returns the written files.
pub fn run(command: &Command, cfg: &RunConfig, out_dir: &Path, o: Overrides) -> Result<Vec<PathBuf>, RunError> {
    check_overrides(&o)?;
    let mut written = Vec::new();
    let (params, report) = resolve_params(cfg)?;
    match command {
        Command::Params(_) => {
            let text = match &report {
                Some(r) => output::json(r),
                None => output::json(&DirectParamsReport { source: "direct", params: &params, warnings: params.warnings() }),
            };
            write(out_dir, "params.json", &text, &mut written)?;
        }
        Command::Simulate(_) => {
            let init = initial(cfg, "simulate")?;
            let opts = IntegrateOptions {
                tol: cfg.tolerances,
                stride: o.stride.unwrap_or(cfg.simulate.stride),
                max_energy_drift: cfg.simulate.max_energy_drift,
            };
            let horizon = o.horizon.unwrap_or(cfg.simulate.horizon);
            let traj = dynamics::integrate(&params, &init, horizon, &opts)?;
            write(out_dir, "trajectory.csv", &output::trajectory_csv(&traj), &mut written)?;
            #[derive(Serialize)]
            struct Meta<'a> {
                meta: &'a dynamics::TrajectoryMeta,
                summary: dynamics::TrajectorySummary,
            }
            let summary = dynamics::trajectory_summary(&traj)?;
            write(out_dir, "trajectory_meta.json", &output::json(&Meta { meta: &traj.meta, summary }), &mut written)?;
        }
        Command::FixedPoints(_) => {
            let points = fixed_points::all_fixed_points(&params)?;
            let checks = fixed_points::verify_fixed_points(&params, &points)?;
            let rejected = [fixed_points::Label::X2, fixed_points::Label::X3]
                .into_iter()
                .filter(|l| fixed_points::zero_imbalance_candidate_xi(&params, *l).is_some_and(|xi| xi < 0.0))
                .map(|l| format!("{l:?}"))
                .collect();
            let fixed_points = points
                .into_iter()
                .zip(checks)
                .map(|(point, v): (FixedPoint, Verification)| FixedPointEntry { point, accepted: v.accepted, near_separatrix: v.near_separatrix, detuning: v.detuning })
                .collect();
            let rep = FixedPointsReport { params, fixed_points, rejected };
            write(out_dir, "fixed_points.json", &output::json(&rep), &mut written)?;
        }
        Command::Portrait(_) => {
            let p = &cfg.portrait;
            let spec = PortraitSpec {
                n_theta: p.n_theta,
                n_z: p.n_z,
                seeds: p.seeds.clone(),
                horizon: o.horizon.unwrap_or(p.horizon),
                options: ReducedOptions { tol: cfg.tolerances, stride: o.stride.unwrap_or(p.stride), ..Default::default() },
            };
            let grid = reduced::render_portrait(&params, &spec)?;
            write(out_dir, "portrait.svg", &output::portrait_svg(&grid), &mut written)?;
            write(out_dir, "portrait_grid.csv", &output::portrait_grid_csv(&grid), &mut written)?;
        }
        Command::Reduced(_) => {
            let init = initial(cfg, "reduced")?;
            let r = &cfg.reduced;
            let opts = ReducedOptions { tol: cfg.tolerances, stride: o.stride.unwrap_or(r.stride), floor: r.floor };
            let horizon = o.horizon.unwrap_or(r.horizon);
            let traj = reduced::integrate_reduced(&params, init.z, init.theta, horizon, &opts)?;
            let rows = (0..traj.len()).map(|k| [traj.times[k], traj.z[k], traj.theta[k], traj.detuning[k], traj.energy[k]]);
            write(out_dir, "reduced.csv", &output::csv(&["tau", "z", "theta", "delta_c_eff", "energy"], rows), &mut written)?;
            let (comparison, comparison_error) = match reduced::compare_full_vs_reduced(&params, init.z, init.theta, horizon, &opts) {
                Ok(c) => {
                    let rows = (0..c.times.len()).map(|k| [c.times[k], c.z_full[k], c.theta_full[k], c.z_reduced[k], c.theta_reduced[k]]);
                    write(
                        out_dir,
                        "comparison.csv",
                        &output::csv(&["tau", "z_full", "theta_full", "z_reduced", "theta_reduced"], rows),
                        &mut written,
                    )?;
                    let s = ComparisonSummary {
                        max_dz: c.max_dz,
                        max_dtheta: c.max_dtheta,
                        min_abs_detuning: c.min_abs_detuning,
                        scale_separation: c.scale_separation,
                        adiabatic_valid: c.adiabatic_valid,
                    };
                    (Some(s), None)
                }
                Err(e) => (None, Some(e.to_string())),
            };
            let summary = ReducedSummary {
                params,
                z0: init.z,
                theta0: init.theta,
                horizon,
                truncated: &traj.truncated,
                energy_drift: traj.energy_drift(),
                comparison,
                comparison_error,
            };
            write(out_dir, "reduced.json", &output::json(&summary), &mut written)?;
        }
        Command::Quantum(_) => {
            let init = initial(cfg, "quantum")?;
            let q = cfg.quantum.as_ref().ok_or_else(|| usage("quantum needs a [quantum] section"))?;
            let horizon = o.horizon.unwrap_or(q.horizon);
            let stride = o.stride.unwrap_or(q.stride);
            let cutoff = match q.cutoff {
                Some(c) => c,
                None => {
                    let small = DimensionlessParams { n_atoms: q.n_atoms, ..params };
                    let opts = IntegrateOptions { tol: cfg.tolerances, stride, max_energy_drift: None };
                    let traj = dynamics::integrate(&small, &init, horizon, &opts)?;
                    let xi_max = traj.states.iter().map(|s| s.xi).fold(init.xi, f64::max);
                    quantum::default_cutoff(xi_max)
                }
            };
            let dev = quantum::compare_meanfield(&params, &init, q.n_atoms, cutoff, horizon, stride, cfg.tolerances)?;
            let rows = dev.samples.iter().map(|s| {
                [s.tau, s.z_quantum, s.z_meanfield, s.photons_quantum, s.photons_meanfield, s.dz, s.dphotons]
            });
            let header = ["tau", "z_quantum", "z_meanfield", "photons_quantum", "photons_meanfield", "dz", "dphotons"];
            write(out_dir, "quantum.csv", &output::csv(&header, rows), &mut written)?;
            let summary = QuantumSummary {
                n_atoms: dev.n_atoms,
                photon_cutoff: dev.photon_cutoff,
                breakdown_time: dev.breakdown_time,
                max_dz: dev.max_dz,
                norm_drift: dev.norm_drift,
                energy_drift: dev.energy_drift,
                meanfield_energy_drift: dev.meanfield_energy_drift,
            };
            write(out_dir, "quantum.json", &output::json(&summary), &mut written)?;
        }
    }
    Ok(written)
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    subcommand: &'a str,
    config: String,
    error: String,
}

/// Configures the global thread pool from [`THREADS_ENV`].
pub fn configure_threads() -> Result<(), RunError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a second initialization (e.g. in tests) keeps the existing pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Full entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("{e}");
        return e.exit_code();
    }
    let args = cli.command.args();
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{}: {e}", args.config.display());
            if !matches!(e, RunError::Config(_)) {
                eprintln!();
            }
            return e.exit_code();
        }
    };
    let out_dir = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let overrides = Overrides { stride: args.stride, horizon: args.horizon };
    match run(&cli.command, &cfg, &out_dir, overrides) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{e}");
            if e.exit_code() == 2 {
                let diag = Diagnostic { subcommand: cli.command.name(), config: args.config.display().to_string(), error: e.to_string() };
                let path = out_dir.join("diagnostic.json");
                match write_atomic(&path, output::json(&diag).as_bytes()) {
                    Ok(()) => eprintln!("diagnostic written to {}", path.display()),
                    Err(io) => eprintln!("could not write {}: {io}", path.display()),
                }
            }
            e.exit_code()
        }
    }
}
