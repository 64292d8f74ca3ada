//! Junction dynamics with the cavity field adiabatically eliminated.
//!
//! The photon amplitude is slaved to the atoms, `ξ̄ = e/|δ̃_C(z, θ)|`, which
//! gives BJJ equations with the effective tunneling
//! `ν̄ = 1 - (w12/N_A)·e²/δ̃_C²`. The reduced flow conserves
//!
//! ```text
//! E_red = N_A [u(1+z²)/4 - sqrt(1-z²) cos θ] + e²/δ̃_C
//! ```
//!
//! which diverges on the `δ̃_C = 0` curve, so no trajectory crosses it.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, project_to_sphere, IntegrateOptions};
use crate::error::{Error, Result};
use crate::fixed_points::{all_fixed_points, separatrix_curve, Label};
use crate::model::{detuning_from_projection, wrap_angle, DimensionlessParams, MeanFieldState};
use crate::ode::{self, Options, StepStats, Tolerances};

pub const DEFAULT_SINGULARITY_FLOOR: f64 = 1e-6;
/// Cells with `|δ̃_C|` below this are clipped in the photon map.
pub const PHOTON_MAP_FLOOR: f64 = 1e-3;

/// Adiabatic photon number `e²/δ̃_C²` and effective tunneling at a point.
fn slaved(params: &DimensionlessParams, sx: f64) -> (f64, f64) {
    let delta = detuning_from_projection(params, sx);
    let photons = if params.e == 0.0 { 0.0 } else { params.e * params.e / (delta * delta) };
    (delta, 1.0 - params.w12 / params.n() * photons)
}

fn reduced_rhs_bloch(params: &DimensionlessParams, y: &[f64; 3]) -> [f64; 3] {
    let [sx, sy, sz] = *y;
    let (_, nu) = slaved(params, sx);
    [-params.u * sz * sy, params.u * sz * sx + 2.0 * nu * sz, -2.0 * nu * sy]
}

fn bare_rhs_bloch(u: f64, y: &[f64; 3]) -> [f64; 3] {
    let [sx, sy, sz] = *y;
    [-u * sz * sy, u * sz * sx + 2.0 * sz, -2.0 * sy]
}

fn to_bloch(z: f64, theta: f64) -> [f64; 3] {
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * theta.cos(), s * theta.sin(), z]
}

fn from_bloch(y: &[f64; 3]) -> (f64, f64) {
    let theta = if y[0] == 0.0 && y[1] == 0.0 { 0.0 } else { wrap_angle(y[1].atan2(y[0])) };
    (y[2].clamp(-1.0, 1.0), theta)
}

fn check_point(params: &DimensionlessParams, z: f64, theta: f64, floor: f64) -> Result<f64> {
    if !(z.is_finite() && theta.is_finite()) {
        return Err(Error::NonFinite("reduced state"));
    }
    if z.abs() > 1.0 {
        return Err(Error::Domain(format!("|z| = {} exceeds 1", z.abs())));
    }
    let delta = detuning_from_projection(params, (1.0 - z * z).sqrt() * theta.cos());
    if params.e != 0.0 && delta.abs() < floor {
        return Err(Error::Singular { z, theta, delta });
    }
    Ok(delta)
}

/// `(dz/dτ, dθ/dτ)` of the reduced model, with the default singularity floor.
pub fn reduced_rhs(params: &DimensionlessParams, z: f64, theta: f64) -> Result<(f64, f64)> {
    reduced_rhs_with_floor(params, z, theta, DEFAULT_SINGULARITY_FLOOR)
}

pub fn reduced_rhs_with_floor(params: &DimensionlessParams, z: f64, theta: f64, floor: f64) -> Result<(f64, f64)> {
    check_point(params, z, theta, floor)?;
    if z.abs() == 1.0 {
        return Err(Error::Domain("polar reduced equations are singular at |z| = 1".into()));
    }
    let s = (1.0 - z * z).sqrt();
    let (_, nu) = slaved(params, s * theta.cos());
    Ok((-2.0 * nu * s * theta.sin(), z * (params.u + 2.0 * nu * theta.cos() / s)))
}

/// Adiabatic photon amplitude `ξ̄ = e/|δ̃_C|` and the matching phase `±π/2`.
pub fn adiabatic_photon(params: &DimensionlessParams, z: f64, theta: f64) -> Result<(f64, f64)> {
    let delta = check_point(params, z, theta, DEFAULT_SINGULARITY_FLOOR)?;
    if params.e == 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((params.e / delta.abs(), if delta > 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 }))
}

/// Conserved quantity of the reduced flow.
pub fn reduced_energy(params: &DimensionlessParams, z: f64, theta: f64) -> f64 {
    let sx = (1.0 - z * z).max(0.0).sqrt() * theta.cos();
    let delta = detuning_from_projection(params, sx);
    let cavity = if params.e == 0.0 { 0.0 } else { params.e * params.e / delta };
    params.n() * (params.u * (1.0 + z * z) / 4.0 - sx) + cavity
}

/// Conserved energy of the bare junction, `Λz²/2 - sqrt(1-z²) cos θ`.
pub fn bare_energy(lambda: f64, z: f64, theta: f64) -> f64 {
    lambda * z * z / 2.0 - (1.0 - z * z).max(0.0).sqrt() * theta.cos()
}

/// Self-trapping criterion of the bare junction (`Λ = u/2`): the imbalance
/// never changes sign iff the conserved energy exceeds 1.
pub fn self_trapped(z0: f64, theta0: f64, lambda: f64) -> bool {
    bare_energy(lambda, z0, theta0) > 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedOptions {
    pub tol: Tolerances,
    pub stride: f64,
    /// Stop when `|δ̃_C|` falls below this value.
    pub floor: f64,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), stride: 0.1, floor: DEFAULT_SINGULARITY_FLOOR }
    }
}

/// Two-dimensional `(z, θ)` trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    /// Wrapped to `(-π, π]`.
    pub theta: Vec<f64>,
    pub detuning: Vec<f64>,
    pub energy: Vec<f64>,
    pub stats: StepStats,
    /// Set when the run was cut short close to the separatrix.
    pub truncated: Option<String>,
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energy_drift(&self) -> f64 {
        dynamics::relative_drift(self.energy.iter().copied(), self.energy[0])
    }
}

fn run_bloch<F>(
    f: F,
    y0: [f64; 3],
    horizon: f64,
    opts: &ReducedOptions,
    mut guard: impl FnMut(&[f64; 3]) -> Option<String>,
) -> Result<(ode::Solution<3>, Option<String>)>
where
    F: FnMut(f64, &[f64; 3]) -> [f64; 3],
{
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    if !(opts.stride > 0.0) {
        return Err(Error::Domain("stride must be positive".into()));
    }
    let grid = ode::uniform_grid(0.0, horizon, opts.stride);
    let sol = ode::integrate(f, 0.0, y0, horizon, &grid, &Options::with_tol(opts.tol), |_, y| {
        project_to_sphere(y);
        guard(y)
    })?;
    let stop = sol.stopped.as_ref().map(|(t, why)| format!("stopped at tau = {t}: {why}"));
    Ok((sol, stop))
}

/// Integrates the reduced model from `(z0, θ0)`.
pub fn integrate_reduced(
    params: &DimensionlessParams,
    z0: f64,
    theta0: f64,
    horizon: f64,
    opts: &ReducedOptions,
) -> Result<ReducedTrajectory> {
    params.validate()?;
    check_point(params, z0, theta0, opts.floor)?;
    let floor = opts.floor;
    let (sol, truncated) = run_bloch(|_, y| reduced_rhs_bloch(params, y), to_bloch(z0, theta0), horizon, opts, |y| {
        let delta = detuning_from_projection(params, y[0]);
        (params.e != 0.0 && delta.abs() < floor)
            .then(|| format!("|delta_c_eff| = {:.3e} below floor (separatrix approach)", delta.abs()))
    })?;
    let mut out = ReducedTrajectory {
        times: Vec::with_capacity(sol.samples.len()),
        z: Vec::with_capacity(sol.samples.len()),
        theta: Vec::with_capacity(sol.samples.len()),
        detuning: Vec::with_capacity(sol.samples.len()),
        energy: Vec::with_capacity(sol.samples.len()),
        stats: sol.stats,
        truncated,
    };
    for (t, y) in &sol.samples {
        let (z, theta) = from_bloch(y);
        out.times.push(*t);
        out.z.push(z);
        out.theta.push(theta);
        out.detuning.push(detuning_from_projection(params, y[0]));
        out.energy.push(reduced_energy(params, z, theta));
    }
    Ok(out)
}

/// Reference integrator of the bare junction (no cavity), interaction `u`.
pub fn pure_bjj(u: f64, z0: f64, theta0: f64, horizon: f64, opts: &ReducedOptions) -> Result<ReducedTrajectory> {
    if z0.abs() > 1.0 || !z0.is_finite() || !theta0.is_finite() || !u.is_finite() {
        return Err(Error::Domain("invalid bare-junction initial point".into()));
    }
    let (sol, _) = run_bloch(|_, y| bare_rhs_bloch(u, y), to_bloch(z0, theta0), horizon, opts, |_| None)?;
    let mut out = ReducedTrajectory {
        times: Vec::new(),
        z: Vec::new(),
        theta: Vec::new(),
        detuning: Vec::new(),
        energy: Vec::new(),
        stats: sol.stats,
        truncated: None,
    };
    for (t, y) in &sol.samples {
        let (z, theta) = from_bloch(y);
        out.times.push(*t);
        out.z.push(z);
        out.theta.push(theta);
        out.detuning.push(f64::NAN);
        out.energy.push(bare_energy(u / 2.0, z, theta));
    }
    Ok(out)
}

/// Portrait grid resolution and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitSpec {
    pub n_theta: usize,
    pub n_z: usize,
    /// Extra `(z, θ)` seeds on top of the 16 default ones.
    pub seeds: Vec<(f64, f64)>,
    pub horizon: f64,
    pub options: ReducedOptions,
}

impl Default for PortraitSpec {
    fn default() -> Self {
        Self { n_theta: 401, n_z: 401, seeds: Vec::new(), horizon: 20.0, options: ReducedOptions::default() }
    }
}

/// 16 seeds: `z ∈ {±0.25, ±0.75}` × `θ ∈ {-π, -π/2, 0, π/2}`.
pub fn default_seeds() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(16);
    for z in [-0.75, -0.25, 0.25, 0.75] {
        for theta in [-PI, -FRAC_PI_2, 0.0, FRAC_PI_2] {
            out.push((z, theta));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitTrajectory {
    pub seed: (f64, f64),
    /// `(θ, z)` points.
    pub points: Vec<(f64, f64)>,
    pub truncated: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitFixedPoint {
    pub label: Label,
    pub theta: f64,
    pub z: f64,
}

/// Photon-number map and overlays for the reduced phase portrait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitGrid {
    pub theta_axis: Vec<f64>,
    pub z_axis: Vec<f64>,
    /// `photon_map[j][i]` at `(θ_i, z_j)`.
    pub photon_map: Vec<Vec<f64>>,
    pub detuning: Vec<Vec<f64>>,
    /// Cells where `|δ̃_C|` fell below the clipping floor.
    pub clipped: Vec<Vec<bool>>,
    pub cap: f64,
    pub trajectories: Vec<PortraitTrajectory>,
    /// `(θ, z)` points of the closed `δ̃_C = 0` curve, empty if absent.
    pub separatrix: Vec<(f64, f64)>,
    pub fixed_points: Vec<PortraitFixedPoint>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

pub fn render_portrait(params: &DimensionlessParams, spec: &PortraitSpec) -> Result<PortraitGrid> {
    params.validate()?;
    if spec.n_theta < 2 || spec.n_z < 2 {
        return Err(Error::Domain("portrait grid needs at least 2x2 cells".into()));
    }
    let theta_axis = linspace(-PI, PI, spec.n_theta);
    let z_axis = linspace(-1.0, 1.0, spec.n_z);
    let e2 = params.e * params.e;
    let cap = e2 / (PHOTON_MAP_FLOOR * PHOTON_MAP_FLOOR);

    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<bool>)> = z_axis
        .par_iter()
        .map(|&z| {
            let s = (1.0 - z * z).max(0.0).sqrt();
            let mut photons = Vec::with_capacity(theta_axis.len());
            let mut detuning = Vec::with_capacity(theta_axis.len());
            let mut clipped = Vec::with_capacity(theta_axis.len());
            for &theta in &theta_axis {
                let delta = detuning_from_projection(params, s * theta.cos());
                let clip = delta.abs() < PHOTON_MAP_FLOOR;
                photons.push(if clip { cap } else { e2 / (delta * delta) });
                detuning.push(delta);
                clipped.push(clip);
            }
            (photons, detuning, clipped)
        })
        .collect();
    let mut photon_map = Vec::with_capacity(rows.len());
    let mut detuning = Vec::with_capacity(rows.len());
    let mut clipped = Vec::with_capacity(rows.len());
    for (p, d, c) in rows {
        photon_map.push(p);
        detuning.push(d);
        clipped.push(c);
    }

    let mut seeds = default_seeds();
    seeds.extend(spec.seeds.iter().copied());
    let trajectories: Vec<PortraitTrajectory> = seeds
        .par_iter()
        .filter_map(|&(z, theta)| match integrate_reduced(params, z, theta, spec.horizon, &spec.options) {
            Ok(tr) => Some(PortraitTrajectory {
                seed: (z, theta),
                points: tr.theta.iter().copied().zip(tr.z.iter().copied()).collect(),
                truncated: tr.truncated,
            }),
            Err(Error::Singular { .. }) => None,
            Err(e) => Some(PortraitTrajectory { seed: (z, theta), points: Vec::new(), truncated: Some(e.to_string()) }),
        })
        .collect();

    let separatrix = if params.w12 != 0.0 { separatrix_curve(params, 720)? } else { Vec::new() };
    let fixed_points = all_fixed_points(params)?
        .into_iter()
        .map(|fp| PortraitFixedPoint { label: fp.label, theta: wrap_angle(fp.state.theta), z: fp.state.z })
        .collect();

    Ok(PortraitGrid { theta_axis, z_axis, photon_map, detuning, clipped, cap, trajectories, separatrix, fixed_points })
}

/// Agreement between the full mean-field flow (adiabatic start) and the
/// reduced model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub times: Vec<f64>,
    pub z_full: Vec<f64>,
    pub theta_full: Vec<f64>,
    pub z_reduced: Vec<f64>,
    pub theta_reduced: Vec<f64>,
    pub max_dz: f64,
    pub max_dtheta: f64,
    pub min_abs_detuning: f64,
    /// `min|δ̃_C| / max ν̃` along the full trajectory.
    pub scale_separation: f64,
    pub adiabatic_valid: bool,
}

/// Minimum `min|δ̃_C| / max ν̃` for the elimination to be trusted.
pub const ADIABATIC_RATIO: f64 = 10.0;

pub fn compare_full_vs_reduced(
    params: &DimensionlessParams,
    z0: f64,
    theta0: f64,
    horizon: f64,
    opts: &ReducedOptions,
) -> Result<Comparison> {
    let reduced = integrate_reduced(params, z0, theta0, horizon, opts)?;
    let (xi0, phi0) = adiabatic_photon(params, z0, theta0)?;
    let full_opts = IntegrateOptions { tol: opts.tol, stride: opts.stride, max_energy_drift: None };
    let full = dynamics::integrate(params, &MeanFieldState::new(z0, theta0, xi0, phi0), horizon, &full_opts)?;

    let n = reduced.len().min(full.len());
    let mut max_dz = 0.0f64;
    let mut max_dtheta = 0.0f64;
    for k in 0..n {
        max_dz = max_dz.max((full.states[k].z - reduced.z[k]).abs());
        max_dtheta = max_dtheta.max(wrap_angle(full.states[k].theta - reduced.theta[k]).abs());
    }
    let min_abs_detuning = full
        .derived
        .iter()
        .map(|d| d.delta_c_eff.abs())
        .chain(reduced.detuning.iter().map(|d| d.abs()))
        .fold(f64::INFINITY, f64::min);
    let max_nu = full.derived.iter().map(|d| d.nu_eff.abs()).fold(1.0f64, f64::max);
    let scale_separation = min_abs_detuning / max_nu;
    Ok(Comparison {
        times: full.times[..n].to_vec(),
        z_full: full.states[..n].iter().map(|s| s.z).collect(),
        theta_full: full.states[..n].iter().map(|s| s.theta).collect(),
        z_reduced: reduced.z[..n].to_vec(),
        theta_reduced: reduced.theta[..n].to_vec(),
        max_dz,
        max_dtheta,
        min_abs_detuning,
        scale_separation,
        adiabatic_valid: scale_separation >= ADIABATIC_RATIO && reduced.truncated.is_none(),
    })
}
