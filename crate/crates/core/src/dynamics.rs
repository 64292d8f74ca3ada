//! Mean-field equations of motion and their adaptive integration.
//!
//! The flow is evaluated in regular coordinates (Bloch vector plus complex
//! cavity amplitude):
//!
//! ```text
//! dS/dτ = (-u S_z S_y, u S_z S_x + 2ν̃ S_z, -2ν̃ S_y)
//! dα/dτ = i δ̃_C α + e
//! ```
//!
//! which is equivalent to the polar equations for `(z, θ, ξ, φ)` but has no
//! singularity at `ξ = 0` or `|z| = 1`.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    detuning_from_projection, energy_internal, polar_unchecked, to_internal, DerivedQuantities, DimensionlessParams,
    InternalState, MeanFieldState,
};
use crate::ode::{self, Options, StepStats, Tolerances};

/// Right-hand side in internal coordinates `[S_x, S_y, S_z, Re α, Im α]`.
pub fn rhs_internal(params: &DimensionlessParams, y: &[f64; 5]) -> [f64; 5] {
    let [sx, sy, sz, ar, ai] = *y;
    let nu = 1.0 - params.w12 / params.n() * (ar * ar + ai * ai);
    let delta = detuning_from_projection(params, sx);
    [
        -params.u * sz * sy,
        params.u * sz * sx + 2.0 * nu * sz,
        -2.0 * nu * sy,
        -delta * ai + params.e,
        delta * ar,
    ]
}

/// Time derivative of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    /// Derivative of `[S_x, S_y, S_z, Re α, Im α]`.
    pub internal: [f64; 5],
    /// `(dz, dθ, dξ, dφ)/dτ` where the polar form is regular (`ξ > 0`, `|z| < 1`).
    pub polar: Option<[f64; 4]>,
}

impl StateDerivative {
    pub fn norm(&self) -> f64 {
        self.internal.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn rhs(params: &DimensionlessParams, state: &MeanFieldState) -> Result<StateDerivative> {
    let internal = to_internal(state)?;
    let d = rhs_internal(params, &internal.to_array());
    let polar = (state.xi > 0.0 && state.z.abs() < 1.0).then(|| polar_rhs_unchecked(params, state));
    Ok(StateDerivative { internal: d, polar })
}

/// The polar equations as written for `(z, θ, ξ, φ)`.
pub fn polar_rhs(params: &DimensionlessParams, state: &MeanFieldState) -> Result<[f64; 4]> {
    state.validate()?;
    if state.xi == 0.0 || state.z.abs() == 1.0 {
        return Err(Error::Domain("polar equations are singular at xi = 0 or |z| = 1".into()));
    }
    Ok(polar_rhs_unchecked(params, state))
}

fn polar_rhs_unchecked(params: &DimensionlessParams, st: &MeanFieldState) -> [f64; 4] {
    let s = st.overlap();
    let nu = 1.0 - params.w12 / params.n() * st.xi * st.xi;
    let delta = detuning_from_projection(params, s * st.theta.cos());
    [
        -2.0 * nu * s * st.theta.sin(),
        (params.u + 2.0 * nu * st.theta.cos() / s) * st.z,
        params.e * st.phi.cos(),
        delta - params.e / st.xi * st.phi.sin(),
    ]
}

/// Integration settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub tol: Tolerances,
    /// Output sampling stride in `ħ/J`.
    pub stride: f64,
    /// Reject the run if the relative energy drift exceeds this bound.
    pub max_energy_drift: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), stride: 0.1, max_energy_drift: Some(1e-6) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub params: DimensionlessParams,
    pub initial: MeanFieldState,
    pub options: IntegrateOptions,
    pub stats: StepStats,
    /// `max |E(τ) - E(0)| / max(|E(0)|, 1)` over the samples.
    pub energy_drift: f64,
    /// `max | |S(τ)| - 1 |` over the samples.
    pub bloch_norm_error: f64,
}

/// Uniformly sampled mean-field trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    pub derived: Vec<DerivedQuantities>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&MeanFieldState> {
        self.states.last()
    }
}

pub(crate) fn relative_drift(energies: impl Iterator<Item = f64>, e0: f64) -> f64 {
    let scale = e0.abs().max(1.0);
    energies.fold(0.0f64, |m, e| m.max((e - e0).abs())) / scale
}

/// Rescales the Bloch part of an internal state to unit length.
pub(crate) fn project_to_sphere<const N: usize>(y: &mut [f64; N]) {
    let norm = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    if norm > 0.0 && norm != 1.0 {
        for v in y.iter_mut().take(3) {
            *v /= norm;
        }
    }
}

/// Propagates an internal state from `t0` to `t1` (either direction) and
/// returns the final internal state.
pub fn propagate(params: &DimensionlessParams, y0: [f64; 5], t0: f64, t1: f64, tol: Tolerances) -> Result<[f64; 5]> {
    let sol = ode::integrate(|_, y| rhs_internal(params, y), t0, y0, t1, &[], &Options::with_tol(tol), |_, y| {
        project_to_sphere(y);
        None
    })?;
    Ok(sol.final_state)
}

/// Integrates the full mean-field equations over `[0, horizon]`.
pub fn integrate(
    params: &DimensionlessParams,
    initial: &MeanFieldState,
    horizon: f64,
    options: &IntegrateOptions,
) -> Result<Trajectory> {
    params.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    if !(options.stride > 0.0) {
        return Err(Error::Domain("stride must be positive".into()));
    }
    let y0 = to_internal(initial)?.to_array();
    let grid = ode::uniform_grid(0.0, horizon, options.stride);
    let mut last = (0.0, y0);
    let result = ode::integrate(
        |_, y| rhs_internal(params, y),
        0.0,
        y0,
        horizon,
        &grid,
        &Options::with_tol(options.tol),
        |t, y| {
            project_to_sphere(y);
            last = (t, *y);
            None
        },
    );
    let sol = match result {
        Ok(sol) => sol,
        Err(Error::StepUnderflow { t, h, .. }) => {
            let st = polar_unchecked(&InternalState::from_array(&last.1));
            let delta = detuning_from_projection(params, last.1[0]);
            return Err(Error::StepUnderflow {
                t,
                h,
                detail: format!(
                    " near z = {:.6}, theta = {:.6}, xi = {:.6}, phi = {:.6}, delta_c_eff = {:.3e}",
                    st.z, st.theta, st.xi, st.phi, delta
                ),
            });
        }
        Err(e) => return Err(e),
    };

    let mut times = Vec::with_capacity(sol.samples.len());
    let mut states = Vec::with_capacity(sol.samples.len());
    let mut derived = Vec::with_capacity(sol.samples.len());
    let mut norm_err = 0.0f64;
    for (t, y) in &sol.samples {
        let internal = InternalState::from_array(y);
        norm_err = norm_err.max((internal.bloch_norm() - 1.0).abs());
        let st = polar_unchecked(&internal);
        let mut d = DerivedQuantities::evaluate(params, &st);
        d.energy = energy_internal(params, y[0], y[2], Complex64::new(y[3], y[4]));
        d.delta_c_eff = detuning_from_projection(params, y[0]);
        times.push(*t);
        states.push(st);
        derived.push(d);
    }
    let e0 = derived[0].energy;
    let drift = relative_drift(derived.iter().map(|d| d.energy), e0);
    if let Some(bound) = options.max_energy_drift {
        if drift > bound {
            return Err(Error::EnergyDrift { drift, bound });
        }
    }
    Ok(Trajectory {
        times,
        states,
        derived,
        meta: TrajectoryMeta {
            params: *params,
            initial: *initial,
            options: *options,
            stats: sol.stats,
            energy_drift: drift,
            bloch_norm_error: norm_err,
        },
    })
}

/// Local stability class of a stationary state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityClass {
    /// All eigenvalues (numerically) imaginary and non-zero.
    CenterLike,
    /// At least one eigenvalue with a positive real part.
    SaddleLike,
    /// Zero eigenvalues present; linearization inconclusive.
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Eigenvalues `(re, im)` of the linearized flow, sorted by real part.
    pub eigenvalues: Vec<(f64, f64)>,
    pub classification: StabilityClass,
    /// Largest `|λ_i + λ_j|` over the best ± pairing.
    pub pairing_error: f64,
}

/// Chart `(z, θ, Re α, Im α)`, regular away from `|z| = 1`.
fn chart_rhs(params: &DimensionlessParams, x: &[f64; 4]) -> [f64; 4] {
    let [z, theta, ar, ai] = *x;
    let s = (1.0 - z * z).sqrt();
    let sx = s * theta.cos();
    let y = [sx, s * theta.sin(), z, ar, ai];
    let d = rhs_internal(params, &y);
    let nu = 1.0 - params.w12 / params.n() * (ar * ar + ai * ai);
    [d[2], z * (params.u + 2.0 * nu * theta.cos() / s), d[3], d[4]]
}

const JACOBIAN_STEP: f64 = 1e-6;

/// Linear stability of a stationary state by a central-difference Jacobian.
pub fn classify_stability(params: &DimensionlessParams, candidate: &MeanFieldState) -> Result<StabilityReport> {
    let d = rhs(params, candidate)?;
    let residual = d.norm();
    if residual >= 1e-8 {
        return Err(Error::NotStationary { residual });
    }
    if candidate.z.abs() >= 1.0 - 1e-6 {
        return Err(Error::Domain("stability chart is singular at |z| = 1".into()));
    }
    let alpha = Complex64::from_polar(candidate.xi, candidate.phi);
    let x0 = [candidate.z, candidate.theta, alpha.re, alpha.im];
    let mut jac = Matrix4::<f64>::zeros();
    for j in 0..4 {
        let mut xp = x0;
        let mut xm = x0;
        xp[j] += JACOBIAN_STEP;
        xm[j] -= JACOBIAN_STEP;
        let fp = chart_rhs(params, &xp);
        let fm = chart_rhs(params, &xm);
        for i in 0..4 {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    let mut eig: Vec<(f64, f64)> = jac.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect();
    eig.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let scale = eig.iter().map(|(r, i)| r.hypot(*i)).fold(1.0f64, f64::max);
    let threshold = 1e-5 * scale;
    let classification = if eig.iter().any(|(r, _)| *r > threshold) {
        StabilityClass::SaddleLike
    } else if eig.iter().all(|(r, i)| r.abs() <= threshold && i.abs() > threshold) {
        StabilityClass::CenterLike
    } else {
        StabilityClass::Marginal
    };
    Ok(StabilityReport { pairing_error: pairing_error(&eig), eigenvalues: eig, classification })
}

/// Best pairing of eigenvalues into `(λ, -λ)` pairs; returns the worst `|λ + μ|`.
fn pairing_error(eig: &[(f64, f64)]) -> f64 {
    fn best(rest: &[(f64, f64)]) -> f64 {
        if rest.is_empty() {
            return 0.0;
        }
        let (a, tail) = (rest[0], &rest[1..]);
        (0..tail.len())
            .map(|k| {
                let b = tail[k];
                let mut others = tail.to_vec();
                others.remove(k);
                (a.0 + b.0).hypot(a.1 + b.1).max(best(&others))
            })
            .fold(f64::INFINITY, f64::min)
    }
    best(eig)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub z_min: f64,
    pub z_max: f64,
    pub zero_crossings: usize,
    pub xi_max: f64,
    pub energy_drift: f64,
}

/// Sign changes of a sampled series (exact zeros do not count as a sign).
pub fn count_zero_crossings(values: impl IntoIterator<Item = f64>) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for v in values {
        if v != 0.0 {
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
    }
    count
}

pub fn trajectory_summary(traj: &Trajectory) -> Result<TrajectorySummary> {
    if traj.is_empty() {
        return Err(Error::Domain("empty trajectory".into()));
    }
    let z = traj.states.iter().map(|s| s.z);
    Ok(TrajectorySummary {
        z_min: z.clone().fold(f64::INFINITY, f64::min),
        z_max: z.clone().fold(f64::NEG_INFINITY, f64::max),
        zero_crossings: count_zero_crossings(z),
        xi_max: traj.states.iter().map(|s| s.xi).fold(0.0, f64::max),
        energy_drift: relative_drift(traj.derived.iter().map(|d| d.energy), traj.derived[0].energy),
    })
}
