//! Dimensionless parameter set, mean-field state and the conserved energy.
//!
//! Energies are measured in units of the bare tunneling `J`, times in units
//! of `ħ/J`. The couplings `w0`, `w12` and `u` carry the factor `N_A`, so
//! the caption-style numbers (`W0·N_A = -90 J`, ...) are used directly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One physical scenario in units of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    /// Cavity detuning `ħΔ_C / J`.
    pub d_c: f64,
    /// AC-Stark shift `W0·N_A / J`.
    pub w0: f64,
    /// Cavity-assisted tunneling `W12·N_A / J`.
    pub w12: f64,
    /// On-site interaction `U·N_A / J`.
    pub u: f64,
    /// Pump strength `ħη / J`.
    pub e: f64,
    /// Total atom number.
    pub n_atoms: u64,
}

impl DimensionlessParams {
    /// Parameter set used for the Josephson-oscillation and running-phase
    /// scenarios: `ħΔ_C = -100J`, `W0 N_A = -90J`, `W12 N_A = -30J`,
    /// `U N_A = 12J`, `N_A = 1000`, `ħη = 20J`.
    pub fn josephson_default() -> Self {
        Self { d_c: -100.0, w0: -90.0, w12: -30.0, u: 12.0, e: 20.0, n_atoms: 1000 }
    }

    /// Bare junction: no cavity coupling at all.
    pub fn bare_junction(u: f64, n_atoms: u64) -> Self {
        Self { d_c: 0.0, w0: 0.0, w12: 0.0, u, e: 0.0, n_atoms }
    }

    pub fn n(&self) -> f64 {
        self.n_atoms as f64
    }

    /// Hard constraints. Violations make the equations meaningless.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d_c", self.d_c), ("w0", self.w0), ("w12", self.w12), ("u", self.u), ("e", self.e)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        if self.n_atoms == 0 {
            return Err(Error::Domain("n_atoms must be at least 1".into()));
        }
        if self.e < 0.0 {
            return Err(Error::Domain("pump strength e must be non-negative".into()));
        }
        Ok(())
    }

    /// Soft checks for the red-detuned regime (`w0, w12 <= 0`, `|w12| <= |w0|`).
    /// The equations stay well defined outside it, so these are only warnings.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.w0 > 0.0 || self.w12 > 0.0 {
            out.push("w0 and w12 are expected to be non-positive (red-detuned pump)".to_string());
        }
        if self.w12.abs() > self.w0.abs() {
            out.push("|w12| exceeds |w0|; not reachable with a real double well".to_string());
        }
        out
    }
}

/// Polar mean-field state `X = (z, θ, ξ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub z: f64,
    pub theta: f64,
    pub xi: f64,
    pub phi: f64,
}

impl MeanFieldState {
    pub fn new(z: f64, theta: f64, xi: f64, phi: f64) -> Self {
        Self { z, theta, xi, phi }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z.is_finite() && self.theta.is_finite() && self.xi.is_finite() && self.phi.is_finite()) {
            return Err(Error::NonFinite("mean-field state"));
        }
        if self.z.abs() > 1.0 {
            return Err(Error::Domain(format!("|z| = {} exceeds 1", self.z.abs())));
        }
        if self.xi < 0.0 {
            return Err(Error::Domain(format!("photon amplitude xi = {} is negative", self.xi)));
        }
        Ok(())
    }

    /// `sqrt(1 - z²)`, clamped at zero.
    pub fn overlap(&self) -> f64 {
        (1.0 - self.z * self.z).max(0.0).sqrt()
    }

    pub fn to_internal(&self) -> Result<InternalState> {
        to_internal(self)
    }
}

/// Regular coordinates: Bloch vector of the junction and complex cavity amplitude.
///
/// `S = (sqrt(1-z²) cos θ, sqrt(1-z²) sin θ, z)`, `α = ξ e^{iφ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalState {
    pub bloch: [f64; 3],
    pub alpha: Complex64,
}

impl InternalState {
    pub fn from_array(y: &[f64; 5]) -> Self {
        Self { bloch: [y[0], y[1], y[2]], alpha: Complex64::new(y[3], y[4]) }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.bloch[0], self.bloch[1], self.bloch[2], self.alpha.re, self.alpha.im]
    }

    pub fn bloch_norm(&self) -> f64 {
        self.bloch.iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Derived diagnostics attached to every trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub nu_eff: f64,
    pub delta_c_eff: f64,
    pub photon_number: f64,
    pub energy: f64,
}

impl DerivedQuantities {
    pub fn evaluate(params: &DimensionlessParams, state: &MeanFieldState) -> Self {
        let s = state.overlap();
        Self {
            nu_eff: tunneling_unchecked(params, state.xi * state.xi),
            delta_c_eff: detuning_from_projection(params, s * state.theta.cos()),
            photon_number: state.xi * state.xi,
            energy: energy_unchecked(params, state),
        }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// `δ̃_C = d_c - w0 - w12·sqrt(1-z²)·cos θ`.
pub fn effective_detuning(params: &DimensionlessParams, z: f64, theta: f64) -> Result<f64> {
    if !(z.is_finite() && theta.is_finite()) {
        return Err(Error::NonFinite("effective_detuning"));
    }
    if z.abs() > 1.0 {
        return Err(Error::Domain(format!("|z| = {} exceeds 1", z.abs())));
    }
    Ok(detuning_from_projection(params, (1.0 - z * z).sqrt() * theta.cos()))
}

/// Detuning as a function of the Bloch x-component `sqrt(1-z²) cos θ`.
pub(crate) fn detuning_from_projection(params: &DimensionlessParams, sx: f64) -> f64 {
    params.d_c - params.w0 - params.w12 * sx
}

/// `ν̃ = 1 - (w12 / N_A)·ξ²`.
pub fn effective_tunneling(params: &DimensionlessParams, xi: f64) -> Result<f64> {
    if !xi.is_finite() {
        return Err(Error::NonFinite("effective_tunneling"));
    }
    if xi < 0.0 {
        return Err(Error::Domain(format!("photon amplitude xi = {xi} is negative")));
    }
    Ok(tunneling_unchecked(params, xi * xi))
}

pub(crate) fn tunneling_unchecked(params: &DimensionlessParams, photon_number: f64) -> f64 {
    1.0 - params.w12 / params.n() * photon_number
}

/// Mean-field energy `E/J`, the expectation of the two-mode Hamiltonian in
/// the product coherent state (on-site term dropped):
///
/// `E/J = -d_c ξ² + 2eξ sin φ + N[u(1+z²)/4 - s cos θ] + ξ²(w0 + w12 s cos θ)`
///
/// The equations of motion are its Hamiltonian flow with canonical pairs
/// `(q, p) = (θ, N z / 2)` and `(ξ², φ)`.
pub fn mean_field_energy(params: &DimensionlessParams, state: &MeanFieldState) -> Result<f64> {
    state.validate()?;
    Ok(energy_unchecked(params, state))
}

pub(crate) fn energy_unchecked(params: &DimensionlessParams, state: &MeanFieldState) -> f64 {
    let s = state.overlap();
    energy_internal(params, s * state.theta.cos(), state.z, Complex64::from_polar(state.xi, state.phi))
}

/// Same energy, written in the regular coordinates.
pub(crate) fn energy_internal(params: &DimensionlessParams, sx: f64, sz: f64, alpha: Complex64) -> f64 {
    let n = params.n();
    let photons = alpha.norm_sqr();
    -params.d_c * photons
        + 2.0 * params.e * alpha.im
        + n * (params.u * (1.0 + sz * sz) / 4.0 - sx)
        + photons * (params.w0 + params.w12 * sx)
}

pub fn to_internal(state: &MeanFieldState) -> Result<InternalState> {
    state.validate()?;
    let s = state.overlap();
    Ok(InternalState {
        bloch: [s * state.theta.cos(), s * state.theta.sin(), state.z],
        alpha: Complex64::from_polar(state.xi, state.phi),
    })
}

/// Polar reconstruction. At `ξ = 0` the photon phase is reported as 0, and at
/// `|z| = 1` the relative phase is reported as 0.
pub fn from_internal(internal: &InternalState) -> Result<MeanFieldState> {
    let [sx, sy, sz] = internal.bloch;
    if !(sx.is_finite() && sy.is_finite() && sz.is_finite() && internal.alpha.re.is_finite() && internal.alpha.im.is_finite()) {
        return Err(Error::NonFinite("internal state"));
    }
    Ok(polar_unchecked(internal))
}

pub(crate) fn polar_unchecked(internal: &InternalState) -> MeanFieldState {
    let [sx, sy, sz] = internal.bloch;
    let z = sz.clamp(-1.0, 1.0);
    let theta = if sx == 0.0 && sy == 0.0 { 0.0 } else { wrap_angle(sy.atan2(sx)) };
    let xi = internal.alpha.norm();
    let phi = if xi == 0.0 { 0.0 } else { wrap_angle(internal.alpha.arg()) };
    MeanFieldState { z, theta, xi, phi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn detuning_examples() {
        let p = DimensionlessParams::josephson_default();
        assert_abs_diff_eq!(effective_detuning(&p, 0.0, 0.0).unwrap(), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(effective_detuning(&p, 0.0, PI).unwrap(), -40.0, epsilon = 1e-12);
        for theta in [0.0, 0.3, PI, -2.0] {
            assert_abs_diff_eq!(effective_detuning(&p, 1.0, theta).unwrap(), -10.0, epsilon = 1e-12);
            assert_abs_diff_eq!(effective_detuning(&p, -1.0, theta).unwrap(), -10.0, epsilon = 1e-12);
        }
        assert!(matches!(effective_detuning(&p, 1.2, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tunneling_examples() {
        let p = DimensionlessParams::josephson_default();
        assert_eq!(effective_tunneling(&p, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(effective_tunneling(&p, 1.0).unwrap(), 1.03, epsilon = 1e-14);
        let q = DimensionlessParams { w12: 0.0, ..p };
        assert_eq!(effective_tunneling(&q, 10.0).unwrap(), 1.0);
        assert!(effective_tunneling(&p, -0.1).is_err());
    }

    #[test]
    fn energy_examples() {
        let p = DimensionlessParams::josephson_default();
        let e = mean_field_energy(&p, &MeanFieldState::new(0.0, 0.5, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(e, 1000.0 * (3.0 - 0.5f64.cos()), epsilon = 1e-9);
        assert_abs_diff_eq!(e, 2122.417, epsilon = 1e-3);

        let bare = DimensionlessParams::bare_junction(0.0, 37);
        let e = mean_field_energy(&bare, &MeanFieldState::new(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(e, -37.0);
    }

    #[test]
    fn pole_conventions() {
        let st = MeanFieldState::new(0.0, 0.0, 1.0, PI / 2.0);
        let int = to_internal(&st).unwrap();
        assert_abs_diff_eq!(int.bloch[0], 1.0);
        assert_abs_diff_eq!(int.alpha.re, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(int.alpha.im, 1.0);
        let back = from_internal(&int).unwrap();
        assert_abs_diff_eq!(back.phi, PI / 2.0, epsilon = 1e-15);

        let pole = to_internal(&MeanFieldState::new(1.0, 2.3, 0.0, -1.1)).unwrap();
        assert_eq!(pole.bloch, [0.0, 0.0, 1.0]);
        assert_eq!(pole.alpha, Complex64::new(0.0, 0.0));
        let back = from_internal(&pole).unwrap();
        assert_eq!((back.z, back.theta, back.xi, back.phi), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn non_finite_rejected() {
        let int = InternalState { bloch: [f64::NAN, 0.0, 0.0], alpha: Complex64::new(0.0, 0.0) };
        assert!(from_internal(&int).is_err());
        assert!(to_internal(&MeanFieldState::new(0.0, f64::INFINITY, 0.0, 0.0)).is_err());
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn round_trip(z in -0.999f64..0.999, theta in -3.1f64..3.1, xi in 0.01f64..50.0, phi in -3.1f64..3.1) {
            let st = MeanFieldState::new(z, theta, xi, phi);
            let int = to_internal(&st).unwrap();
            prop_assert!((int.bloch_norm() - 1.0).abs() < 1e-12);
            let back = from_internal(&int).unwrap();
            prop_assert!((back.z - z).abs() < 1e-12);
            prop_assert!((back.theta - theta).abs() < 1e-12);
            prop_assert!((back.xi - xi).abs() < 1e-12 * xi.max(1.0));
            prop_assert!((back.phi - phi).abs() < 1e-12);
        }

        #[test]
        fn tunneling_affine_in_photon_number(w12 in -100.0f64..0.0, xi in 0.0f64..20.0) {
            let p = DimensionlessParams { w12, ..DimensionlessParams::josephson_default() };
            let nu = effective_tunneling(&p, xi).unwrap();
            prop_assert_eq!(nu, 1.0 - w12 / 1000.0 * (xi * xi));
        }

        #[test]
        fn detuning_even(z in -1.0f64..1.0, theta in -3.1f64..3.1) {
            let p = DimensionlessParams::josephson_default();
            let d = effective_detuning(&p, z, theta).unwrap();
            prop_assert_eq!(d, effective_detuning(&p, -z, theta).unwrap());
            prop_assert_eq!(d, effective_detuning(&p, z, -theta).unwrap());
        }
    }
}
