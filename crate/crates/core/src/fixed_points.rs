//! Stationary states of the mean-field flow.
//!
//! Zero-imbalance points (`z = 0`, `θ ∈ {0, π}`, `φ = ±π/2`) have a closed
//! form. Finite-imbalance points satisfy `s = ∓(2/u)·ν̃(ξ̄(s))` with
//! `s = sqrt(1 - z̄²)` and `ξ̄ = e/|d_c - w0 - w12·s·cos θ|`; clearing the
//! denominator gives a cubic in `s`, whose roots are then re-checked against
//! the original condition.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{classify_stability, rhs, StabilityReport};
use crate::error::{Error, Result};
use crate::model::{effective_detuning, DimensionlessParams, MeanFieldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    X1,
    X2,
    X3,
    X4,
    X5,
    X6,
    X7,
    X8,
}

impl Label {
    /// Labels with odd index sit where the effective detuning is positive.
    pub fn detuning_positive(self) -> bool {
        matches!(self, Label::X1 | Label::X3 | Label::X5 | Label::X7)
    }

    fn pick(theta: AtomicBranch, finite: bool, detuning_positive: bool) -> Self {
        use Label::*;
        match (finite, theta, detuning_positive) {
            (false, AtomicBranch::Zero, true) => X1,
            (false, AtomicBranch::Zero, false) => X2,
            (false, AtomicBranch::Pi, true) => X3,
            (false, AtomicBranch::Pi, false) => X4,
            (true, AtomicBranch::Zero, true) => X5,
            (true, AtomicBranch::Zero, false) => X6,
            (true, AtomicBranch::Pi, true) => X7,
            (true, AtomicBranch::Pi, false) => X8,
        }
    }
}

/// Relative phase of a stationary state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomicBranch {
    Zero,
    Pi,
}

impl AtomicBranch {
    pub fn theta(self) -> f64 {
        match self {
            AtomicBranch::Zero => 0.0,
            AtomicBranch::Pi => PI,
        }
    }

    pub fn cos(self) -> f64 {
        match self {
            AtomicBranch::Zero => 1.0,
            AtomicBranch::Pi => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub theta: AtomicBranch,
    /// Sign of `z̄` (0 for zero-imbalance points).
    pub z_sign: i8,
    pub detuning_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub label: Label,
    pub state: MeanFieldState,
    pub branch: Branch,
    pub residual: f64,
    pub stability: Option<StabilityReport>,
    /// `e = 0`: photon amplitude vanishes and its phase is arbitrary.
    pub photon_phase_degenerate: bool,
    /// Two roots of the cubic collided.
    pub root_degenerate: bool,
    /// Outside the red-detuned regime (`w12 > 0` needed for a `θ = 0`,
    /// repulsive finite-imbalance point).
    pub outside_red_detuned: bool,
}

fn build_point(
    params: &DimensionlessParams,
    label: Label,
    state: MeanFieldState,
    branch: Branch,
    root_degenerate: bool,
) -> Result<FixedPoint> {
    let residual = rhs(params, &state)?.norm();
    let stability = classify_stability(params, &state).ok();
    Ok(FixedPoint {
        label,
        state,
        branch,
        residual,
        stability,
        photon_phase_degenerate: params.e == 0.0,
        root_degenerate,
        outside_red_detuned: params.w12 > 0.0 || params.w0 > 0.0,
    })
}

/// Candidate value of `ξ` from the closed form of one zero-imbalance label.
/// Negative values are unphysical.
pub fn zero_imbalance_candidate_xi(params: &DimensionlessParams, label: Label) -> Option<f64> {
    let d_plus = params.d_c - params.w0 - params.w12;
    let d_minus = params.d_c - params.w0 + params.w12;
    match label {
        Label::X1 => Some(params.e / d_plus),
        Label::X2 => Some(-params.e / d_plus),
        Label::X3 => Some(params.e / d_minus),
        Label::X4 => Some(-params.e / d_minus),
        _ => None,
    }
}

/// The physical zero-imbalance point on one atomic branch.
pub fn zero_imbalance_branch(params: &DimensionlessParams, theta: AtomicBranch) -> Result<FixedPoint> {
    params.validate()?;
    let delta = params.d_c - params.w0 - params.w12 * theta.cos();
    if delta == 0.0 {
        return Err(Error::Resonance);
    }
    let positive = delta > 0.0;
    let xi = params.e / delta.abs();
    let phi = if params.e == 0.0 {
        0.0
    } else if positive {
        FRAC_PI_2
    } else {
        -FRAC_PI_2
    };
    let state = MeanFieldState::new(0.0, theta.theta(), xi, phi);
    let branch = Branch { theta, z_sign: 0, detuning_positive: positive };
    build_point(params, Label::pick(theta, false, positive), state, branch, false)
}

/// All physical zero-imbalance points: one per atomic branch, except on an
/// exactly resonant branch.
pub fn zero_imbalance_fixed_points(params: &DimensionlessParams) -> Result<Vec<FixedPoint>> {
    let mut out = Vec::new();
    let mut resonant = 0;
    for theta in [AtomicBranch::Zero, AtomicBranch::Pi] {
        match zero_imbalance_branch(params, theta) {
            Ok(p) => out.push(p),
            Err(Error::Resonance) => resonant += 1,
            Err(e) => return Err(e),
        }
    }
    if resonant == 2 {
        return Err(Error::Resonance);
    }
    Ok(out)
}

/// A root `s = sqrt(1 - z̄²)` of the finite-imbalance condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceRoot {
    pub s: f64,
    pub degenerate: bool,
}

/// `s - k·ν̃(ξ̄(s))`, with `k = -2/u` on the `θ = 0` branch and `+2/u` on `θ = π`.
pub fn stationarity_residual(params: &DimensionlessParams, theta: AtomicBranch, s: f64) -> f64 {
    let (k, a, b, q) = cubic_terms(params, theta);
    let d = a + b * s;
    s - k * (1.0 - q / (d * d))
}

/// `(k, A, B, q)` with `D(s) = A + B s` and `ν̃ = 1 - q / D²`.
fn cubic_terms(params: &DimensionlessParams, theta: AtomicBranch) -> (f64, f64, f64, f64) {
    let k = match theta {
        AtomicBranch::Zero => -2.0 / params.u,
        AtomicBranch::Pi => 2.0 / params.u,
    };
    let a = params.d_c - params.w0;
    let b = -params.w12 * theta.cos();
    let q = params.w12 * params.e * params.e / params.n();
    (k, a, b, q)
}

/// Real roots of `Σ c_i x^i` (coefficients in ascending order) via the
/// eigenvalues of the companion matrix.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<(f64, f64)> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    companion.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect()
}

/// Roots of the finite-imbalance condition on one branch, restricted to
/// `s ∈ (0, 1]`.
pub fn finite_imbalance_roots(params: &DimensionlessParams, theta: AtomicBranch) -> Result<Vec<ImbalanceRoot>> {
    params.validate()?;
    if params.u == 0.0 {
        return Err(Error::Domain("u = 0: no finite-imbalance stationary points".into()));
    }
    let (k, a, b, q) = cubic_terms(params, theta);
    if q == 0.0 {
        // no photons: the condition is linear, s = k
        return Ok(if k > 0.0 && k <= 1.0 { vec![ImbalanceRoot { s: k, degenerate: false }] } else { Vec::new() });
    }
    // s·D² - k·D² + k·q = 0
    let coeffs = [
        -k * a * a + k * q,
        a * a - 2.0 * k * a * b,
        2.0 * a * b - k * b * b,
        b * b,
    ];
    let g = |s: f64| stationarity_residual(params, theta, s);
    let dg = |s: f64| {
        let d = a + b * s;
        1.0 - k * 2.0 * q * b / (d * d * d)
    };

    let mut roots: Vec<ImbalanceRoot> = Vec::new();
    for (re, im) in polynomial_roots(&coeffs) {
        if im.abs() > 1e-6 * re.abs().max(1.0) {
            continue;
        }
        let mut s = re;
        // Newton polish on the uncleared condition
        for _ in 0..8 {
            let d = a + b * s;
            if d == 0.0 {
                break;
            }
            let step = g(s) / dg(s);
            if !step.is_finite() {
                break;
            }
            s -= step;
            if step.abs() <= 1e-15 * s.abs().max(1.0) {
                break;
            }
        }
        let d = a + b * s;
        if d.abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300) || !s.is_finite() {
            continue; // spurious root from clearing the denominator
        }
        let tol = 1e-12 * (1.0 + (k * (1.0 - q / (d * d))).abs());
        if g(s).abs() > tol.max(1e-12) {
            continue;
        }
        if s <= 0.0 || s > 1.0 + 1e-12 {
            continue;
        }
        let s = s.min(1.0);
        if let Some(r) = roots.iter_mut().find(|r| (r.s - s).abs() <= 1e-10) {
            r.degenerate = true;
        } else {
            roots.push(ImbalanceRoot { s, degenerate: false });
        }
    }
    roots.sort_by(|x, y| x.s.total_cmp(&y.s));
    Ok(roots)
}

/// All finite-imbalance stationary points (both signs of `z̄`).
pub fn finite_imbalance_fixed_points(params: &DimensionlessParams) -> Result<Vec<FixedPoint>> {
    let mut out = Vec::new();
    for theta in [AtomicBranch::Zero, AtomicBranch::Pi] {
        for root in finite_imbalance_roots(params, theta)? {
            let z_abs = (1.0 - root.s * root.s).sqrt();
            if z_abs == 0.0 {
                continue; // coincides with a zero-imbalance point
            }
            let delta = params.d_c - params.w0 - params.w12 * root.s * theta.cos();
            let positive = delta > 0.0;
            let xi = if params.e == 0.0 { 0.0 } else { params.e / delta.abs() };
            let phi = if params.e == 0.0 {
                0.0
            } else if positive {
                FRAC_PI_2
            } else {
                -FRAC_PI_2
            };
            for sign in [1i8, -1] {
                let state = MeanFieldState::new(sign as f64 * z_abs, theta.theta(), xi, phi);
                let branch = Branch { theta, z_sign: sign, detuning_positive: positive };
                let fp = build_point(params, Label::pick(theta, true, positive), state, branch, root.degenerate)?;
                if fp.residual < 1e-10 {
                    out.push(fp);
                }
            }
        }
    }
    Ok(out)
}

/// Zero- and finite-imbalance points together. A vanishing interaction
/// simply yields no finite-imbalance points here.
pub fn all_fixed_points(params: &DimensionlessParams) -> Result<Vec<FixedPoint>> {
    let mut out = match zero_imbalance_fixed_points(params) {
        Ok(v) => v,
        Err(Error::Resonance) => Vec::new(),
        Err(e) => return Err(e),
    };
    if params.u != 0.0 {
        out.extend(finite_imbalance_fixed_points(params)?);
    }
    Ok(out)
}

/// The locus `δ̃_C = 0` in the `(θ, z)` plane:
/// `sqrt(1 - z²)·cos θ = (d_c - w0)/w12`.
///
/// For a ratio `r ∈ (0, 1)` it is a closed curve, returned as `n_points`
/// ordered points (the last one connects back to the first). The curve is
/// parametrized as `z = Z sin t`, `θ = atan2(Z cos t, r)` with
/// `Z = sqrt(1 - r²)`; when `n_points` is a multiple of 4 the extreme
/// points `(0, ±Z)` and `(±arccos r, 0)` are included exactly.
pub fn separatrix_curve(params: &DimensionlessParams, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if params.w12 == 0.0 {
        return Err(Error::Domain("w12 = 0: no separatrix".into()));
    }
    let r = (params.d_c - params.w0) / params.w12;
    if !(r > 0.0 && r <= 1.0) {
        return Ok(Vec::new());
    }
    if r == 1.0 {
        return Ok(vec![(0.0, 0.0)]);
    }
    let n = n_points.max(4);
    let big_z = (1.0 - r * r).sqrt();
    Ok((0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let (st, ct) = if n.is_multiple_of(4) && k % (n / 4) == 0 {
                [(0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0)][k / (n / 4)]
            } else {
                t.sin_cos()
            };
            ((big_z * ct).atan2(r), big_z * st)
        })
        .collect())
}

/// Euclidean distance in the `(θ, z)` plane from a point to a closed polyline.
pub fn distance_to_curve(curve: &[(f64, f64)], theta: f64, z: f64) -> f64 {
    match curve.len() {
        0 => f64::INFINITY,
        1 => (curve[0].0 - theta).hypot(curve[0].1 - z),
        n => (0..n)
            .map(|i| {
                let (a, b) = (curve[i], curve[(i + 1) % n]);
                let (dx, dz) = (b.0 - a.0, b.1 - a.1);
                let len2 = dx * dx + dz * dz;
                let t = if len2 == 0.0 { 0.0 } else { (((theta - a.0) * dx + (z - a.1) * dz) / len2).clamp(0.0, 1.0) };
                (a.0 + t * dx - theta).hypot(a.1 + t * dz - z)
            })
            .fold(f64::INFINITY, f64::min),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub label: Label,
    pub state: MeanFieldState,
    pub residual: f64,
    pub accepted: bool,
    pub stability: Option<StabilityReport>,
    pub near_separatrix: bool,
    pub detuning: f64,
}

pub const RESIDUAL_THRESHOLD: f64 = 1e-10;
pub const SEPARATRIX_PROXIMITY: f64 = 0.05;

/// Recomputes residuals, attaches stability reports and flags points close
/// to the separatrix.
pub fn verify_fixed_points(params: &DimensionlessParams, points: &[FixedPoint]) -> Result<Vec<Verification>> {
    let curve = if params.w12 != 0.0 { separatrix_curve(params, 2000)? } else { Vec::new() };
    points
        .iter()
        .map(|fp| {
            let residual = rhs(params, &fp.state)?.norm();
            let accepted = residual < RESIDUAL_THRESHOLD;
            let stability = if accepted { classify_stability(params, &fp.state).ok() } else { None };
            Ok(Verification {
                label: fp.label,
                state: fp.state,
                residual,
                accepted,
                stability,
                near_separatrix: distance_to_curve(&curve, fp.state.theta, fp.state.z) < SEPARATRIX_PROXIMITY,
                detuning: effective_detuning(params, fp.state.z, fp.state.theta)?,
            })
        })
        .collect()
}
