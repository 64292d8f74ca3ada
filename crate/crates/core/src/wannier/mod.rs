//! Two-mode constants from a concrete 1D double well and cavity geometry.
//!
//! Units: `ħ = 1`, the particle mass is the `mass` field of the well
//! specification, lengths and energies are whatever the well parameters are
//! written in. The dimensionless bridge divides everything by `J`.

mod tridiag;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DimensionlessParams;

/// Shape of the longitudinal double-well potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum WellForm {
    /// `V0·((x/a)² − 1)²`, minima at `±a`.
    Quartic { v0: f64, a: f64 },
    /// `½·m·ω²·x² + h·exp(−x²/(2w²))`.
    HarmonicBarrier { omega: f64, height: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellSpec {
    #[serde(flatten)]
    pub form: WellForm,
    /// Domain is `[-half_width, half_width]` with Dirichlet walls.
    pub half_width: f64,
    /// Number of interior grid points.
    pub points: usize,
    pub mass: f64,
}

impl Default for DoubleWellSpec {
    /// Quartic well tuned so that `J ≈ 0.1·(ε − ħω_H)`.
    fn default() -> Self {
        Self { form: WellForm::Quartic { v0: 3.8, a: 1.0 }, half_width: 5.0, points: 16000, mass: 1.0 }
    }
}

impl DoubleWellSpec {
    pub fn potential(&self, x: f64) -> f64 {
        match self.form {
            WellForm::Quartic { v0, a } => {
                let r = (x / a) * (x / a) - 1.0;
                v0 * r * r
            }
            WellForm::HarmonicBarrier { omega, height, width } => {
                0.5 * self.mass * omega * omega * x * x + height * (-x * x / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(m.into()));
        match self.form {
            WellForm::Quartic { v0, a } => {
                if !(v0 > 0.0 && v0.is_finite()) || !(a > 0.0 && a.is_finite()) {
                    return bad("quartic well needs v0 > 0 and a > 0");
                }
            }
            WellForm::HarmonicBarrier { omega, height, width } => {
                if !(omega > 0.0) || !(height >= 0.0) || !(width > 0.0) {
                    return bad("harmonic well needs omega > 0, height >= 0, width > 0");
                }
            }
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return bad("half_width must be positive");
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad("mass must be positive");
        }
        if self.points < 20 {
            return bad("at least 20 grid points are required");
        }
        Ok(())
    }

    /// Interior grid, mirrored so that `x[n-1-i] == -x[i]` bit for bit.
    pub fn grid(&self) -> (Vec<f64>, f64) {
        let n = self.points;
        let dx = 2.0 * self.half_width / (n + 1) as f64;
        let mut x = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let xi = -self.half_width + (i + 1) as f64 * dx;
            x[i] = xi;
            x[n - 1 - i] = -xi;
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        (x, dx)
    }
}

/// Cavity and transverse-trap geometry, in the same units as the well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    /// Mode waist.
    pub sigma: f64,
    /// Cavity wave number.
    pub k: f64,
    /// Mirror distance.
    pub length: f64,
    /// Transverse oscillator length `sqrt(ħ/(m ω_H))`.
    pub l_h: f64,
    /// Dispersive shift `Ω_R²/Δ_A`, negative for red detuning.
    pub u0: f64,
    /// Pump amplitude.
    pub eta: f64,
    /// Cavity detuning.
    pub delta_c: f64,
}

impl CavityGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma", self.sigma), ("length", self.length), ("l_h", self.l_h)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("k", self.k), ("u0", self.u0), ("eta", self.eta), ("delta_c", self.delta_c)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        if self.eta < 0.0 {
            return Err(Error::Domain("eta must be non-negative".into()));
        }
        Ok(())
    }

    /// `(1 + e^{−k² l_H²}) / (L π σ sqrt(l_H² + σ²))`, the overlap prefactor
    /// without `U0`.
    pub fn mode_prefactor(&self, sigma: f64) -> f64 {
        let lh2 = self.l_h * self.l_h;
        (1.0 + (-self.k * self.k * lh2).exp()) / (self.length * std::f64::consts::PI * sigma * (lh2 + sigma * sigma).sqrt())
    }
}

/// Lowest eigenpairs of the discretized single-particle Hamiltonian.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub x: Vec<f64>,
    pub dx: f64,
    pub potential: Vec<f64>,
    /// Off-diagonal coefficient `-1/(2 m dx²)` of the kinetic term.
    pub hop: f64,
    pub energies: Vec<f64>,
    /// Normalized so that `Σ φ² dx = 1`.
    pub states: Vec<Vec<f64>>,
}

impl Eigenpairs {
    fn apply_hamiltonian(&self, v: &[f64]) -> Vec<f64> {
        apply_h(&self.potential, self.hop, v)
    }
}

fn apply_h(potential: &[f64], hop: f64, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut acc = (potential[i] - 2.0 * hop) * v[i];
            if i > 0 {
                acc += hop * v[i - 1];
            }
            if i + 1 < n {
                acc += hop * v[i + 1];
            }
            acc
        })
        .collect()
}

/// Trapezoid on the interior grid (the Dirichlet end points contribute zero).
fn integrate(dx: f64, f: impl Iterator<Item = f64>) -> f64 {
    f.sum::<f64>() * dx
}

/// Tolerance for the parity and orthogonality checks.
const PARITY_TOL: f64 = 1e-6;
const ORTHO_TOL: f64 = 1e-8;

pub fn solve_double_well(spec: &DoubleWellSpec, k: usize) -> Result<Eigenpairs> {
    spec.validate()?;
    if k == 0 || k > spec.points / 4 {
        return Err(Error::Domain(format!("cannot request {k} states on {} points", spec.points)));
    }
    let (x, dx) = spec.grid();
    let potential: Vec<f64> = x.iter().map(|&xi| spec.potential(xi)).collect();
    let hop = -1.0 / (2.0 * spec.mass * dx * dx);
    let diag: Vec<f64> = potential.iter().map(|v| v - 2.0 * hop).collect();
    let off = vec![hop; x.len() - 1];
    let energies = tridiag::lowest_eigenvalues(&diag, &off, k);
    let scale = dx.sqrt();
    let mut states = tridiag::eigenvectors(&diag, &off, &energies);
    for (idx, s) in states.iter_mut().enumerate() {
        for v in s.iter_mut() {
            *v /= scale;
        }
        // deterministic sign: even states positive at the centre, odd states
        // positive on the right
        let probe = if idx % 2 == 0 { s[s.len() / 2] } else { s.iter().rev().take(s.len() / 2).sum::<f64>() };
        if probe < 0.0 {
            s.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let mut pairs = Eigenpairs { x, dx, potential, hop, energies, states };
    check_eigenpairs(&pairs)?;
    // the discrete Hamiltonian commutes with the grid reflection, so the
    // parity projection only removes rounding noise
    let n = pairs.x.len();
    for (idx, s) in pairs.states.iter_mut().enumerate() {
        let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
        for i in 0..n / 2 {
            let avg = 0.5 * (s[i] + sign * s[n - 1 - i]);
            s[i] = avg;
            s[n - 1 - i] = sign * avg;
        }
        if n % 2 == 1 && sign < 0.0 {
            s[n / 2] = 0.0;
        }
        let norm = integrate(pairs.dx, s.iter().map(|v| v * v)).sqrt();
        s.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(pairs)
}

fn check_eigenpairs(p: &Eigenpairs) -> Result<()> {
    let n = p.x.len();
    for (idx, s) in p.states.iter().enumerate() {
        let peak = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
        let defect = (0..n).map(|i| (s[i] - sign * s[n - 1 - i]).abs()).fold(0.0, f64::max);
        if defect > PARITY_TOL * peak {
            return Err(Error::Resolution(format!("state {idx} has no definite parity (defect {defect:e})")));
        }
        for (jdx, t) in p.states.iter().enumerate().take(idx + 1) {
            let dot = integrate(p.dx, s.iter().zip(t).map(|(a, b)| a * b));
            let want = if idx == jdx { 1.0 } else { 0.0 };
            if (dot - want).abs() > ORTHO_TOL {
                return Err(Error::Resolution(format!("states {jdx} and {idx} overlap {dot:e}")));
            }
        }
    }
    Ok(())
}

/// Left/right localized orbitals built from the lowest doublet.
#[derive(Debug, Clone)]
pub struct WannierBasis {
    pub x: Vec<f64>,
    pub dx: f64,
    pub potential: Vec<f64>,
    pub hop: f64,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub delta_dw: f64,
}

impl WannierBasis {
    pub fn mean_position(&self, w: &[f64]) -> f64 {
        integrate(self.dx, self.x.iter().zip(w).map(|(x, v)| x * v * v))
    }

    /// Probability of `w1` on `x < 0`.
    pub fn left_fraction(&self) -> f64 {
        integrate(self.dx, self.x.iter().zip(&self.w1).filter(|(x, _)| **x < 0.0).map(|(_, v)| v * v))
    }

    pub fn doublet_mean(&self) -> f64 {
        0.5 * (self.e0 + self.e1)
    }
}

pub fn build_wannier(pairs: &Eigenpairs) -> Result<WannierBasis> {
    if pairs.states.len() < 3 {
        return Err(Error::Domain("need the lowest three states".into()));
    }
    let (e0, e1, e2) = (pairs.energies[0], pairs.energies[1], pairs.energies[2]);
    let delta_dw = e2 - 0.5 * (e0 + e1);
    if !(delta_dw > 0.0) {
        return Err(Error::Domain("third level is not above the doublet".into()));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (p0, p1) = (&pairs.states[0], &pairs.states[1]);
    let mut w1: Vec<f64> = p0.iter().zip(p1).map(|(a, b)| r * (a - b)).collect();
    let mut w2: Vec<f64> = p0.iter().zip(p1).map(|(a, b)| r * (a + b)).collect();
    let mean = integrate(pairs.dx, pairs.x.iter().zip(&w1).map(|(x, v)| x * v * v));
    if mean.abs() < pairs.dx {
        return Err(Error::Resolution(format!("orbital centre {mean:e} too close to the origin")));
    }
    if mean > 0.0 {
        std::mem::swap(&mut w1, &mut w2);
    }
    // keep J positive: <w1|H|w2> must be negative
    let hw2 = pairs.apply_hamiltonian(&w2);
    if integrate(pairs.dx, w1.iter().zip(&hw2).map(|(a, b)| a * b)) > 0.0 {
        w2.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(WannierBasis {
        x: pairs.x.clone(),
        dx: pairs.dx,
        potential: pairs.potential.clone(),
        hop: pairs.hop,
        w1,
        w2,
        e0,
        e1,
        e2,
        delta_dw,
    })
}

/// Physical two-mode constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub eps: f64,
    pub j: f64,
    pub u: f64,
    pub w0: f64,
    pub w12: f64,
    pub g_gg: f64,
}

/// Relative agreement required between the hopping integral and the
/// doublet splitting.
pub const HOPPING_CROSS_CHECK: f64 = 1e-6;

/// Returns `(ε, J, U)`.
pub fn hubbard_from_basis(basis: &WannierBasis, spec: &DoubleWellSpec, g_gg: f64, l_h: f64) -> Result<(f64, f64, f64)> {
    if !(l_h > 0.0) {
        return Err(Error::Domain("l_h must be positive".into()));
    }
    let hbar_omega_h = 1.0 / (spec.mass * l_h * l_h);
    let hw1 = apply_h(&basis.potential, basis.hop, &basis.w1);
    let hw2 = apply_h(&basis.potential, basis.hop, &basis.w2);
    let eps = hbar_omega_h + integrate(basis.dx, basis.w1.iter().zip(&hw1).map(|(a, b)| a * b));
    let j = -integrate(basis.dx, basis.w1.iter().zip(&hw2).map(|(a, b)| a * b));
    let split = 0.5 * (basis.e1 - basis.e0);
    if (j - split).abs() > HOPPING_CROSS_CHECK * split.abs() {
        return Err(Error::Resolution(format!("hopping integral {j:e} disagrees with splitting {split:e}")));
    }
    let quartic = integrate(basis.dx, basis.w1.iter().map(|v| v.powi(4)));
    let u = g_gg / (2.0 * std::f64::consts::PI * l_h * l_h) * quartic;
    Ok((eps, j, u))
}

/// Gaussian-weighted integrals `(∫|w1|² g, ∫|w2|² g, ∫w1 w2 g)` with
/// `g = e^{−x²/σ²}`.
fn weighted_overlaps(x: &[f64], dx: f64, w1: &[f64], w2: &[f64], sigma: f64) -> (f64, f64, f64) {
    let s2 = sigma * sigma;
    let mut acc = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let g = (-x[i] * x[i] / s2).exp();
        acc.0 += w1[i] * w1[i] * g;
        acc.1 += w2[i] * w2[i] * g;
        acc.2 += w1[i] * w2[i] * g;
    }
    (acc.0 * dx, acc.1 * dx, acc.2 * dx)
}

fn check_sigma(dx: f64, sigma: f64) -> Result<()> {
    if !(sigma >= dx) {
        return Err(Error::Resolution(format!("mode waist {sigma:e} below grid spacing {dx:e}")));
    }
    Ok(())
}

/// Cavity couplings `W0`, `W12` together with the mirror-symmetry defect
/// `|W0(w1) − W0(w2)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityCouplings {
    pub w0: f64,
    pub w12: f64,
    pub w0_asymmetry: f64,
}

pub fn cavity_couplings(basis: &WannierBasis, geom: &CavityGeometry) -> Result<CavityCouplings> {
    geom.validate()?;
    check_sigma(basis.dx, geom.sigma)?;
    let (i1, i2, i12) = weighted_overlaps(&basis.x, basis.dx, &basis.w1, &basis.w2, geom.sigma);
    let pref = geom.u0 * geom.mode_prefactor(geom.sigma);
    Ok(CavityCouplings { w0: pref * i1, w12: pref * i12, w0_asymmetry: (pref * (i1 - i2)).abs() })
}

/// `W12/W0` for arbitrary orbitals; independent of the prefactor.
pub fn overlap_ratio(x: &[f64], dx: f64, w1: &[f64], w2: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(dx, sigma)?;
    let (i1, _, i12) = weighted_overlaps(x, dx, w1, w2, sigma);
    Ok(i12 / i1)
}

/// Distance between the inner classical turning points at the doublet mean
/// energy.
pub fn barrier_width(basis: &WannierBasis, spec: &DoubleWellSpec) -> Result<f64> {
    let level = basis.doublet_mean();
    let f = |x: f64| spec.potential(x) - level;
    if f(0.0) <= 0.0 {
        return Err(Error::Domain("doublet lies above the barrier top".into()));
    }
    let steps = 100_000;
    let h = spec.half_width / steps as f64;
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=steps {
        let xi = i as f64 * h;
        if f(xi) <= 0.0 {
            hi = Some(xi);
            break;
        }
        lo = xi;
    }
    let mut hi = hi.ok_or_else(|| Error::Domain("no classical turning point inside the domain".into()))?;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub sigma: f64,
    pub sigma_over_width: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    pub barrier_width: f64,
    pub points: Vec<RatioPoint>,
    pub monotone: bool,
}

pub fn ratio_scan(basis: &WannierBasis, spec: &DoubleWellSpec, sigmas: &[f64]) -> Result<RatioCurve> {
    if sigmas.len() < 2 {
        return Err(Error::Domain("ratio scan needs at least two waist values".into()));
    }
    let width = barrier_width(basis, spec)?;
    let points = sigmas
        .par_iter()
        .map(|&sigma| {
            let ratio = overlap_ratio(&basis.x, basis.dx, &basis.w1, &basis.w2, sigma)?;
            Ok(RatioPoint { sigma, sigma_over_width: sigma / width, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<&RatioPoint> = points.iter().collect();
    order.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    let monotone = order.windows(2).all(|w| w[1].ratio <= w[0].ratio + 1e-12);
    Ok(RatioCurve { barrier_width: width, points, monotone })
}

/// `n` log-spaced values between `lo` and `hi`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

pub const VALIDITY_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub delta_dw: f64,
    /// Mode intensity averaged over the condensate density.
    pub mean_mode_intensity: f64,
    pub xi_sq_max: f64,
    /// `Δ_DW / (|U0| ξ² ⟨f²⟩)`, infinite when the denominator vanishes.
    pub margin: f64,
    pub valid: bool,
}

pub fn two_mode_validity(basis: &WannierBasis, geom: &CavityGeometry, xi_sq_max: f64) -> Result<ValidityReport> {
    if !(xi_sq_max >= 0.0) {
        return Err(Error::Domain("xi_sq_max must be non-negative".into()));
    }
    let (i1, i2, _) = weighted_overlaps(&basis.x, basis.dx, &basis.w1, &basis.w2, geom.sigma);
    let mean_mode_intensity = geom.mode_prefactor(geom.sigma) * 0.5 * (i1 + i2);
    let denom = geom.u0.abs() * xi_sq_max * mean_mode_intensity;
    let margin = if denom > 0.0 { basis.delta_dw / denom } else { f64::INFINITY };
    Ok(ValidityReport { delta_dw: basis.delta_dw, mean_mode_intensity, xi_sq_max, margin, valid: margin >= VALIDITY_THRESHOLD })
}

pub fn to_dimensionless(h: &HubbardParams, geom: &CavityGeometry, n_atoms: u64) -> Result<DimensionlessParams> {
    if !(h.j > 0.0) {
        return Err(Error::Domain(format!("tunneling J = {} must be positive", h.j)));
    }
    let n = n_atoms as f64;
    let p = DimensionlessParams {
        d_c: geom.delta_c / h.j,
        w0: h.w0 * n / h.j,
        w12: h.w12 * n / h.j,
        u: h.u * n / h.j,
        e: geom.eta / h.j,
        n_atoms,
    };
    p.validate()?;
    Ok(p)
}

/// Inverse of [`to_dimensionless`] for a given `J`: returns
/// `(Δ_C, η, W0, W12, U)`.
pub fn from_dimensionless(p: &DimensionlessParams, j: f64) -> (f64, f64, f64, f64, f64) {
    let n = p.n();
    (p.d_c * j, p.e * j, p.w0 * j / n, p.w12 * j / n, p.u * j / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub delta_dw: f64,
    pub left_fraction: f64,
    pub w1_center: f64,
    pub barrier_width: f64,
    pub grid_spacing: f64,
}

/// Everything the parameter pipeline produces for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    pub well: DoubleWellSpec,
    pub cavity: CavityGeometry,
    pub n_atoms: u64,
    pub basis: BasisSummary,
    pub hubbard: HubbardParams,
    pub w0_asymmetry: f64,
    pub j_over_onsite: f64,
    pub validity: ValidityReport,
    pub dimensionless: DimensionlessParams,
    pub ratio_curve: RatioCurve,
}

/// Full pipeline: eigen-solve, orbitals, constants, validity and the waist
/// scan used for the ratio curve.
pub fn derive_params(
    spec: &DoubleWellSpec,
    geom: &CavityGeometry,
    g_gg: f64,
    n_atoms: u64,
    xi_sq_max: f64,
) -> Result<(ParamsReport, WannierBasis)> {
    geom.validate()?;
    let pairs = solve_double_well(spec, 5)?;
    let basis = build_wannier(&pairs)?;
    let (eps, j, u) = hubbard_from_basis(&basis, spec, g_gg, geom.l_h)?;
    let c = cavity_couplings(&basis, geom)?;
    let hubbard = HubbardParams { eps, j, u, w0: c.w0, w12: c.w12, g_gg };
    let width = barrier_width(&basis, spec)?;
    let sigmas = log_space((0.05 * width).max(basis.dx), 100.0 * width, 50);
    let ratio_curve = ratio_scan(&basis, spec, &sigmas)?;
    let validity = two_mode_validity(&basis, geom, xi_sq_max)?;
    let dimensionless = to_dimensionless(&hubbard, geom, n_atoms)?;
    let onsite = eps - 1.0 / (spec.mass * geom.l_h * geom.l_h);
    let report = ParamsReport {
        well: *spec,
        cavity: *geom,
        n_atoms,
        basis: BasisSummary {
            e0: basis.e0,
            e1: basis.e1,
            e2: basis.e2,
            delta_dw: basis.delta_dw,
            left_fraction: basis.left_fraction(),
            w1_center: basis.mean_position(&basis.w1),
            barrier_width: width,
            grid_spacing: basis.dx,
        },
        hubbard,
        w0_asymmetry: c.w0_asymmetry,
        j_over_onsite: j / onsite,
        validity,
        dimensionless,
        ratio_curve,
    };
    Ok((report, basis))
}
