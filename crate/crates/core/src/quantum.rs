//! Exact evolution of the two-mode junction plus driven cavity in a truncated
//! Fock space, used to check the mean-field equations at small atom number.
//!
//! Basis states are `|n1, m⟩` with `n2 = N_A − n1` and `m` photons. The
//! Hamiltonian in units of `J` is
//!
//! ```text
//! H = −d_c a†a − i e (a − a†) + (u/2N) Σ_j n_j(n_j − 1)
//!     − (1 − (w12/N) a†a)(b1†b2 + b2†b1) + w0 a†a
//! ```
//!
//! The relative phase is `θ = arg⟨b1†b2⟩`, matching the Bloch-vector
//! convention of the mean-field modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{self, IntegrateOptions};
use crate::error::{Error, Result};
use crate::model::{DimensionlessParams, MeanFieldState};
use crate::ode::Tolerances;

pub const DEFAULT_DIMENSION_LIMIT: usize = 2_000_000;
pub const DEFAULT_LEAK_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Deviation in `⟨z⟩` that ends the mean-field agreement window.
pub const DEVIATION_LEVEL: f64 = 0.1;

const KRYLOV_DIM: usize = 30;
const PARALLEL_ROWS: usize = 20_000;


/// `max(20, ceil(8 ξ²))`.
pub fn default_cutoff(xi_expected: f64) -> usize {
    20usize.max((8.0 * xi_expected * xi_expected).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    pub n_atoms: usize,
    pub photon_cutoff: usize,
}

impl FockBasis {
    pub fn new(n_atoms: usize, photon_cutoff: usize) -> Result<Self> {
        Self::with_limit(n_atoms, photon_cutoff, DEFAULT_DIMENSION_LIMIT)
    }

    pub fn with_limit(n_atoms: usize, photon_cutoff: usize, limit: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::Domain("quantum model needs at least one atom".into()));
        }
        let dim = (n_atoms + 1).saturating_mul(photon_cutoff + 1);
        if dim > limit {
            return Err(Error::DimensionOverflow { dim, limit });
        }
        Ok(Self { n_atoms, photon_cutoff })
    }

    pub fn dim(&self) -> usize {
        (self.n_atoms + 1) * (self.photon_cutoff + 1)
    }

    pub fn index(&self, n1: usize, m: usize) -> usize {
        n1 * (self.photon_cutoff + 1) + m
    }

    pub fn state(&self, idx: usize) -> (usize, usize) {
        (idx / (self.photon_cutoff + 1), idx % (self.photon_cutoff + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub basis: FockBasis,
    pub amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn basis_state(basis: FockBasis, n1: usize, m: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[basis.index(n1, m)] = Complex64::new(1.0, 0.0);
        Self { basis, amplitudes }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Population in the highest photon level.
    pub fn photon_leak(&self) -> f64 {
        let m = self.basis.photon_cutoff;
        (0..=self.basis.n_atoms).map(|n1| self.amplitudes[self.basis.index(n1, m)].norm_sqr()).sum()
    }

    pub fn check_leak(&self, threshold: f64) -> Result<()> {
        let leak = self.photon_leak();
        if leak > threshold {
            return Err(Error::CutoffLeak { leak, threshold });
        }
        Ok(())
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Sparse Hamiltonian in compressed-row form, columns sorted within a row.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub basis: FockBasis,
    pub params: DimensionlessParams,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

pub fn build_hamiltonian(params: &DimensionlessParams, basis: FockBasis) -> Result<HamiltonianMatrix> {
    params.validate()?;
    if params.n_atoms as usize != basis.n_atoms {
        return Err(Error::Domain(format!("basis holds {} atoms, parameters {}", basis.n_atoms, params.n_atoms)));
    }
    if basis.photon_cutoff < 1 {
        return Err(Error::Domain("photon cutoff must be at least 1".into()));
    }
    let n = basis.n_atoms;
    let nf = n as f64;
    let big_m = basis.photon_cutoff;
    let mut row_ptr = Vec::with_capacity(basis.dim() + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for idx in 0..basis.dim() {
        let (n1, m) = basis.state(idx);
        let n2 = n - n1;
        let mf = m as f64;
        let hop = -(1.0 - params.w12 / nf * mf);
        let mut row: Vec<(usize, Complex64)> = Vec::with_capacity(5);
        // b2†b1 lowers n1
        if n1 > 0 {
            row.push((basis.index(n1 - 1, m), Complex64::new(hop * ((n1 * (n2 + 1)) as f64).sqrt(), 0.0)));
        }
        // ⟨m−1|−ie(a − a†)|m⟩ = −ie√m
        if m > 0 {
            row.push((basis.index(n1, m - 1), Complex64::new(0.0, params.e * mf.sqrt())));
        }
        let interaction = params.u / (2.0 * nf) * ((n1 * n1.saturating_sub(1) + n2 * n2.saturating_sub(1)) as f64);
        row.push((idx, Complex64::new(-params.d_c * mf + params.w0 * mf + interaction, 0.0)));
        if m < big_m {
            row.push((basis.index(n1, m + 1), Complex64::new(0.0, -params.e * (mf + 1.0).sqrt())));
        }
        if n2 > 0 {
            row.push((basis.index(n1 + 1, m), Complex64::new(hop * (((n1 + 1) * n2) as f64).sqrt(), 0.0)));
        }
        row.sort_by_key(|(c, _)| *c);
        for (c, v) in row {
            if v != Complex64::new(0.0, 0.0) {
                cols.push(c);
                vals.push(v);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(HamiltonianMatrix { basis, params: *params, row_ptr, cols, vals })
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Non-zero entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    /// `max |H_ij − conj(H_ji)|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries().map(|(r, c, v)| (v - self.element(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let row = |r: usize| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k] * v[self.cols[k]]).sum();
        if self.dim() >= PARALLEL_ROWS {
            out.par_iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        } else {
            out.iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        }
    }

    /// Dense copy, for small test problems.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut d = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.entries() {
            d[(r, c)] = v;
        }
        d
    }
}

/// Atomic SU(2) coherent state times a truncated photon coherent state.
pub fn coherent_initial_state(initial: &MeanFieldState, basis: FockBasis) -> Result<QuantumState> {
    coherent_initial_state_with(initial, basis, DEFAULT_LEAK_THRESHOLD)
}

pub fn coherent_initial_state_with(initial: &MeanFieldState, basis: FockBasis, leak_threshold: f64) -> Result<QuantumState> {
    initial.validate()?;
    let n = basis.n_atoms;
    let c = ((1.0 + initial.z) / 2.0).sqrt();
    let s = ((1.0 - initial.z) / 2.0).max(0.0).sqrt();
    // log-binomial recursion keeps large N finite
    let mut atoms = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut log_binom = 0.0;
    for (n1, slot) in atoms.iter_mut().enumerate() {
        if n1 > 0 {
            log_binom += ((n - n1 + 1) as f64 / n1 as f64).ln();
        }
        let n2 = n - n1;
        let mag = if (c == 0.0 && n1 > 0) || (s == 0.0 && n2 > 0) {
            0.0
        } else {
            let lc = if n1 > 0 { n1 as f64 * c.ln() } else { 0.0 };
            let ls = if n2 > 0 { n2 as f64 * s.ln() } else { 0.0 };
            (0.5 * log_binom + lc + ls).exp()
        };
        *slot = Complex64::from_polar(mag, n2 as f64 * initial.theta);
    }
    let alpha = Complex64::from_polar(initial.xi, initial.phi);
    let mut photons = Vec::with_capacity(basis.photon_cutoff + 1);
    let mut amp = Complex64::new((-0.5 * initial.xi * initial.xi).exp(), 0.0);
    for m in 0..=basis.photon_cutoff {
        if m > 0 {
            amp *= alpha / (m as f64).sqrt();
        }
        photons.push(amp);
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
    for (n1, a) in atoms.iter().enumerate() {
        for (m, p) in photons.iter().enumerate() {
            amplitudes[basis.index(n1, m)] = a * p;
        }
    }
    let total = norm(&amplitudes);
    amplitudes.iter_mut().for_each(|v| *v /= total);
    let state = QuantumState { basis, amplitudes };
    state.check_leak(leak_threshold)?;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expectations {
    pub z: f64,
    pub z_variance: f64,
    /// `arg⟨b1†b2⟩`, zero when the coherence vanishes.
    pub theta: f64,
    /// `2|⟨b1†b2⟩|/N`.
    pub coherence: f64,
    pub photon_number: f64,
    pub photon_variance: f64,
    pub a_re: f64,
    pub a_im: f64,
    pub energy: f64,
    pub energy_imag: f64,
    pub atom_number: f64,
}

pub fn expectations(state: &QuantumState, h: &HamiltonianMatrix) -> Expectations {
    let b = state.basis;
    let n = b.n_atoms;
    let amps = &state.amplitudes;
    let (mut z, mut z2, mut ph, mut ph2, mut atoms) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut hop = Complex64::new(0.0, 0.0);
    let mut a = Complex64::new(0.0, 0.0);
    for (idx, c) in amps.iter().enumerate() {
        let (n1, m) = b.state(idx);
        let p = c.norm_sqr();
        let zi = (2.0 * n1 as f64 - n as f64) / n as f64;
        z += p * zi;
        z2 += p * zi * zi;
        ph += p * m as f64;
        ph2 += p * (m * m) as f64;
        atoms += p * n as f64;
        // b1†b2 |n1, m⟩ = sqrt((n1+1) n2) |n1+1, m⟩
        if n1 < n {
            hop += amps[b.index(n1 + 1, m)].conj() * c * (((n1 + 1) * (n - n1)) as f64).sqrt();
        }
        if m > 0 {
            a += amps[b.index(n1, m - 1)].conj() * c * (m as f64).sqrt();
        }
    }
    let mut hv = vec![Complex64::new(0.0, 0.0); amps.len()];
    h.apply(amps, &mut hv);
    let energy = dot(amps, &hv);
    let theta = if hop.norm() > 0.0 { hop.arg() } else { 0.0 };
    Expectations {
        z,
        z_variance: (z2 - z * z).max(0.0),
        theta,
        coherence: 2.0 * hop.norm() / n as f64,
        photon_number: ph,
        photon_variance: (ph2 - ph * ph).max(0.0),
        a_re: a.re,
        a_im: a.im,
        energy: energy.re,
        energy_imag: energy.im,
        atom_number: atoms,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvolveStats {
    pub steps: usize,
    pub max_error: f64,
}

/// `exp(−iHτ)|ψ⟩` by adaptive Lanczos steps with local error below `tol`.
pub fn evolve(state: &QuantumState, h: &HamiltonianMatrix, duration: f64, tol: f64) -> Result<QuantumState> {
    evolve_with_stats(state, h, duration, tol).map(|(s, _)| s)
}

pub fn evolve_with_stats(
    state: &QuantumState,
    h: &HamiltonianMatrix,
    duration: f64,
    tol: f64,
) -> Result<(QuantumState, EvolveStats)> {
    if state.basis != h.basis {
        return Err(Error::Domain("state and Hamiltonian live on different bases".into()));
    }
    if !(duration >= 0.0 && duration.is_finite()) || !(tol > 0.0) {
        return Err(Error::Domain("duration must be non-negative and tol positive".into()));
    }
    let mut psi = state.amplitudes.clone();
    let mut stats = EvolveStats::default();
    let mut t = 0.0;
    let mut dt = duration;
    while t < duration {
        dt = dt.min(duration - t);
        let krylov = lanczos(h, &psi, dt, tol);
        let capped = krylov.vectors.len() == KRYLOV_DIM;
        loop {
            let (y, err) = krylov.propagate(dt);
            if err <= tol {
                psi = krylov.combine(&y);
                t += dt;
                stats.steps += 1;
                stats.max_error = stats.max_error.max(err);
                // a basis that converged early can afford a longer step
                if !capped {
                    dt *= 2.0;
                } else if err < 0.1 * tol {
                    dt *= 1.3;
                }
                break;
            }
            dt *= 0.5;
            if dt < 1e-12 * duration.max(1.0) {
                return Err(Error::Propagator(t));
            }
        }
    }
    Ok((QuantumState { basis: state.basis, amplitudes: psi }, stats))
}

struct Krylov {
    vectors: Vec<Vec<Complex64>>,
    /// Projected Hamiltonian, real symmetric tridiagonal.
    t: DMatrix<f64>,
    /// `β_m`, zero on an invariant subspace.
    residual: f64,
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Lanczos basis grown until the error estimate for a step `dt` drops below
/// `tol` or the dimension cap is reached.
fn lanczos(h: &HamiltonianMatrix, start: &[Complex64], dt: f64, tol: f64) -> Krylov {
    let dim = start.len();
    let kmax = KRYLOV_DIM.min(dim);
    let nrm = norm(start);
    let mut vectors: Vec<Vec<Complex64>> = vec![start.iter().map(|v| v / nrm).collect()];
    let mut alpha = Vec::with_capacity(kmax);
    let mut beta: Vec<f64> = Vec::with_capacity(kmax);
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..kmax {
        h.apply(&vectors[j], &mut w);
        alpha.push(dot(&vectors[j], &w).re);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for v in &vectors {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        let scale = alpha.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        if b <= 1e-13 * scale {
            return Krylov { vectors, t: tridiagonal(&alpha, &beta), residual: 0.0 };
        }
        let krylov = Krylov { vectors, t: tridiagonal(&alpha, &beta), residual: b };
        if j + 1 == kmax || (j % 4 == 3 && krylov.propagate(dt).1 <= tol) {
            return krylov;
        }
        vectors = krylov.vectors;
        beta.push(b);
        vectors.push(w.iter().map(|x| x / b).collect());
    }
    unreachable!("loop returns at the dimension cap")
}

impl Krylov {
    /// Coefficients of `exp(−iTdt) e1` and the error estimate
    /// `β_m |e_mᵀ exp(−iTdt) e1|`.
    fn propagate(&self, dt: f64) -> (Vec<Complex64>, f64) {
        let a = self.t.map(|v| Complex64::new(0.0, -v * dt));
        let e = a.exp();
        let y: Vec<Complex64> = e.column(0).iter().copied().collect();
        let err = self.residual * y[y.len() - 1].norm();
        (y, err)
    }

    fn combine(&self, y: &[Complex64]) -> Vec<Complex64> {
        let dim = self.vectors[0].len();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (v, c) in self.vectors.iter().zip(y) {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationSample {
    pub tau: f64,
    pub z_quantum: f64,
    pub z_meanfield: f64,
    pub photons_quantum: f64,
    pub photons_meanfield: f64,
    pub dz: f64,
    pub dphotons: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub n_atoms: u64,
    pub photon_cutoff: usize,
    pub samples: Vec<DeviationSample>,
    /// First sample time with `|Δz| > DEVIATION_LEVEL`; `None` if the
    /// horizon is reached first.
    pub breakdown_time: Option<f64>,
    pub max_dz: f64,
    pub norm_drift: f64,
    pub energy_drift: f64,
    /// Relative energy drift of the mean-field reference.
    pub meanfield_energy_drift: f64,
}

/// Runs the quantum and mean-field models side by side with the same
/// `N`-scaled couplings but `n_atoms` atoms.
pub fn compare_meanfield(
    params: &DimensionlessParams,
    initial: &MeanFieldState,
    n_atoms: u64,
    cutoff: usize,
    horizon: f64,
    stride: f64,
    tol: Tolerances,
) -> Result<Deviation> {
    if n_atoms > 60 {
        return Err(Error::Domain(format!("{n_atoms} atoms is beyond the comparison range (60)")));
    }
    if !(horizon >= 0.0) || !(stride > 0.0) {
        return Err(Error::Domain("horizon must be non-negative and stride positive".into()));
    }
    let p = DimensionlessParams { n_atoms, ..*params };
    let basis = FockBasis::new(n_atoms as usize, cutoff)?;
    let h = build_hamiltonian(&p, basis)?;
    let mut psi = coherent_initial_state(initial, basis)?;
    let first = expectations(&psi, &h);
    let (mf, meanfield_energy_drift): (Vec<(f64, f64)>, f64) = if horizon > 0.0 {
        let opts = IntegrateOptions { tol, stride, max_energy_drift: None };
        let traj = dynamics::integrate(&p, initial, horizon, &opts)?;
        (traj.states.iter().map(|s| (s.z, s.xi * s.xi)).collect(), traj.meta.energy_drift)
    } else {
        (vec![(initial.z, initial.xi * initial.xi)], 0.0)
    };
    let times = if horizon > 0.0 { crate::ode::uniform_grid(0.0, horizon, stride) } else { vec![0.0] };
    let mut samples = Vec::with_capacity(times.len());
    let mut last = 0.0;
    let mut last_obs = first;
    for (k, &tau) in times.iter().enumerate() {
        if tau > last {
            psi = evolve(&psi, &h, tau - last, DEFAULT_TOLERANCE)?;
            psi.check_leak(DEFAULT_LEAK_THRESHOLD)?;
            last = tau;
            last_obs = expectations(&psi, &h);
        }
        let (zm, pm) = mf[k];
        samples.push(DeviationSample {
            tau,
            z_quantum: last_obs.z,
            z_meanfield: zm,
            photons_quantum: last_obs.photon_number,
            photons_meanfield: pm,
            dz: (last_obs.z - zm).abs(),
            dphotons: (last_obs.photon_number - pm).abs(),
        });
    }
    let breakdown_time = samples.iter().find(|s| s.dz > DEVIATION_LEVEL).map(|s| s.tau);
    let max_dz = samples.iter().map(|s| s.dz).fold(0.0, f64::max);
    let scale = first.energy.abs().max(1.0);
    Ok(Deviation {
        n_atoms,
        photon_cutoff: cutoff,
        samples,
        breakdown_time,
        max_dz,
        norm_drift: (psi.norm() - 1.0).abs(),
        energy_drift: (last_obs.energy - first.energy).abs() / scale,
        meanfield_energy_drift,
    })
}
