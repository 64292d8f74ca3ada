//! Independent reference computations for the integration tests.
//!
//! Nothing here calls into the library's numerics; each function is a
//! direct transcription of the closed form or a brute-force evaluation.

#![allow(dead_code)]

use std::f64::consts::PI;

use cavity_bjj::DimensionlessParams;
use rand::rngs::StdRng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Mean-field energy in units of J.
pub fn energy(p: &DimensionlessParams, z: f64, theta: f64, xi: f64, phi: f64) -> f64 {
    let n = p.n_atoms as f64;
    let s = (1.0 - z * z).sqrt();
    -p.d_c * xi * xi + 2.0 * p.e * xi * phi.sin() + n * (p.u * (1.0 + z * z) / 4.0 - s * theta.cos())
        + xi * xi * (p.w0 + p.w12 * s * theta.cos())
}

/// Hamiltonian flow `(ż, θ̇, ξ̇, φ̇)` from central differences of [`energy`].
/// Canonical pairs `(q, p)` are `(θ, N z/2)` and `(ξ², φ)`.
pub fn flow_from_energy(p: &DimensionlessParams, x: [f64; 4], h: f64) -> [f64; 4] {
    let n = p.n_atoms as f64;
    let d = |k: usize| {
        let mut a = x;
        let mut b = x;
        a[k] += h;
        b[k] -= h;
        (energy(p, a[0], a[1], a[2], a[3]) - energy(p, b[0], b[1], b[2], b[3])) / (2.0 * h)
    };
    let (de_dz, de_dtheta, de_dxi, de_dphi) = (d(0), d(1), d(2), d(3));
    [
        -2.0 / n * de_dtheta,
        2.0 / n * de_dz,
        de_dphi / (2.0 * x[2]),
        -de_dxi / (2.0 * x[2]),
    ]
}

/// `s = k·(1 - q/D(s)²)` solved by plain fixed-point iteration, with
/// `k = ∓2/u` for `cos θ = ±1`, `D = d_c - w0 - w12·s·cos θ`, `q = w12 e²/N`.
pub fn imbalance_by_iteration(p: &DimensionlessParams, cos_theta: f64, s0: f64) -> f64 {
    let k = -2.0 * cos_theta / p.u;
    let q = p.w12 * p.e * p.e / p.n_atoms as f64;
    let mut s = s0;
    for _ in 0..10_000 {
        let d = p.d_c - p.w0 - p.w12 * s * cos_theta;
        let next = k * (1.0 - q / (d * d));
        if (next - s).abs() < 1e-15 {
            return next;
        }
        s = next;
    }
    s
}

/// Roots of the same condition on `(0, 1]` by a sign-change scan and
/// bisection. Sign changes across poles of `1/D²` cannot occur (the pole is
/// even), so every bracket holds a root.
pub fn imbalance_by_scan(p: &DimensionlessParams, cos_theta: f64, samples: usize) -> Vec<f64> {
    let k = -2.0 * cos_theta / p.u;
    let q = p.w12 * p.e * p.e / p.n_atoms as f64;
    let g = |s: f64| {
        let d = p.d_c - p.w0 - p.w12 * s * cos_theta;
        s - k * (1.0 - q / (d * d))
    };
    let mut roots = Vec::new();
    let mut prev = (1e-12, g(1e-12));
    for i in 1..=samples {
        let s = i as f64 / samples as f64;
        let v = g(s);
        if v == 0.0 {
            roots.push(s);
        } else if prev.1.signum() != v.signum() && prev.1 != 0.0 && v.is_finite() && prev.1.is_finite() {
            let (mut lo, mut hi) = (prev.0, s);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == g(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (s, v);
    }
    roots
}

/// Bare junction `ż = -2 sqrt(1-z²) sin θ`, `θ̇ = u z + 2z cos θ / sqrt(1-z²)`
/// by fixed-step RK4.
pub fn bare_junction_rk4(u: f64, z0: f64, theta0: f64, t: f64, steps: usize) -> Vec<(f64, f64)> {
    let f = |z: f64, th: f64| {
        let s = (1.0 - z * z).sqrt();
        (-2.0 * s * th.sin(), u * z + 2.0 * z * th.cos() / s)
    };
    let h = t / steps as f64;
    let (mut z, mut th) = (z0, theta0);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((z, th));
    for _ in 0..steps {
        let k1 = f(z, th);
        let k2 = f(z + 0.5 * h * k1.0, th + 0.5 * h * k1.1);
        let k3 = f(z + 0.5 * h * k2.0, th + 0.5 * h * k2.1);
        let k4 = f(z + h * k3.0, th + h * k3.1);
        z += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        th += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push((z, th));
    }
    out
}

/// Bare-junction energy `Λz²/2 - sqrt(1-z²) cos θ`.
pub fn bare_energy(lambda: f64, z: f64, theta: f64) -> f64 {
    lambda * z * z / 2.0 - (1.0 - z * z).sqrt() * theta.cos()
}

/// Extreme points `(θ, z)` of the closed curve `sqrt(1-z²) cos θ = r`.
pub fn separatrix_extremes(p: &DimensionlessParams) -> [(f64, f64); 4] {
    let r = (p.d_c - p.w0) / p.w12;
    let zt = (1.0 - r * r).sqrt();
    let th = r.acos();
    [(0.0, zt), (0.0, -zt), (th, 0.0), (-th, 0.0)]
}

/// Coherent amplitude of a cavity `H = ω a†a + i e (a† - a)` started from
/// `α0`: `α(t) = α0 e^{-iωt} + (e/(iω))(1 - e^{-iωt})`.
pub fn driven_cavity_alpha(omega: f64, e: f64, alpha0: (f64, f64), t: f64) -> (f64, f64) {
    // e^{-iωt} = c + i s
    let (c, s) = ((omega * t).cos(), -(omega * t).sin());
    let k = e / omega;
    // (-i k)(1 - c - i s) = -k s - i k (1 - c)
    (alpha0.0 * c - alpha0.1 * s - k * s, alpha0.0 * s + alpha0.1 * c - k * (1.0 - c))
}

/// Single atom starting in the left well under `-J(b1†b2 + h.c.)`.
pub fn rabi_z(t: f64) -> f64 {
    (2.0 * t).cos()
}

pub fn wrap(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}
