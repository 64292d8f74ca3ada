//! Dormand–Prince 5(4) embedded pair with PI step-size control and the
//! fourth-order continuous extension used for uniform output sampling.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Relative and absolute error tolerances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite()) {
            return Err(Error::Domain("tolerances must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub tol: Tolerances,
    pub max_steps: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub safety: f64,
    pub beta: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            max_steps: 5_000_000,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            safety: 0.9,
            beta: 0.04,
        }
    }
}

impl Options {
    pub fn with_tol(tol: Tolerances) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Step statistics of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub min_step: f64,
    pub max_step: f64,
    /// Largest absolute local error estimate of an accepted step (max-norm).
    pub max_local_error: f64,
    /// Sum of the absolute local error estimates over all accepted steps.
    pub accumulated_error: f64,
}

#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    /// Requested samples that were reached.
    pub samples: Vec<(f64, [f64; N])>,
    /// State at the end of the last accepted step.
    pub final_time: f64,
    pub final_state: [f64; N],
    pub stats: StepStats,
    /// Set when the guard stopped the integration early.
    pub stopped: Option<(f64, String)>,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn is_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

struct Step<const N: usize> {
    y_new: [f64; N],
    k7: [f64; N],
    err_vec: [f64; N],
    dense: [[f64; N]; 5],
}

fn dopri_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Step<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new);

    let mut err_vec = [0.0; N];
    let mut dense = [[0.0; N]; 5];
    for i in 0..N {
        err_vec[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let dy = y_new[i] - y[i];
        let bspl = h * k1[i] - dy;
        dense[0][i] = y[i];
        dense[1][i] = dy;
        dense[2][i] = bspl;
        dense[3][i] = dy - h * k7[i] - bspl;
        dense[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Step { y_new, k7, err_vec, dense }
}

fn interpolate<const N: usize>(dense: &[[f64; N]; 5], s: f64) -> [f64; N] {
    let s1 = 1.0 - s;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = dense[0][i] + s * (dense[1][i] + s1 * (dense[2][i] + s * (dense[3][i] + s1 * dense[4][i])));
    }
    out
}

/// Max norm of the scaled error, so that components which stay at zero do
/// not loosen the control on the others.
fn error_norm<const N: usize>(tol: &Tolerances, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
        worst = worst.max((err[i] / sc).abs());
    }
    worst
}

fn initial_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], dir: f64, opts: &Options) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let tol = &opts.tol;
    let (mut dnf, mut dny) = (0.0, 0.0);
    for i in 0..N {
        let sk = tol.atol + tol.rtol * y[i].abs();
        dnf += (k1[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(opts.h_max);
    let y1 = axpy(y, dir * h, &[(1.0, k1)]);
    let k2 = f(t + dir * h, &y1);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = tol.atol + tol.rtol * y[i].abs();
        der2 += ((k2[i] - k1[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h).min(h1).min(opts.h_max)
}

/// Adaptive integration from `t0` to `t1` (either direction).
///
/// `sample_times` must be ordered in the direction of integration and lie in
/// `[t0, t1]`; they are filled from the continuous extension. `guard` is
/// called after every accepted step and may stop the integration by
/// returning a reason. It may also project the accepted state back onto an
/// invariant manifold; the derivative is re-evaluated when it does.
pub fn integrate<const N: usize, F, G>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    sample_times: &[f64],
    opts: &Options,
    mut guard: G,
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    G: FnMut(f64, &mut [f64; N]) -> Option<String>,
{
    opts.tol.validate()?;
    if !is_finite(&y0) {
        return Err(Error::NonFinite("initial state"));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut stats = StepStats { min_step: f64::INFINITY, ..StepStats::default() };
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    while next_sample < sample_times.len() && dir * (sample_times[next_sample] - t0) <= 0.0 {
        samples.push((sample_times[next_sample], y0));
        next_sample += 1;
    }

    let mut t = t0;
    let mut y = y0;
    if t0 == t1 {
        stats.min_step = 0.0;
        return Ok(Solution { samples, final_time: t, final_state: y, stats, stopped: None });
    }
    let mut k1 = f(t, &y);
    stats.rhs_evals += 1;
    let mut h = initial_step(&mut f, t, &y, &k1, dir, opts);
    stats.rhs_evals += 1;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let expo1 = 0.2 - opts.beta * 0.75;
    let span = (t1 - t0).abs();

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::MaxSteps { t, steps: opts.max_steps });
        }
        let remaining = (t1 - t).abs();
        let mut last = false;
        if h >= remaining || (remaining - h) <= 1e-13 * span {
            h = remaining;
            last = true;
        }
        if h < opts.h_min * span.max(1.0) {
            return Err(Error::StepUnderflow { t, h, detail: String::new() });
        }
        let step = dopri_step(&mut f, t, &y, &k1, dir * h);
        stats.rhs_evals += 6;
        let finite = is_finite(&step.y_new) && is_finite(&step.err_vec);
        let err = if finite { error_norm(&opts.tol, &y, &step.y_new, &step.err_vec) } else { f64::INFINITY };
        let fac11 = err.powf(expo1);

        if err <= 1.0 {
            let t_new = if last { t1 } else { t + dir * h };
            while next_sample < sample_times.len() && dir * (sample_times[next_sample] - t_new) <= 0.0 {
                let ts = sample_times[next_sample];
                let s = ((ts - t) / (dir * h)).clamp(0.0, 1.0);
                samples.push((ts, interpolate(&step.dense, s)));
                next_sample += 1;
            }
            let local = step.err_vec.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            stats.accepted += 1;
            stats.max_local_error = stats.max_local_error.max(local);
            stats.accumulated_error += local;
            stats.min_step = stats.min_step.min(h);
            stats.max_step = stats.max_step.max(h);

            t = t_new;
            y = step.y_new;
            k1 = step.k7;
            let stop = guard(t, &mut y);
            if y != step.y_new {
                k1 = f(t, &y);
                stats.rhs_evals += 1;
            }
            if let Some(reason) = stop {
                return Ok(Solution { samples, final_time: t, final_state: y, stats, stopped: Some((t, reason)) });
            }
            if last {
                break;
            }
            let mut fac = fac11 / err_old.powf(opts.beta);
            fac = (fac / opts.safety).clamp(0.1, 5.0);
            let mut h_new = (h / fac).min(opts.h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = err.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h = if finite { h / (fac11 / opts.safety).min(5.0) } else { h * 0.25 };
        }
    }
    stats.min_step = if stats.min_step.is_finite() { stats.min_step } else { 0.0 };
    Ok(Solution { samples, final_time: t, final_state: y, stats, stopped: None })
}

/// Fixed-step integration with the fifth-order weights (used for order checks).
pub fn integrate_fixed<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t1: f64, steps: usize) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let mut t = t0;
    let mut k1 = f(t, &y);
    for _ in 0..steps {
        let step = dopri_step(&mut f, t, &y, &k1, h);
        y = step.y_new;
        k1 = step.k7;
        t += h;
    }
    y
}

/// Uniform sample grid `t0, t0 + stride, ...` up to and including `t1`
/// (the endpoint is appended when the stride does not divide the span).
pub fn uniform_grid(t0: f64, t1: f64, stride: f64) -> Vec<f64> {
    let span = t1 - t0;
    let n = (span / stride + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * stride).collect();
    if (t1 - out[n]).abs() > 1e-9 * stride {
        out.push(t1);
    } else {
        out[n] = t1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn oscillator(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_accuracy_and_dense_output() {
        let grid = uniform_grid(0.0, 10.0, 0.1);
        let sol = integrate(oscillator, 0.0, [1.0, 0.0], 10.0, &grid, &Options::default(), |_, _| None).unwrap();
        assert_eq!(sol.samples.len(), 101);
        for (t, y) in &sol.samples {
            assert_abs_diff_eq!(y[0], t.cos(), epsilon = 1e-9);
            assert_abs_diff_eq!(y[1], -t.sin(), epsilon = 1e-9);
        }
        assert_abs_diff_eq!(sol.final_state[0], 10f64.cos(), epsilon = 1e-9);
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(oscillator, 5.0, [5f64.cos(), -5f64.sin()], 0.0, &[], &Options::default(), |_, _| None).unwrap();
        assert_abs_diff_eq!(sol.final_state[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.final_state[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn fifth_order_convergence() {
        let exact = 2f64.cos();
        let errs: Vec<f64> = [20, 40, 80, 160]
            .iter()
            .map(|&n| (integrate_fixed(oscillator, 0.0, [1.0, 0.0], 2.0, n)[0] - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!(slope > 4.0, "observed order {slope} {errs:?}");
        }
    }

    #[test]
    fn guard_stops_early() {
        let sol = integrate(oscillator, 0.0, [1.0, 0.0], 10.0, &[], &Options::default(), |_, y| {
            (y[0] < 0.0).then(|| "crossed".to_string())
        })
        .unwrap();
        let (t, reason) = sol.stopped.unwrap();
        assert_eq!(reason, "crossed");
        assert!(t > 1.5 && t < 2.0);
    }

    #[test]
    fn blow_up_reports_underflow_or_max_steps() {
        // y' = y², y(0) = 1 blows up at t = 1
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &[], &Options::default(), |_, _| None);
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::MaxSteps { .. })));
    }

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid(0.0, 100.0, 0.1);
        assert_eq!(g.len(), 1001);
        assert_eq!(g[1000], 100.0);
        let g = uniform_grid(0.0, 1.05, 0.1);
        assert_eq!(*g.last().unwrap(), 1.05);
    }
}
