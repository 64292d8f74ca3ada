//! Randomized checks against the independent oracles in `common`.

mod common;

use std::f64::consts::PI;

use cavity_bjj::dynamics::{self, polar_rhs, IntegrateOptions};
use cavity_bjj::fixed_points::{self, AtomicBranch};
use cavity_bjj::model::{effective_detuning, mean_field_energy};
use cavity_bjj::ode::Tolerances;
use cavity_bjj::reduced::{self, ReducedOptions};
use cavity_bjj::{DimensionlessParams, MeanFieldState};
use proptest::prelude::*;

/// Red-detuned parameter sets with `|w12| <= |w0|`.
fn red_detuned() -> impl Strategy<Value = DimensionlessParams> {
    (-150.0..-20.0f64, 1.0..100.0f64, 0.0..1.0f64, prop_oneof![-50.0..-1.0f64, 1.0..50.0f64], 0.0..40.0f64).prop_map(
        |(d_c, w0_abs, frac, u, e)| DimensionlessParams { d_c, w0: -w0_abs, w12: -w0_abs * frac, u, e, n_atoms: 1000 },
    )
}

fn state() -> impl Strategy<Value = MeanFieldState> {
    (-0.95..0.95f64, -PI..PI, 0.1..3.0f64, -PI..PI).prop_map(|(z, t, x, p)| MeanFieldState::new(z, t, x, p))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn cubic_roots_match_brute_force(p in red_detuned()) {
        for (branch, cos) in [(AtomicBranch::Zero, 1.0), (AtomicBranch::Pi, -1.0)] {
            let lib = fixed_points::finite_imbalance_roots(&p, branch).unwrap();
            let scan = common::imbalance_by_scan(&p, cos, 20_000);
            for s in &scan {
                prop_assert!(lib.iter().any(|r| (r.s - s).abs() < 1e-8), "scan root {s} missing from {lib:?}");
            }
            for r in &lib {
                // a tangent root has no sign change and is invisible to the scan
                prop_assert!(r.degenerate || scan.iter().any(|s| (r.s - s).abs() < 1e-8), "extra root {r:?} vs {scan:?}");
            }
        }
    }

    #[test]
    fn equations_are_the_hamiltonian_flow(p in red_detuned(), x in state()) {
        let want = polar_rhs(&p, &x).unwrap();
        let got = common::flow_from_energy(&p, [x.z, x.theta, x.xi, x.phi], 1e-5);
        for i in 0..4 {
            prop_assert!((want[i] - got[i]).abs() <= 1e-6 * want[i].abs().max(1.0), "component {i}: {} vs {}", want[i], got[i]);
        }
        let e = mean_field_energy(&p, &x).unwrap();
        let oracle = common::energy(&p, x.z, x.theta, x.xi, x.phi);
        prop_assert!((e - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn reported_fixed_points_are_stationary(p in red_detuned()) {
        for fp in fixed_points::all_fixed_points(&p).unwrap() {
            prop_assert!(fp.residual < 1e-10, "{:?} residual {}", fp.label, fp.residual);
            prop_assert!(fp.state.xi >= 0.0);
            let d = effective_detuning(&p, fp.state.z, fp.state.theta).unwrap();
            prop_assert_eq!(d > 0.0, fp.label.detuning_positive());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    /// Bare junction: the imbalance keeps its sign iff `H > 1`.
    #[test]
    fn trapping_matches_energy_criterion(lambda in 0.5..20.0f64, z0 in 0.05..0.95f64, theta0 in -PI..PI) {
        let h = common::bare_energy(lambda, z0, theta0);
        prop_assume!((h - 1.0).abs() > 0.05);
        let tr = reduced::pure_bjj(2.0 * lambda, z0, theta0, 60.0, &ReducedOptions { stride: 0.05, ..Default::default() }).unwrap();
        let crossed = tr.z.iter().any(|z| *z < 0.0);
        prop_assert_eq!(crossed, h < 1.0, "H = {}", h);
        prop_assert_eq!(reduced::self_trapped(z0, theta0, lambda), h > 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn energy_is_conserved(p in red_detuned(), x in state()) {
        // Near cavity resonance the photon number grows by orders of magnitude
        // and E is a small difference of large terms; measure the drift
        // against the largest term met along the way.
        let opts = IntegrateOptions { max_energy_drift: None, ..Default::default() };
        let tr = dynamics::integrate(&p, &x, 10.0, &opts).unwrap();
        let n = p.n_atoms as f64;
        let scale = tr.states.iter().fold(n * (p.u.abs() / 2.0 + 1.0), |m, s| {
            let x2 = s.xi * s.xi;
            m.max(p.d_c.abs() * x2).max(2.0 * p.e * s.xi).max(x2 * (p.w0.abs() + p.w12.abs()))
        });
        let e0 = tr.derived[0].energy;
        let drift = tr.derived.iter().map(|d| (d.energy - e0).abs()).fold(0.0, f64::max) / scale;
        prop_assert!(drift < 1e-8, "drift {drift:e} on scale {scale:e}");
    }

    /// `(z, θ, ξ, φ) -> (z, -θ, ξ, π - φ)` reverses the flow. Some sampled
    /// regimes are chaotic, so the horizon is kept short.
    #[test]
    fn time_reversal(p in red_detuned(), x in state()) {
        let opts = IntegrateOptions { tol: Tolerances::new(1e-12, 1e-14), stride: 1.0, max_energy_drift: None };
        let fwd = dynamics::integrate(&p, &x, 1.0, &opts).unwrap();
        let end = *fwd.last().unwrap();
        let flipped = MeanFieldState::new(end.z, -end.theta, end.xi, PI - end.phi);
        let back = *dynamics::integrate(&p, &flipped, 1.0, &opts).unwrap().last().unwrap();
        prop_assert!((back.z - x.z).abs() < 1e-6);
        prop_assert!(common::wrap(-back.theta - x.theta).abs() < 1e-6);
        prop_assert!((back.xi - x.xi).abs() < 1e-6 * x.xi.max(1.0));
        prop_assert!(common::wrap(PI - back.phi - x.phi).abs() < 1e-6);
    }

    /// With the cavity decoupled the full, reduced and bare models coincide.
    #[test]
    fn decoupled_models_agree(d_c in -50.0..-1.0f64, w0 in -50.0..0.0f64, u in -20.0..20.0f64, z0 in -0.9..0.9f64, t0 in -PI..PI) {
        let p = DimensionlessParams { d_c, w0, w12: 0.0, u, e: 0.0, n_atoms: 500 };
        let tol = Tolerances::new(1e-13, 1e-15);
        let full = dynamics::integrate(&p, &MeanFieldState::new(z0, t0, 0.0, 0.0), 50.0, &IntegrateOptions { tol, stride: 1.0, max_energy_drift: None }).unwrap();
        let red = reduced::integrate_reduced(&p, z0, t0, 50.0, &ReducedOptions { tol, stride: 1.0, ..Default::default() }).unwrap();
        let bare = reduced::pure_bjj(u, z0, t0, 50.0, &ReducedOptions { tol, stride: 1.0, ..Default::default() }).unwrap();
        for k in 0..full.len() {
            let s = full.states[k];
            prop_assert!((s.z - red.z[k]).abs() < 1e-9 && common::wrap(s.theta - red.theta[k]).abs() < 1e-9);
            prop_assert!((red.z[k] - bare.z[k]).abs() < 1e-9 && common::wrap(red.theta[k] - bare.theta[k]).abs() < 1e-9);
        }
    }

    /// Inside the closed zero-detuning curve the reduced flow never reaches it.
    #[test]
    fn separatrix_confines(ratio in 0.1..0.9f64, w12 in -40.0..-5.0f64, u in 1.0..20.0f64, z in -0.9..0.9f64, theta in -PI..PI) {
        let p = DimensionlessParams { d_c: -50.0 + ratio * w12, w0: -50.0, w12, u, e: 10.0, n_atoms: 1000 };
        let d0 = effective_detuning(&p, z, theta).unwrap();
        prop_assume!(d0.abs() > 0.5);
        let tr = reduced::integrate_reduced(&p, z, theta, 20.0, &ReducedOptions { stride: 0.1, ..Default::default() }).unwrap();
        prop_assert!(tr.truncated.is_none());
        prop_assert!(tr.detuning.iter().all(|d| d.signum() == d0.signum()));
    }
}

#[test]
fn fig3_converges_under_tolerance_halving() {
    let p = DimensionlessParams::josephson_default();
    let x = MeanFieldState::new(0.0, 0.5, 0.0, 0.0);
    let run = |rtol: f64| {
        let opts = IntegrateOptions { tol: Tolerances::new(rtol, rtol * 1e-2), stride: 0.1, max_energy_drift: None };
        dynamics::integrate(&p, &x, 100.0, &opts).unwrap()
    };
    let mut last_gap = f64::INFINITY;
    let mut prev = run(1e-8);
    for rtol in [5e-9, 2.5e-9, 1.25e-9] {
        let next = run(rtol);
        let gap = prev.states.iter().zip(&next.states).map(|(a, b)| (a.z - b.z).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-4, "rtol {rtol}: gap {gap:e}");
        assert!(gap < 1.5 * last_gap, "rtol {rtol}: gap {gap:e} after {last_gap:e}");
        last_gap = gap;
        prev = next;
    }
    let reference = run(1e-12);
    let gap = prev.states.iter().zip(&reference.states).map(|(a, b)| (a.z - b.z).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-5, "{gap:e}");
}
