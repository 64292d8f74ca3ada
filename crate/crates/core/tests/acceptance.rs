//! Acceptance criteria 1-8. Each test prints one `PASS`/`FAIL` line with the
//! measured values before asserting.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use cavity_bjj::dynamics::{self, polar_rhs, IntegrateOptions};
use cavity_bjj::fixed_points::{self, zero_imbalance_candidate_xi, Label};
use cavity_bjj::ode::Tolerances;
use cavity_bjj::quantum::{self, FockBasis, QuantumState};
use cavity_bjj::reduced::{self, ReducedOptions};
use cavity_bjj::wannier::{self, DoubleWellSpec, WellForm};
use cavity_bjj::{DimensionlessParams, MeanFieldState};
use rand::Rng;

struct Report {
    id: u32,
    title: &'static str,
    checks: Vec<(String, bool)>,
    start: Instant,
    limit: Option<Duration>,
}

impl Report {
    fn new(id: u32, title: &'static str, limit: Option<f64>) -> Self {
        Self { id, title, checks: Vec::new(), start: Instant::now(), limit: limit.map(Duration::from_secs_f64) }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        if let Some(limit) = self.limit {
            self.check(format!("runtime {:.3}s < {}s", elapsed.as_secs_f64(), limit.as_secs_f64()), elapsed < limit);
        }
        let ok = self.checks.iter().all(|(_, ok)| *ok);
        println!("criterion {} ({}): {}", self.id, self.title, if ok { "PASS" } else { "FAIL" });
        for (what, ok) in &self.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "FAILED" });
        }
        assert!(ok, "criterion {} failed", self.id);
    }
}

fn fig3() -> DimensionlessParams {
    DimensionlessParams::josephson_default()
}

#[test]
fn criterion_1_zero_imbalance_points() {
    let mut r = Report::new(1, "zero-imbalance fixed points", Some(1.0));
    let p = fig3();
    let points = fixed_points::all_fixed_points(&p).unwrap();
    let checks = fixed_points::verify_fixed_points(&p, &points).unwrap();
    let expect = [(Label::X1, MeanFieldState::new(0.0, 0.0, 1.0, FRAC_PI_2)), (Label::X4, MeanFieldState::new(0.0, PI, 0.5, -FRAC_PI_2))];
    for (label, want) in expect {
        match points.iter().zip(&checks).find(|(fp, _)| fp.label == label) {
            Some((fp, v)) => {
                let s = fp.state;
                let err = (s.z - want.z).abs().max((s.theta - want.theta).abs()).max((s.xi - want.xi).abs()).max((s.phi - want.phi).abs());
                r.check(format!("{label:?} at {:?}, coordinate error {err:e}", (s.z, s.theta, s.xi, s.phi)), err < 1e-12);
                r.check(format!("{label:?} residual {:e} < 1e-10", fp.residual), fp.residual < 1e-10 && v.accepted);
            }
            None => r.check(format!("{label:?} missing"), false),
        }
    }
    for label in [Label::X2, Label::X3] {
        let xi = zero_imbalance_candidate_xi(&p, label).unwrap();
        let listed = points.iter().any(|fp| fp.label == label);
        r.check(format!("{label:?} rejected (candidate xi = {xi})"), xi < 0.0 && !listed);
    }
    r.finish();
}

#[test]
fn criterion_2_finite_imbalance_cubic() {
    let mut r = Report::new(2, "finite-imbalance cubic", None);
    let p = fig3();
    let oracle = common::imbalance_by_iteration(&p, -1.0, 0.2);
    let x8: Vec<_> = fixed_points::all_fixed_points(&p).unwrap().into_iter().filter(|fp| fp.label == Label::X8).collect();
    r.check(format!("X8 pair found ({} points)", x8.len()), x8.len() == 2);
    for fp in &x8 {
        let s = (1.0 - fp.state.z * fp.state.z).sqrt();
        r.check(format!("s = {s:.6} vs iteration {oracle:.6} (diff {:e})", (s - oracle).abs()), (s - oracle).abs() < 1e-8);
        r.check(format!("|z| = {:.4}, xi = {:.4}", fp.state.z.abs(), fp.state.xi), (fp.state.z.abs() - 0.9845).abs() < 5e-5 && (fp.state.xi - 1.310).abs() < 1e-3);
        r.check(format!("X8 residual {:e}", fp.residual), fp.residual < 1e-10);
    }
    r.check(format!("s = {oracle:.4} ~ 0.1753"), (oracle - 0.1753).abs() < 5e-5);

    let bare = DimensionlessParams { e: 0.0, u: -4.0, ..p };
    let finite: Vec<_> = fixed_points::all_fixed_points(&bare).unwrap().into_iter().filter(|fp| fp.state.z != 0.0).collect();
    let want = 3f64.sqrt() / 2.0;
    let worst = finite.iter().map(|fp| (fp.state.z.abs() - want).abs()).fold(0.0, f64::max);
    let signs = finite.iter().any(|fp| fp.state.z > 0.0) && finite.iter().any(|fp| fp.state.z < 0.0);
    r.check(format!("u = -4, no pump: {} points at |z| = sqrt(3)/2 (err {worst:e})", finite.len()), finite.len() == 2 && signs && worst < 1e-12);
    let isolated = DimensionlessParams::bare_junction(-4.0, 1000);
    let finite: Vec<_> = fixed_points::all_fixed_points(&isolated).unwrap().into_iter().filter(|fp| fp.state.z != 0.0).collect();
    let worst = finite.iter().map(|fp| (fp.state.z.abs() - want).abs()).fold(0.0, f64::max);
    r.check(format!("u = -4, cavity absent: {} points (err {worst:e})", finite.len()), finite.len() == 2 && worst < 1e-12);
    r.finish();
}

#[test]
fn criterion_3_josephson_oscillation() {
    let mut r = Report::new(3, "Josephson oscillation", Some(5.0));
    let p = fig3();
    let traj = dynamics::integrate(&p, &MeanFieldState::new(0.0, 0.5, 0.0, 0.0), 100.0, &IntegrateOptions::default()).unwrap();
    let s = dynamics::trajectory_summary(&traj).unwrap();
    let zmax = s.z_max.max(-s.z_min);
    r.check(format!("max|z| = {zmax:.4} in [0.1, 0.25]"), (0.1..=0.25).contains(&zmax));
    r.check(format!("{} zero crossings >= 10", s.zero_crossings), s.zero_crossings >= 10);
    r.check(format!("max xi = {:.4} < 3", s.xi_max), s.xi_max < 3.0);
    r.check(format!("relative energy drift {:e} < 1e-8", s.energy_drift), s.energy_drift < 1e-8);
    r.check(format!("{} samples", traj.len()), traj.len() == 1001);
    r.finish();
}

#[test]
fn criterion_4_running_phase() {
    let mut r = Report::new(4, "running phase and bare-junction trapping", None);
    let p = fig3();
    let traj = dynamics::integrate(&p, &MeanFieldState::new(0.5, -PI, 0.0, 0.0), 100.0, &IntegrateOptions::default()).unwrap();
    let s = dynamics::trajectory_summary(&traj).unwrap();
    r.check(format!("z crosses zero ({} crossings)", s.zero_crossings), s.zero_crossings >= 1);
    r.check(format!("z_min = {:.4} < -0.5", s.z_min), s.z_min < -0.5);

    let lambda = p.u / 2.0;
    let h = common::bare_energy(lambda, 0.5, -PI);
    r.check(format!("Lambda = {lambda}, H = {h:.4} > 1"), (h - 1.616).abs() < 1e-3 && h > 1.0);
    let oracle = common::bare_junction_rk4(p.u, 0.5, -PI, 100.0, 200_000);
    let oracle_min = oracle.iter().map(|(z, _)| *z).fold(f64::INFINITY, f64::min);
    r.check(format!("oracle stays trapped, z_min = {oracle_min:.4}"), oracle_min > 0.0);
    let bare = reduced::pure_bjj(p.u, 0.5, -PI, 100.0, &ReducedOptions::default()).unwrap();
    let bare_min = bare.z.iter().copied().fold(f64::INFINITY, f64::min);
    r.check(format!("pure BJJ trapped, z_min = {bare_min:.4}"), bare_min > 0.0 && reduced::self_trapped(0.5, -PI, lambda));
    let worst = bare.z.iter().zip(oracle.iter().step_by(200)).map(|(a, (b, _))| (a - b).abs()).fold(0.0, f64::max);
    r.check(format!("pure BJJ vs RK4 oracle {worst:e} < 1e-6"), worst < 1e-6);
    r.finish();
}

#[test]
fn criterion_5_separatrix() {
    let mut r = Report::new(5, "separatrix", None);
    let p = fig3();
    let curve = fixed_points::separatrix_curve(&p, 720).unwrap();
    let want = 8f64.sqrt() / 3.0;
    let ext = common::separatrix_extremes(&p);
    r.check(format!("oracle top at z = {:.6} = sqrt(8)/3", ext[0].1), (ext[0].1 - want).abs() < 1e-15);
    r.check(format!("oracle side at theta = {:.6} = arccos(1/3)", ext[2].0), (ext[2].0 - (1.0f64 / 3.0).acos()).abs() < 1e-15);
    for (theta, z) in ext {
        let hit = curve.iter().map(|(t, zz)| (t - theta).abs().max((zz - z).abs())).fold(f64::INFINITY, f64::min);
        r.check(format!("curve passes ({theta:.6}, {z:.6}) within {hit:e}"), hit < 1e-10);
    }
    let worst = curve
        .iter()
        .map(|(t, z)| cavity_bjj::model::effective_detuning(&p, *z, *t).unwrap().abs())
        .fold(0.0, f64::max);
    r.check(format!("|detuning| on the curve <= {worst:e}"), worst < 1e-10);

    let mut rng = common::rng(5);
    let opts = ReducedOptions { tol: Tolerances::new(1e-10, 1e-12), stride: 0.5, ..Default::default() };
    let mut kept = 0;
    let mut seeds = 0;
    while seeds < 50 {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let theta: f64 = rng.gen_range(-PI..PI);
        let delta0 = cavity_bjj::model::effective_detuning(&p, z, theta).unwrap();
        // interior of the closed curve, away from it
        if delta0 < 0.5 {
            continue;
        }
        seeds += 1;
        let tr = reduced::integrate_reduced(&p, z, theta, 100.0, &opts).unwrap();
        if tr.truncated.is_none() && tr.detuning.iter().all(|d| *d > 0.0) && tr.times.last() == Some(&100.0) {
            kept += 1;
        }
    }
    r.check(format!("{kept}/50 interior seeds keep sign(detuning) up to tau = 100"), kept == 50);
    r.finish();
}

#[test]
fn criterion_6_wannier_pipeline() {
    let mut r = Report::new(6, "Wannier pipeline", None);
    let harmonic = DoubleWellSpec { form: WellForm::HarmonicBarrier { omega: 1.0, height: 0.0, width: 1.0 }, half_width: 8.0, points: 24000, mass: 1.0 };
    let pairs = wannier::solve_double_well(&harmonic, 4).unwrap();
    let worst = pairs.energies.iter().enumerate().map(|(n, e)| (e - (n as f64 + 0.5)).abs()).fold(0.0, f64::max);
    r.check(format!("harmonic levels n + 1/2 within {worst:e}"), worst < 1e-6);

    let spec = DoubleWellSpec::default();
    let pairs = wannier::solve_double_well(&spec, 5).unwrap();
    let basis = wannier::build_wannier(&pairs).unwrap();
    let (_, j, _) = wannier::hubbard_from_basis(&basis, &spec, 0.05, 0.2).unwrap();
    let split = 0.5 * (basis.e1 - basis.e0);
    let rel = (j - split).abs() / split;
    r.check(format!("J = {j:.8} vs (E1 - E0)/2 = {split:.8}, relative {rel:e}"), rel < 1e-6);

    let sigmas = wannier::log_space(pairs.dx.max(0.01), 100.0, 60);
    let curve = wannier::ratio_scan(&basis, &spec, &sigmas).unwrap();
    r.check("ratio monotone in sigma".to_string(), curve.monotone);
    let first = curve.points.iter().min_by(|a, b| a.sigma.total_cmp(&b.sigma)).unwrap();
    r.check(format!("ratio(sigma = {:.3}) = {:.5} > 0.98", first.sigma, first.ratio), first.ratio > 0.98);
    let over = curve.points.iter().map(|pt| pt.ratio.abs()).fold(0.0, f64::max);
    r.check(format!("|W12|/|W0| <= 1 over the scan (max {over:.6})"), over <= 1.0 + 1e-12);
    r.finish();
}

#[test]
fn criterion_7_quantum_validator() {
    let mut r = Report::new(7, "quantum validator", Some(60.0));
    let p = DimensionlessParams { d_c: -5.0, w0: -2.0, w12: -1.0, u: 3.0, e: 0.5, n_atoms: 6 };
    let basis = FockBasis::new(6, 30).unwrap();
    let h = quantum::build_hamiltonian(&p, basis).unwrap();
    r.check(format!("hermiticity defect {:e} < 1e-14", h.hermiticity_defect()), h.hermiticity_defect() < 1e-14);
    let conserving = h.entries().all(|(row, col, _)| {
        // hopping moves one atom, photon terms move none
        let (a, b) = (basis.state(row), basis.state(col));
        a.0.abs_diff(b.0) <= 1 && (a.0 == b.0 || a.1 == b.1)
    });
    let mut psi = quantum::coherent_initial_state(&MeanFieldState::new(0.3, 0.4, 0.5, 0.2), basis).unwrap();
    let first = quantum::expectations(&psi, &h);
    let (mut norm_drift, mut energy_drift, mut atoms_drift) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        psi = quantum::evolve(&psi, &h, 1.0, quantum::DEFAULT_TOLERANCE).unwrap();
        let o = quantum::expectations(&psi, &h);
        norm_drift = norm_drift.max((psi.norm() - 1.0).abs());
        energy_drift = energy_drift.max((o.energy - first.energy).abs() / first.energy.abs().max(1.0));
        atoms_drift = atoms_drift.max((o.atom_number - 6.0).abs());
    }
    r.check(format!("N_A conserved (drift {atoms_drift:e})"), conserving && atoms_drift < 1e-10);
    r.check(format!("norm drift {norm_drift:e} < 1e-10 over tau = 50"), norm_drift < 1e-10);
    r.check(format!("energy drift {energy_drift:e} < 1e-8 over tau = 50"), energy_drift < 1e-8);

    let cav = DimensionlessParams { d_c: -2.0, w0: 0.0, w12: 0.0, u: 0.0, e: 0.7, n_atoms: 1 };
    let basis = FockBasis::new(1, 40).unwrap();
    let h = quantum::build_hamiltonian(&cav, basis).unwrap();
    let mut psi = quantum::coherent_initial_state(&MeanFieldState::new(1.0, 0.0, 0.0, 0.0), basis).unwrap();
    let mut worst = 0.0f64;
    for k in 1..=20 {
        psi = quantum::evolve(&psi, &h, 0.25, quantum::DEFAULT_TOLERANCE).unwrap();
        let o = quantum::expectations(&psi, &h);
        let (re, im) = common::driven_cavity_alpha(2.0, 0.7, (0.0, 0.0), 0.25 * k as f64);
        worst = worst.max((o.a_re - re).abs()).max((o.a_im - im).abs()).max((o.photon_number - (re * re + im * im)).abs());
    }
    r.check(format!("driven cavity at M = 40 within {worst:e}"), worst < 1e-6);

    let free = DimensionlessParams { d_c: 0.0, w0: 0.0, w12: 0.0, u: 0.0, e: 0.0, n_atoms: 1 };
    let basis = FockBasis::new(1, 1).unwrap();
    let h = quantum::build_hamiltonian(&free, basis).unwrap();
    let mut psi = QuantumState::basis_state(basis, 1, 0);
    let mut worst = 0.0f64;
    for k in 1..=40 {
        psi = quantum::evolve(&psi, &h, 0.1, 1e-12).unwrap();
        let o = quantum::expectations(&psi, &h);
        worst = worst.max((o.z - common::rabi_z(0.1 * k as f64)).abs());
    }
    r.check(format!("Rabi oscillation within {worst:e}"), worst < 1e-8);
    r.finish();
}

#[test]
fn criterion_8_model_hierarchy() {
    let mut r = Report::new(8, "model hierarchy and Hamiltonian structure", None);
    let p = DimensionlessParams { d_c: -5.0, w0: -2.0, w12: 0.0, u: 3.0, e: 0.0, n_atoms: 1000 };
    let tol = Tolerances::new(1e-13, 1e-15);
    let ropts = ReducedOptions { tol, stride: 0.5, ..Default::default() };
    let fopts = IntegrateOptions { tol, stride: 0.5, max_energy_drift: None };
    let mut rng = common::rng(8);
    let mut worst = [0.0f64; 3];
    for _ in 0..5 {
        let z0: f64 = rng.gen_range(-0.9..0.9);
        let th0: f64 = rng.gen_range(-PI..PI);
        let full = dynamics::integrate(&p, &MeanFieldState::new(z0, th0, 0.0, 0.0), 50.0, &fopts).unwrap();
        let red = reduced::integrate_reduced(&p, z0, th0, 50.0, &ropts).unwrap();
        let bare = reduced::pure_bjj(p.u, z0, th0, 50.0, &ropts).unwrap();
        assert_eq!(full.len(), red.len());
        assert_eq!(full.len(), bare.len());
        for k in 0..full.len() {
            let a = (full.states[k].z, full.states[k].theta);
            let b = (red.z[k], red.theta[k]);
            let c = (bare.z[k], bare.theta[k]);
            let d = |x: (f64, f64), y: (f64, f64)| (x.0 - y.0).abs().max(common::wrap(x.1 - y.1).abs());
            worst[0] = worst[0].max(d(a, b));
            worst[1] = worst[1].max(d(a, c));
            worst[2] = worst[2].max(d(b, c));
        }
    }
    r.check(format!("full vs reduced {:e} < 1e-9", worst[0]), worst[0] < 1e-9);
    r.check(format!("full vs pure BJJ {:e} < 1e-9", worst[1]), worst[1] < 1e-9);
    r.check(format!("reduced vs pure BJJ {:e} < 1e-9", worst[2]), worst[2] < 1e-9);

    let q = fig3();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = [rng.gen_range(-0.95..0.95), rng.gen_range(-PI..PI), rng.gen_range(0.1..3.0), rng.gen_range(-PI..PI)];
        let want = polar_rhs(&q, &MeanFieldState::new(x[0], x[1], x[2], x[3])).unwrap();
        let got = common::flow_from_energy(&q, x, 1e-5);
        for i in 0..4 {
            worst = worst.max((want[i] - got[i]).abs() / want[i].abs().max(1.0));
        }
    }
    r.check(format!("equations = Hamiltonian flow on 1000 random states (rel {worst:e})"), worst < 1e-6);
    r.finish();
}
