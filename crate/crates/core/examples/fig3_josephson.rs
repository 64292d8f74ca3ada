//! Josephson oscillations with the cavity slaved to the atoms.
//!
//! Run with `cargo run --release --example fig3_josephson`.

use cavity_bjj::dynamics::{self, IntegrateOptions};
use cavity_bjj::{DimensionlessParams, MeanFieldState};

fn main() -> cavity_bjj::Result<()> {
    let p = DimensionlessParams::josephson_default();
    let traj = dynamics::integrate(&p, &MeanFieldState::new(0.0, 0.5, 0.0, 0.0), 100.0, &IntegrateOptions::default())?;
    let s = dynamics::trajectory_summary(&traj)?;

    println!("{:>6} {:>10} {:>10} {:>8} {:>10}", "tau", "z", "theta", "xi", "nu_eff");
    for k in (0..traj.len()).step_by(50) {
        let (x, d) = (traj.states[k], traj.derived[k]);
        println!("{:>6.1} {:>10.5} {:>10.5} {:>8.4} {:>10.6}", traj.times[k], x.z, x.theta, x.xi, d.nu_eff);
    }
    println!();
    println!("z in [{:.4}, {:.4}], {} zero crossings", s.z_min, s.z_max, s.zero_crossings);
    println!("max photon amplitude {:.4}", s.xi_max);
    println!("relative energy drift {:.2e} ({} steps)", s.energy_drift, traj.meta.stats.accepted);
    Ok(())
}
