//! Adiabatic elimination of the cavity: reduced (z, θ) flow against the
//! full four-variable dynamics started on the slaved photon amplitude.

use cavity_bjj::reduced::{self, ReducedOptions};
use cavity_bjj::DimensionlessParams;

fn main() -> cavity_bjj::Result<()> {
    let p = DimensionlessParams::josephson_default();
    let opts = ReducedOptions::default();
    for (z0, theta0) in [(0.0, 0.5), (0.3, 0.0), (0.6, 2.5)] {
        let c = reduced::compare_full_vs_reduced(&p, z0, theta0, 50.0, &opts)?;
        println!(
            "z0 = {z0}, theta0 = {theta0}: max |dz| = {:.2e}, max |dtheta| = {:.2e}, min |delta| = {:.2}, separation {:.1} ({})",
            c.max_dz,
            c.max_dtheta,
            c.min_abs_detuning,
            c.scale_separation,
            if c.adiabatic_valid { "adiabatic" } else { "not adiabatic" }
        );
    }

    // w12 = 0, e = 0: the reduced model is the bare junction
    let off = DimensionlessParams { w12: 0.0, e: 0.0, ..p };
    let a = reduced::integrate_reduced(&off, 0.4, 0.3, 50.0, &opts)?;
    let b = reduced::pure_bjj(off.u, 0.4, 0.3, 50.0, &opts)?;
    let gap = a.z.iter().zip(&b.z).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("decoupled cavity: reduced vs bare junction max |dz| = {gap:.1e}");
    Ok(())
}
