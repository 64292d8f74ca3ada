//! Starting at z = 0.5, θ = -π: the bare junction would stay self-trapped
//! (Λ = 6, H ≈ 1.616), but the cavity-modified tunneling lets z change sign.

use std::f64::consts::PI;

use cavity_bjj::dynamics::{self, IntegrateOptions};
use cavity_bjj::reduced::{self, ReducedOptions};
use cavity_bjj::{DimensionlessParams, MeanFieldState};

fn main() -> cavity_bjj::Result<()> {
    let p = DimensionlessParams::josephson_default();
    let (z0, theta0) = (0.5, -PI);

    let full = dynamics::integrate(&p, &MeanFieldState::new(z0, theta0, 0.0, 0.0), 100.0, &IntegrateOptions::default())?;
    let s = dynamics::trajectory_summary(&full)?;
    let bare = reduced::pure_bjj(p.u, z0, theta0, 100.0, &ReducedOptions::default())?;
    let bare_min = bare.z.iter().copied().fold(f64::INFINITY, f64::min);

    let lambda = p.u / 2.0;
    println!("bare junction: Lambda = {lambda}, H = {:.4}", reduced::bare_energy(lambda, z0, theta0));
    println!("  self-trapped: {}, z_min = {bare_min:.4}", reduced::self_trapped(z0, theta0, lambda));
    println!("with cavity: z in [{:.4}, {:.4}], {} sign changes", s.z_min, s.z_max, s.zero_crossings);

    println!("\n{:>6} {:>9} {:>9}", "tau", "z", "z_bare");
    for k in (0..full.len()).step_by(40) {
        println!("{:>6.1} {:>9.4} {:>9.4}", full.times[k], full.states[k].z, bare.z[k]);
    }
    Ok(())
}
