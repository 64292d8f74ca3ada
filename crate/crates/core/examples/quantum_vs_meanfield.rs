//! Exact small-N evolution against the mean-field trajectory. The time at
//! which |Δz| first exceeds 0.1 grows with the atom number.

use cavity_bjj::ode::Tolerances;
use cavity_bjj::quantum;
use cavity_bjj::{DimensionlessParams, MeanFieldState};

fn main() -> cavity_bjj::Result<()> {
    let p = DimensionlessParams { d_c: -5.0, w0: -2.0, w12: -1.0, u: 3.0, e: 0.0, n_atoms: 20 };
    let init = MeanFieldState::new(0.5, 0.0, 0.0, 0.0);

    println!("{:>4} {:>6} {:>12} {:>10} {:>10}", "N", "dim", "breakdown", "max |dz|", "E drift");
    for n in [5, 10, 20, 40] {
        let d = quantum::compare_meanfield(&p, &init, n, 1, 40.0, 0.05, Tolerances::default())?;
        let dim = (n + 1) * 2;
        let t = d.breakdown_time.map(|t| format!("{t:.2}")).unwrap_or_else(|| "> 40".into());
        println!("{n:>4} {dim:>6} {t:>12} {:>10.4} {:>10.1e}", d.max_dz, d.energy_drift);
    }
    Ok(())
}
