//! Stationary states for the Josephson parameter set, with linear stability.

use cavity_bjj::fixed_points::{self, Label};
use cavity_bjj::DimensionlessParams;

fn main() -> cavity_bjj::Result<()> {
    let p = DimensionlessParams::josephson_default();
    let points = fixed_points::all_fixed_points(&p)?;
    let checks = fixed_points::verify_fixed_points(&p, &points)?;

    println!("{:<4} {:>9} {:>9} {:>8} {:>9} {:>10}  stability", "", "z", "theta", "xi", "phi", "residual");
    for (fp, v) in points.iter().zip(&checks) {
        let s = fp.state;
        let class = fp.stability.as_ref().map(|r| format!("{:?}", r.classification)).unwrap_or_else(|| "-".into());
        println!(
            "{:<4} {:>9.5} {:>9.5} {:>8.5} {:>9.5} {:>10.1e}  {class}{}",
            format!("{:?}", fp.label),
            s.z,
            s.theta,
            s.xi,
            s.phi,
            fp.residual,
            if v.near_separatrix { " (near separatrix)" } else { "" }
        );
    }
    for label in [Label::X2, Label::X3] {
        if let Some(xi) = fixed_points::zero_imbalance_candidate_xi(&p, label) {
            println!("{label:?}: candidate xi = {xi:.4} < 0, not physical");
        }
    }

    // attractive bare junction: z = ±sqrt(1 - 4/u²)
    let bare = DimensionlessParams::bare_junction(-4.0, 1000);
    for fp in fixed_points::all_fixed_points(&bare)?.iter().filter(|fp| fp.state.z != 0.0) {
        println!("u = -4, no cavity: z = {:+.12} (sqrt(3)/2 = {:.12})", fp.state.z, 3f64.sqrt() / 2.0);
    }
    Ok(())
}
