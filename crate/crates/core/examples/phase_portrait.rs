//! Reduced-model phase portrait rendered to SVG.
//!
//! `cargo run --release --example phase_portrait -- [u] [out.svg]`

use std::path::PathBuf;

use cavity_bjj::output::{portrait_svg, write_atomic};
use cavity_bjj::reduced::{self, PortraitSpec};
use cavity_bjj::DimensionlessParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let u: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(12.0);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "phase_portrait.svg".into()));

    let p = DimensionlessParams { u, ..DimensionlessParams::josephson_default() };
    let spec = PortraitSpec { n_theta: 201, n_z: 201, ..Default::default() };
    let grid = reduced::render_portrait(&p, &spec)?;

    let truncated = grid.trajectories.iter().filter(|t| t.truncated.is_some()).count();
    println!("u = {u}: {} trajectories ({truncated} stopped at the separatrix)", grid.trajectories.len());
    println!("separatrix: {} points", grid.separatrix.len());
    for fp in &grid.fixed_points {
        println!("  {:?} at theta = {:+.4}, z = {:+.4}", fp.label, fp.theta, fp.z);
    }
    write_atomic(&out, portrait_svg(&grid).as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}
