//! Two-mode parameters from a quartic double well, and how the ratio
//! W12/W0 falls off as the cavity waist grows past the barrier width.

use cavity_bjj::wannier::{self, CavityGeometry, DoubleWellSpec};

fn main() -> cavity_bjj::Result<()> {
    let spec = DoubleWellSpec::default();
    let geom = CavityGeometry { sigma: 0.5, k: 2.0, length: 50.0, l_h: 0.2, u0: -1.0, eta: 2.0, delta_c: -20.0 };
    let (report, basis) = wannier::derive_params(&spec, &geom, 0.05, 1000, 2.0)?;

    let h = report.hubbard;
    println!("levels: {:.6} {:.6} {:.6}", basis.e0, basis.e1, basis.e2);
    println!("J = {:.6e}  (E1 - E0)/2 = {:.6e}", h.j, 0.5 * (basis.e1 - basis.e0));
    println!("eps = {:.5}, U = {:.5e}, W0 = {:.5e}, W12 = {:.5e}", h.eps, h.u, h.w0, h.w12);
    println!("left fraction of w1: {:.6}", report.basis.left_fraction);
    println!("two-mode margin {:.1} (valid: {})", report.validity.margin, report.validity.valid);
    let d = report.dimensionless;
    println!("dimensionless: d_c = {:.3}, w0 = {:.3}, w12 = {:.3}, u = {:.3}, e = {:.3}", d.d_c, d.w0, d.w12, d.u, d.e);

    let curve = &report.ratio_curve;
    println!("\nbarrier width {:.4}", curve.barrier_width);
    println!("{:>10} {:>12} {:>10}", "sigma", "sigma/width", "W12/W0");
    for pt in curve.points.iter().step_by(5) {
        println!("{:>10.4} {:>12.4} {:>10.6}", pt.sigma, pt.sigma_over_width, pt.ratio);
    }
    println!("monotone: {}", curve.monotone);
    Ok(())
}
