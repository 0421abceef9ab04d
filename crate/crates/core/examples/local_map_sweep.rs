//! The passage map from x = -delta to y = nu over decreasing epsilon.

use twofold_lab::analysis::{local_map_sweep, GridSpec, SectionGeometry};
use twofold_lab::integrator::{IntegratorConfig, Rect};
use twofold_lab::{NormalFormParams, PhiFamily, RegularizationFn};

fn main() {
    let p = NormalFormParams::new(1.0, 1.0, 4.0, 1.0).unwrap();
    let geom = SectionGeometry {
        delta: 0.5,
        nu: 0.1,
        zeta_w: 0.02,
        i_in: (-1.0, -0.5),
        r_out: Rect::new((0.5, 3.5), (-0.5, 1.5)).unwrap(),
        varsigma: 0.1,
    };
    let phi = RegularizationFn::new(PhiFamily::Arctan);
    let eps = [1e-2, 1e-3, 1e-4];
    let sweep = local_map_sweep(&p, &phi, &eps, &geom, &GridSpec { ny: 4, nz: 4 }, &IntegratorConfig::default()).unwrap();
    let u = p.u_out(geom.nu);
    println!("distinguished exit point ({:.6}, {:.6})", u[0], u[2]);
    println!("{:>8} {:>10} {:>10} {:>10} {:>8}", "eps", "diam", "dist", "|DL|", "failed");
    for r in &sweep {
        println!(
            "{:>8.0e} {:>10.5} {:>10.5} {:>10.4} {:>8}",
            r.epsilon,
            r.diam_image,
            r.max_dist_to_u_out,
            r.max_op_norm_jac,
            r.failures.len()
        );
    }
}
