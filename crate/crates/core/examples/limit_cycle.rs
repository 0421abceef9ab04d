//! A limit cycle through the two-fold region from an affine global return.

use twofold_lab::analysis::{find_limit_cycle, GlobalReturn, NewtonOptions, SectionGeometry};
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
    let g = GlobalReturn { offset: [0.01, -0.75], matrix: [[0.005, 0.0], [0.0, 0.2]], anchor: None };
    let phi = RegularizationFn::new(PhiFamily::Arctan);
    let u = p.u_out(geom.nu);
    for eps in [1e-2, 1e-3, 1e-4] {
        let lc = find_limit_cycle(&p, &phi, eps, &geom, &g, &IntegratorConfig::default(), &NewtonOptions::default())
            .expect("fixed point");
        let [x, z] = lc.fixed_point;
        println!(
            "eps {eps:.0e}: p* = ({x:.6}, {z:.6}), distance to exit point {:.4}, {} Newton steps, max |Floquet| {:.2e}",
            (x - u[0]).hypot(z - u[2]),
            lc.iterations,
            lc.max_floquet_modulus()
        );
    }
}
