//! How far passage orbits dip below the switching plane in the two entry cases.

use twofold_lab::analysis::{dip_depth, GridSpec, SectionGeometry};
use twofold_lab::integrator::{IntegratorConfig, Rect};
use twofold_lab::{NormalFormParams, PhiFamily, RegularizationFn};

fn main() {
    let geom = SectionGeometry {
        delta: 0.5,
        nu: 0.1,
        zeta_w: 0.02,
        i_in: (-1.0, -0.5),
        r_out: Rect::new((0.5, 3.5), (-0.5, 1.5)).unwrap(),
        varsigma: 0.1,
    };
    let phi = RegularizationFn::new(PhiFamily::Arctan);
    for (name, p) in [("p1", NormalFormParams::new(1.0, 1.0, 4.0, 1.0)), ("p2", NormalFormParams::new(1.0, 1.0, 5.0, 2.0))] {
        let p = p.unwrap();
        for eps in [1e-2, 1e-3, 1e-4] {
            let r = dip_depth(&p, &phi, eps, &geom, &GridSpec { ny: 3, nz: 3 }, &IntegratorConfig::default()).unwrap();
            println!("{name} {:?} eps {eps:.0e}: min y = {:+.4e} = {:+.3} eps", r.case, r.dip, r.dip / eps);
        }
    }
}
