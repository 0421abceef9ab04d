//! The critical manifold of the regularization and an orbit of X_eps that tracks it.

use twofold_lab::integrator::{integrate_regularized, IntegratorConfig};
use twofold_lab::regularization::{critical_manifold_h, layer_stability};
use twofold_lab::{NormalFormParams, PhiFamily, RegularizationFn};

fn main() {
    let p = NormalFormParams::new(1.0, 1.0, 4.0, 1.0).unwrap();
    for family in [PhiFamily::Arctan, PhiFamily::SotomayorTeixeira] {
        let phi = RegularizationFn::new(family);
        println!("{family}:");
        for s in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let h = critical_manifold_h(&p, &phi, s).unwrap();
            let (kind, rate) = layer_stability(&p, &phi, -1.0, -s).unwrap();
            println!("  z = {s} x: h = {h:+.6}, {kind:?} on x < 0 (rate {rate:.3})");
        }
        let eps = 1e-3;
        let tr = integrate_regularized(&p, &phi, eps, [-1.0, 0.0, -1.0], (0.0, 0.5), &IntegratorConfig::default(), &[])
            .unwrap();
        for (t, q) in tr.samples.iter().step_by(tr.samples.len().div_ceil(5).max(1)) {
            let h = critical_manifold_h(&p, &phi, q[2] / q[0]).unwrap();
            println!("  eps = {eps}, t = {t:.3}: y/eps = {:+.5}, h = {h:+.5}", q[1] / eps);
        }
    }
}
