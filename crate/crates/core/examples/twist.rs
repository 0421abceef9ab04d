//! Rotation of the slow-manifold tangent along the weak canard for several node ratios.

use twofold_lab::analysis::variational_twist;
use twofold_lab::integrator::IntegratorConfig;
use twofold_lab::{NormalFormParams, PhiFamily, RegularizationFn};

fn main() {
    let phi = RegularizationFn::new(PhiFamily::Arctan);
    let sets = [(1.0, 1.0, 4.0, 1.0), (1.0, 1.0, 5.0, 2.0), (1.0, 1.0, 6.245, 1.5)];
    for (b, beta, c, gamma) in sets {
        let p = NormalFormParams::new(b, beta, c, gamma).unwrap();
        for mu in [0.1, 0.05] {
            match variational_twist(&p, &phi, mu, &IntegratorConfig::default()) {
                Ok(r) => println!(
                    "({b}, {beta}, {c}, {gamma}) mu = {mu}: xi = {:.4}, n = {}, sign {:+}, out {:?}, weber mismatch {:.1e}",
                    r.xi,
                    r.n,
                    r.zeta_sign,
                    r.varpi_out_normalized.map(|v| (v * 1e4).round() / 1e4),
                    r.weber_residual
                ),
                Err(e) => println!("({b}, {beta}, {c}, {gamma}) mu = {mu}: {e}"),
            }
        }
    }
}
