//! Compares the numerically integrated first return of X- with its closed form.

use twofold_lab::analysis::first_return_minus;
use twofold_lab::integrator::IntegratorConfig;
use twofold_lab::NormalFormParams;

fn main() {
    let p = NormalFormParams::new(1.0, 1.0, 4.0, 1.0).unwrap();
    let cfg = IntegratorConfig::default();
    let mut worst = 0.0f64;
    for x in [0.1, 0.5, 1.0, 2.0] {
        for z in [-2.0, 0.0, 1.5] {
            let (xn, zn) = first_return_minus(&p, x, z, &cfg).unwrap();
            let (xa, za) = p.return_map_vartheta(x, z).unwrap();
            let err = (xn - xa).abs().max((zn - za).abs());
            worst = worst.max(err);
            println!("({x:4}, {z:5}) -> ({xn:+.10}, {zn:+.10})  error {err:.2e}");
        }
    }
    println!("largest error {worst:.2e}");
}
