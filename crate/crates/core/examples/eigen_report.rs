//! Eigenstructure of the sliding node and the case split for a few parameter sets.

use twofold_lab::normal_form::characteristic_residual;
use twofold_lab::NormalFormParams;

fn main() {
    let sets = [("p1", (1.0, 1.0, 4.0, 1.0)), ("p2", (1.0, 1.0, 5.0, 2.0)), ("near-integer", (1.0, 0.9005, 1.0, -0.9))];
    for (name, (b, beta, c, gamma)) in sets {
        let p = NormalFormParams { b, beta, c, gamma };
        let a = p.check_assumption_a();
        println!("{name}: discriminant {:.4}, (A) {}, (B) {}", a.discriminant, a.holds, p.check_assumption_b(1e-3));
        let Ok(e) = p.eigen_data() else { continue };
        println!("  lambda = ({:.6}, {:.6}), xi = {:.6}, n = {}", e.lambda_minus, e.lambda_plus, e.xi, e.n);
        println!("  chi = ({:.6}, {:.6}), residual {:.1e}", e.chi_minus, e.chi_plus, characteristic_residual(&p, &e));
        let lines = p.canard_lines().unwrap();
        println!("  strong canard z = {:.4} x, weak canard z = {:.4} x", lines.strong.slope, lines.weak.slope);
        match p.classify_case((-1.0, -0.5), 0.5) {
            Ok(case) => println!("  entry window z in [-1, -0.5] at x = -0.5: {case:?}"),
            Err(err) => println!("  entry window: {err}"),
        }
    }
}
