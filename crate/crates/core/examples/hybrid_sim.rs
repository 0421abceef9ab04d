//! Hybrid Filippov runs: crossing, sliding into the two-fold, and escape through the visible fold.

use twofold_lab::integrator::{integrate_hybrid_filippov, HybridConfig, IntegratorConfig};
use twofold_lab::NormalFormParams;

fn main() {
    let p = NormalFormParams::new(1.0, 1.0, 4.0, 1.0).unwrap();
    let sys = p.pws_system();
    for start in [[-1.0, 0.0, -1.0], [1.0, -0.5, -3.0], [2.0, -0.5, 1.0], [0.5, 0.3, -2.0]] {
        let tr = integrate_hybrid_filippov(&sys, start, 10.0, &IntegratorConfig::default(), &HybridConfig::default())
            .expect("hybrid run");
        let end = tr.final_state();
        println!("start {start:?}: stopped at t = {:.4}, nonunique = {}", tr.final_time(), tr.nonunique);
        println!("  end ({:+.5}, {:+.5}, {:+.5})", end[0], end[1], end[2]);
        let labels: Vec<String> = tr.events.iter().map(|e| e.kind.label()).collect();
        println!("  events {}", labels.join(" "));
    }
}
