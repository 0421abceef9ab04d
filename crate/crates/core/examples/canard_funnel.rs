//! Filippov orbits started in the funnel reach the two-fold tangent to the weak canard.

use twofold_lab::analysis::{canard_arrival, funnel_starts, strong_canard_start};
use twofold_lab::integrator::{HybridConfig, IntegratorConfig};
use twofold_lab::NormalFormParams;

fn main() {
    let p = NormalFormParams::new(1.0, 1.0, 4.0, 1.0).unwrap();
    let (cfg, hcfg) = (IntegratorConfig::default(), HybridConfig::default());
    let mut starts = funnel_starts(&p, 1.0, 8).unwrap();
    starts.push(strong_canard_start(&p, 1.0).unwrap());
    println!("{:>9} {:>9} {:>8} {:>11} {:>11}", "x0", "z0", "time", "angle weak", "angle strong");
    for s in starts {
        let a = canard_arrival(&p, s, 100.0, &cfg, &hcfg).unwrap();
        println!(
            "{:>9.4} {:>9.4} {:>8.3} {:>11.2e} {:>11.2e}{}",
            s[0],
            s[2],
            a.arrival_time,
            a.angle_weak,
            a.angle_strong,
            if a.reached_two_fold { "" } else { "  (stopped early)" }
        );
    }
}
