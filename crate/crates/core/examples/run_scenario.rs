//! Runs a JSON scenario file the same way the binary does.
//!
//! `cargo run --example run_scenario -- configs/p1.json out/p1`

use std::path::PathBuf;

use twofold_lab::scenario::{self, ScenarioConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "configs/eigen-report.json".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "twofold-out".into()));
    let cfg = ScenarioConfig::load(&config).unwrap_or_else(|e| panic!("{}: {e}", config.display()));
    let outcome = scenario::run(&cfg, &out).expect("run");
    println!("{} ({} errors)", outcome.summary_path.display(), outcome.errors);
    print!("{}", std::fs::read_to_string(&outcome.summary_path).unwrap());
}
