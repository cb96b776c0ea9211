//! Load a scenario file, run it and print its metrics table.
//!
//! cargo run --example run_scenario -- crates/core/scenarios/relay_overflow.json

use std::path::PathBuf;

use gospace::harness::{load_scenario, run_scenario};

fn main() {
    let path = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/dtn_mars_relay.json")
    });
    let cfg = match load_scenario(&path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            std::process::exit(2);
        }
    };
    let report = run_scenario(&cfg, None).unwrap();
    print!("{}", report.metrics.to_csv());
}
