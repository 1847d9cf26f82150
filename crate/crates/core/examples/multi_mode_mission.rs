//! Crawl, take off, hover and land, with the event log and a determinism
//! check.

use triflap::config::preset;
use triflap::scenario::run_scenario;

fn main() {
    let cfg = preset("multi-mode-mission").unwrap();
    let a = run_scenario(&cfg).unwrap();
    for e in &a.outcome.events {
        println!("{:>7.2}  {}", e.t, serde_json::to_string(&e.kind).unwrap());
    }
    let modes: Vec<String> = a.outcome.mode_sequence().iter().map(|m| m.to_string()).collect();
    println!("mode sequence: {}", modes.join(" -> "));
    let b = run_scenario(&cfg).unwrap();
    println!(
        "second run byte-identical: {}",
        a.outcome.log.to_csv() == b.outcome.log.to_csv()
    );
}
