//! Fly over an obstacle: cruise, climb, descend, continue, land.

use triflap::config::preset;
use triflap::scenario::run_scenario;

fn main() {
    let cfg = preset("obstacle-cross").unwrap();
    let r = run_scenario(&cfg).unwrap();
    println!("{:>6} {:>7} {:>7} {:>9} {:>9}", "t", "x", "z", "z_ref", "mode");
    for rec in r.outcome.log.records.iter().step_by(50) {
        println!(
            "{:>6.2} {:>7.3} {:>7.3} {:>9.3} {:>9}",
            rec.t, rec.position[0], rec.position[2], rec.reference[2], rec.mode
        );
    }
    println!(
        "tracking RMSE {:.2} mm, peak altitude {:.3} m",
        r.metrics.position_rmse_m.unwrap() * 1e3,
        r.outcome.log.records.iter().map(|r| r.position[2]).fold(0.0, f64::max)
    );
}
