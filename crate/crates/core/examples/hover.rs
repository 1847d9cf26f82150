//! Hover recovery from a 5 cm offset with the geometric controller.

use triflap::config::preset;
use triflap::scenario::run_scenario;

fn main() {
    let cfg = preset("hover").unwrap();
    let r = run_scenario(&cfg).unwrap();
    println!("{:>5} {:>10}", "t (s)", "error (mm)");
    for rec in r.outcome.log.records.iter().step_by(25).take(13) {
        let e: f64 = (0..3)
            .map(|i| (rec.position[i] - rec.reference[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        println!("{:>5.2} {:>10.3}", rec.t, e * 1e3);
    }
    let m = &r.metrics;
    println!(
        "settled inside 1 cm at {:.2} s; steady-state RMSE {:.2e} m",
        m.settle_time_s.unwrap_or(f64::NAN),
        m.steady_state_rmse_m.unwrap_or(f64::NAN)
    );
}
