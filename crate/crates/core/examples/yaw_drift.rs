//! Hover while an unmodeled yaw torque spins the vehicle. Position is
//! controlled in the world frame, so the spin does not leak into it.

use triflap::config::preset;
use triflap::scenario::run_scenario;

fn main() {
    let cfg = preset("hover-yaw-drift").unwrap();
    let r = run_scenario(&cfg).unwrap();
    let recs = &r.outcome.log.records;
    let mut unwrapped = 0.0;
    for w in recs.windows(2) {
        unwrapped += triflap::geom::wrap_angle(w[1].euler[2] - w[0].euler[2]);
    }
    println!(
        "total yaw drift over {:.0} s: {:.0} deg",
        recs.last().unwrap().t,
        unwrapped.to_degrees()
    );
    println!(
        "position RMSE {:.2} mm, roll/pitch RMSE {:.2} / {:.2} deg",
        r.metrics.position_rmse_m.unwrap() * 1e3,
        r.metrics.roll_rmse_deg,
        r.metrics.pitch_rmse_deg
    );
}
