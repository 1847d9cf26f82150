//! The geometric controller and the cascaded PID stack on the same
//! scenarios, side by side.

use triflap::config::preset;
use triflap::mission::ControllerKind;
use triflap::scenario::run_scenario;

fn main() {
    let scenarios = ["hover", "hover-noisy", "hover-yaw-drift", "multi-mode-mission"];
    println!(
        "| {:<18} | {:<4} | {:>14} | {:>15} | {:>12} | {:>16} |",
        "scenario", "ctrl", "roll RMSE (deg)", "pitch RMSE (deg)", "pos RMSE (mm)", "steady-state (mm)"
    );
    for name in scenarios {
        for ctrl in [ControllerKind::Se3, ControllerKind::Pid] {
            let mut cfg = preset(name).unwrap();
            cfg.controller = ctrl;
            let r = run_scenario(&cfg).unwrap();
            let m = &r.metrics;
            println!(
                "| {:<18} | {:<4} | {:>14.3} | {:>15.3} | {:>12.2} | {:>16.2} |",
                name,
                ctrl.to_string(),
                m.roll_rmse_deg,
                m.pitch_rmse_deg,
                m.position_rmse_m.unwrap_or(f64::NAN) * 1e3,
                m.steady_state_rmse_m.unwrap_or(f64::NAN) * 1e3
            );
        }
    }
}
