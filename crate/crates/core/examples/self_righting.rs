//! Recovery from tipped poses on the ground.

use triflap::actuation::VehicleParams;
use triflap::geom::{EulerZxy, Vec3, VehicleState};
use triflap::mission::{self_right_step, SelfRightManeuver};

fn main() {
    let p = VehicleParams::default();
    let dt = 1e-3;
    println!("{:>6} {:>6} {:>10} {:>8}", "roll", "pitch", "upright at", "modules");
    for (roll, pitch) in [(180.0, 0.0), (120.0, 0.0), (-100.0, 0.0), (0.0, -150.0), (30.0, 95.0)] {
        let state = VehicleState::at_rest(
            Vec3::zeros(),
            EulerZxy::new(f64::to_radians(roll), f64::to_radians(pitch), 0.3).to_rotation(),
        );
        let m = SelfRightManeuver::plan(&state, &p, 0.5);
        let cmd = m.command(&p);
        let mut t = 0.0;
        let done = loop {
            match self_right_step(&state, &m, t, 5.0) {
                Ok(next) if next.attitude.tilt() < 5f64.to_radians() => break Some(t),
                Ok(_) => t += dt,
                Err(_) => break None,
            }
        };
        let active = format!("{:?}", (0..3).filter(|i| cmd.freq[*i] > 0.0).collect::<Vec<_>>());
        match done {
            Some(t) => println!("{roll:>6.0} {pitch:>6.0} {t:>9.3}s {active:>8}"),
            None => println!("{roll:>6.0} {pitch:>6.0} {:>10} {active:>8}", "timeout"),
        }
    }
}
