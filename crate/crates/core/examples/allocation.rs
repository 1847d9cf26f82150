//! Control allocation: hover trim, a round trip through the mixer, and
//! what clamping does to an infeasible request.

use triflap::actuation::{
    allocation_matrix, forward_mix, inverse_mix, throttle_fit, throttle_to_frequency, ControlWrench, VehicleParams,
    STANDARD_GRAVITY,
};

fn main() {
    let p = VehicleParams::default();
    let b = allocation_matrix(&p).expect("nonsingular geometry");
    println!("allocation matrix B (rows: thrust, roll, pitch):{b:.5}");

    let weight = p.weight(STANDARD_GRAVITY);
    let hover = inverse_mix(&ControlWrench::new(weight, 0.0, 0.0), &p).unwrap();
    println!("hover trim: {:.3?} Hz (mg = {weight:.4} N)", hover.freq);

    let request = ControlWrench::new(weight, 2e-4, -1e-4);
    let cmd = inverse_mix(&request, &p).unwrap();
    let back = forward_mix(&cmd, &p);
    println!(
        "request u = ({:.4}, {:.2e}, {:.2e}) -> f = {:.3?} -> u = ({:.4}, {:.2e}, {:.2e})",
        request.thrust,
        request.roll_torque,
        request.pitch_torque,
        cmd.freq,
        back.thrust,
        back.roll_torque,
        back.pitch_torque
    );

    let greedy = ControlWrench::new(weight, 0.02, 0.0);
    let clamped = inverse_mix(&greedy, &p).unwrap();
    println!(
        "infeasible roll request -> f = {:.3?}, saturated = {:?}",
        clamped.freq, clamped.saturated
    );

    let full = forward_mix(&triflap::actuation::ActuatorCommand::new([p.max_frequency; 3]), &p);
    println!(
        "all modules at {} Hz lift {:.1} g; the throttle fit tops out at {:.2} Hz (throttle {:.3}, {:.2} Hz at full stick)",
        p.max_frequency,
        full.thrust / STANDARD_GRAVITY * 1000.0,
        throttle_fit::max_frequency(),
        throttle_fit::vertex_throttle(),
        throttle_to_frequency(1.0)
    );
}
