//! Throttle to flapping frequency and back, and the crawl cap derived
//! from the hover throttle.

use triflap::actuation::{frequency_to_throttle, throttle_fit, throttle_to_frequency, VehicleParams, STANDARD_GRAVITY};

fn main() {
    println!("deadband below throttle {:.4}", throttle_fit::deadband_throttle());
    println!("{:>8} {:>10} {:>10}", "throttle", "freq (Hz)", "inverse");
    for i in 0..=10 {
        let thr = i as f64 / 10.0;
        let f = throttle_to_frequency(thr);
        let inv = frequency_to_throttle(f)
            .map(|t| format!("{t:.4}"))
            .unwrap_or_else(|e| e.to_string());
        println!("{thr:>8.2} {f:>10.3} {inv:>10}");
    }
    let p = VehicleParams::default();
    let f_hover = p.hover_frequency(STANDARD_GRAVITY);
    println!(
        "hover {:.3} Hz at throttle {:.4}; crawl cap {:.3} Hz",
        f_hover,
        frequency_to_throttle(f_hover).unwrap(),
        p.crawl_frequency_cap(STANDARD_GRAVITY)
    );
}
