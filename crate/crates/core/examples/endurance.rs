//! Battery endurance in hover and while crawling, from the calibrated
//! current model.

use triflap::actuation::{ActuatorCommand, VehicleParams, STANDARD_GRAVITY};
use triflap::config::preset;
use triflap::scenario::run_scenario;

fn main() {
    let p = VehicleParams::default();
    let f_hover = p.hover_frequency(STANDARD_GRAVITY);
    let f_crawl = p.crawl_frequency_cap(STANDARD_GRAVITY);
    println!(
        "current model: {:.1} mA avionics + {:.2} mA + {:.3} mA/Hz per active module",
        p.power.avionics_ma, p.power.module_c0_ma, p.power.module_c1_ma_per_hz
    );
    println!(
        "hover draw {:.0} mA, crawl draw {:.0} mA",
        p.power.current_ma(&ActuatorCommand::new([f_hover; 3])),
        p.power.current_ma(&ActuatorCommand::new([0.0, f_crawl, f_crawl]))
    );
    for name in ["endurance-hover", "endurance-crawl"] {
        let r = run_scenario(&preset(name).unwrap()).unwrap();
        let last = r.outcome.log.last().unwrap();
        println!(
            "{name}: battery empty after {:.1} s ({:.2} min), travelled x = {:.2} m",
            r.metrics.endurance_s.unwrap(),
            r.metrics.endurance_s.unwrap() / 60.0,
            last.position[0]
        );
    }
}
