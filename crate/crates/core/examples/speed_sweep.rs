//! Straight legs flown in shrinking times: how tracking error and tilt
//! grow with speed.

use triflap::config::preset;
use triflap::scenario::run_scenario;

fn main() {
    let cfg = preset("speed-sweep").unwrap();
    let r = run_scenario(&cfg).unwrap();
    let recs = &r.outcome.log.records;
    let legs = [(0.0, 2.0), (2.0, 4.0), (4.0, 6.0), (6.0, 8.0)];
    println!(
        "{:>9} {:>13} {:>14} {:>13}",
        "leg (m)", "peak v (m/s)", "max error (mm)", "max tilt (deg)"
    );
    for (a, b) in legs {
        let rows: Vec<_> = recs
            .iter()
            .filter(|r| r.mode.is_airborne() && r.reference[0] > a && r.reference[0] < b)
            .collect();
        let v = rows.iter().map(|r| r.velocity[0].abs()).fold(0.0, f64::max);
        let e = rows
            .iter()
            .map(|r| {
                (0..3)
                    .map(|i| (r.position[i] - r.reference[i]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        let tilt = rows
            .iter()
            .map(|r| r.euler[0].hypot(r.euler[1]).to_degrees())
            .fold(0.0, f64::max);
        println!("{:>4}-{:<4} {v:>13.2} {:>14.2} {tilt:>13.1}", a, b, e * 1e3);
    }
    println!("saturated fraction of samples: {:.3}", r.metrics.saturation_fraction);
}
