//! Ground crawling along a lemniscate with the dual-loop controller.

use triflap::config::preset;
use triflap::ground::figure_eight_peak_speed;
use triflap::mission::Phase;
use triflap::scenario::run_scenario;

fn main() {
    let cfg = preset("figure-eight-ground").unwrap();
    if let Phase::CrawlFigureEight { amplitude, period, .. } = cfg.mission.phases[0] {
        println!(
            "lemniscate A = {amplitude} m, T = {period} s, peak reference speed {:.2} cm/s",
            100.0 * figure_eight_peak_speed(amplitude, period)
        );
    }
    let r = run_scenario(&cfg).unwrap();
    let m = &r.metrics;
    println!(
        "cross-track mean {:.2} cm, max {:.2} cm; top crawl speed {:.2} cm/s",
        100.0 * m.cross_track_mean_m.unwrap(),
        100.0 * m.cross_track_max_m.unwrap(),
        100.0 * m.max_crawl_speed_mps.unwrap()
    );
    println!("{:>6} {:>8} {:>8}", "t", "x", "y");
    for rec in r.outcome.log.records.iter().step_by(100) {
        println!("{:>6.1} {:>8.3} {:>8.3}", rec.t, rec.position[0], rec.position[1]);
    }
}
