//! Build a scenario from TOML text, run it, and write the output files.

use triflap::config::ScenarioConfig;
use triflap::scenario::{run_scenario, write_outputs};

const SCENARIO: &str = r#"
name = "circle"
controller = "pid"
seed = 1

[pid]
max_tilt = 0.4

[[mission.phases]]
kind = "takeoff"
altitude = 1.0

[[mission.phases]]
kind = "track"
[mission.phases.trajectory]
kind = "line"
start = [0.0, 0.0, 1.0]
end = [0.5, 0.0, 1.0]
duration = 3.0

[[mission.phases]]
kind = "track"
[mission.phases.trajectory]
kind = "circle"
center = [0.0, 0.0, 1.0]
radius = 0.5
angular_rate = 1.0
duration = 6.283185307179586

[[mission.phases]]
kind = "land"
"#;

fn main() {
    let cfg = ScenarioConfig::from_toml(SCENARIO).expect("valid scenario");
    let r = run_scenario(&cfg).unwrap();
    let dir = std::env::temp_dir().join("triflap-custom");
    for path in write_outputs(&dir, &cfg, &r).unwrap() {
        println!("wrote {}", path.display());
    }
    println!(
        "{}: {} with position RMSE {:.2} mm",
        cfg.name,
        r.outcome.termination.label(),
        r.metrics.position_rmse_m.unwrap() * 1e3
    );
}
