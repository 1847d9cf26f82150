//! Flatness feedforward along a horizontal circle, checked against finite
//! differences of the desired attitude.

use triflap::actuation::{VehicleParams, STANDARD_GRAVITY};
use triflap::geom::Rotation;
use triflap::se3::reference_attitude;
use triflap::trajectory::TrajectorySpec;

fn main() {
    let traj = TrajectorySpec::Circle {
        center: [0.0, 0.0, 1.0],
        radius: 0.5,
        angular_rate: 1.0,
        duration: 6.3,
    }
    .build()
    .unwrap();
    let m = VehicleParams::default().mass;
    let h = 1e-4;
    println!(
        "{:>5} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "t", "p_ff", "q_ff", "p_fd", "q_fd", "tilt(deg)"
    );
    let mut worst: f64 = 0.0;
    for k in 1..=12 {
        let t = 0.5 * k as f64;
        let (r, ff) = reference_attitude(&traj.sample(t).unwrap(), m, STANDARD_GRAVITY).unwrap();
        let (rp, _) = reference_attitude(&traj.sample(t + h).unwrap(), m, STANDARD_GRAVITY).unwrap();
        let (rm, _) = reference_attitude(&traj.sample(t - h).unwrap(), m, STANDARD_GRAVITY).unwrap();
        let fd = Rotation::from_matrix_unchecked(rm.transpose().matrix() * rp.matrix()).log() / (2.0 * h);
        worst = worst.max((fd.x - ff.x).abs()).max((fd.y - ff.y).abs());
        println!(
            "{t:>5.1} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.3}",
            ff.x,
            ff.y,
            fd.x,
            fd.y,
            r.tilt().to_degrees()
        );
    }
    println!("largest roll/pitch rate mismatch: {worst:.2e} rad/s");
}
