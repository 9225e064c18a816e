//! Sweep the AV's arrival time against a pedestrian walking toward the
//! crossing and print both agents' intent, the discriminant distances,
//! CoopScore and region.
//!
//!     cargo run --example cooperation_score

use crosswalk_ir::cooperation::{discriminant_distances, CoopState, MonitorParams};
use crosswalk_ir::intent::{classify, features, BoundaryParams};

fn main() {
    let monitor = MonitorParams::default();
    let (ped_ttc, ped_speed, av_speed) = (3.0, 1.4, 7.0);
    println!("pedestrian {ped_ttc:.1} s from the conflict point at {ped_speed} m/s; AV at {av_speed} m/s\n");
    println!("{:>6} {:>11} {:>11} {:>7} {:>7} {:>6} {:>6}", "T_v", "ped", "av", "d_v", "d_p", "score", "region");
    for tenths in (5..=80).step_by(5) {
        let av_ttc = tenths as f64 / 10.0;
        // each agent classifies from its own arrival time and the other's kinematics
        let ped_view = features(ped_ttc, av_speed * av_ttc, av_speed).unwrap();
        let av_view = features(av_ttc, ped_speed * ped_ttc, ped_speed).unwrap();
        let ped = classify(&BoundaryParams::PED_VS_AV, ped_view).value;
        let av = classify(&BoundaryParams::AV_VS_PED, av_view).value;
        let Some(d) = discriminant_distances(ped_ttc, av_ttc, &monitor.ped, &monitor.av, av_speed, ped_speed) else {
            continue;
        };
        let s = CoopState::from_distances(0.0, d, monitor.k);
        let flag = if s.region.is_conflict() && s.score < 0.9 { "  <- conflict" } else { "" };
        println!(
            "{av_ttc:>6.1} {:>11} {:>11} {:>7.2} {:>7.2} {:>6.3} {:>6}{flag}",
            format!("{ped:?}"),
            format!("{av:?}"),
            s.d_v,
            s.d_p,
            s.score,
            s.region.to_string()
        );
    }
}
