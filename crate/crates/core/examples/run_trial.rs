//! One scripted trial, printed as a timeline of the interesting frames,
//! followed by its metrics. Arguments: scenario, policy, pedestrian, seed.
//!
//!     cargo run --example run_trial -- S2 ir decisive_go 1

use crosswalk_ir::cooperation::TriggerKind;
use crosswalk_ir::evaluation::compute_trial_metrics;
use crosswalk_ir::sim::{run_trial, PedestrianKind, ScenarioId, TrialConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let scenario: ScenarioId = arg(0, "S1").parse()?;
    let policy = TriggerKind::parse(&arg(1, "ir")).ok_or("policy is none, fixed or ir")?;
    let ped: PedestrianKind = arg(2, "ehmi_responsive").parse()?;
    let seed: u64 = arg(3, "1").parse()?;

    let log = run_trial(&TrialConfig::new(scenario, policy, ped, seed))?;
    println!("{scenario} / {} / {ped} / seed {seed}: {} frames, {:?}\n", policy.short_name(), log.frames.len(), log.termination);
    for e in &log.events {
        let f = &log.frames[e.frame];
        let coop = f.coop.map_or("-".to_string(), |c| format!("{:.3} ({})", c.score, c.region));
        println!(
            "t={:>5.2}  {:<18} ped y={:>5.2} v={:.2}  av d={:>6.2} v={:.2}  coop {coop}  eHMI {:?}",
            e.t,
            format!("{:?}", e.kind),
            f.ped.y,
            f.ped.speed,
            f.av.dist,
            f.av.speed,
            f.ehmi.value
        );
    }
    println!("\n{}", serde_json::to_string_pretty(&compute_trial_metrics(&log)?)?);
    Ok(())
}
