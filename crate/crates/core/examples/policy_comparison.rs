//! The scripted-pedestrian experiment: every scenario x trigger policy x
//! pedestrian over 30 seeds, run on a worker pool, summarised per condition
//! with an ANOVA row. Also prints how often each policy showed a message.
//!
//!     cargo run --release --example policy_comparison

use crosswalk_ir::config::ToolkitConfig;
use crosswalk_ir::evaluation::{aggregate_report, compute_trial_metrics};
use crosswalk_ir::sim::run_batch;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ToolkitConfig::default();
    let conditions = cfg.conditions()?;
    let trials: Vec<_> = conditions.iter().flat_map(|c| c.trials.iter().copied()).collect();
    let logs = run_batch(&trials, 0)?;

    let mut runs = Vec::new();
    let mut logs = logs.iter();
    for c in &conditions {
        for log in logs.by_ref().take(c.trials.len()) {
            runs.push((c.label(), compute_trial_metrics(log)?));
        }
    }
    for scenario in ["S1", "S2"] {
        let subset: Vec<_> = runs.iter().filter(|(l, _)| l.starts_with(scenario)).cloned().collect();
        println!("{}", aggregate_report(&subset)?.to_text());
    }

    println!("{:<30} {:>10}", "condition", "activated");
    for c in &conditions {
        let shown = runs.iter().filter(|(l, m)| *l == c.label() && m.ehmi_count > 0).count();
        println!("{:<30} {:>4} / {:<4}", c.label(), shown, c.trials.len());
    }
    Ok(())
}
