//! One simulated trial per design, with the allocation path across interims.
//!
//! `cargo run --release --example single_trial`

use smartq::design::DesignConfig;
use smartq::domain::{Action, Scenario};
use smartq::simulator::{run_trial, true_value};

fn main() -> smartq::Result<()> {
    let scenario = Scenario::new(0.5, 0.45, 0.05, 0.95)?;
    println!(
        "{scenario}: V(a1=0) = {}, V(a1=1) = {}",
        true_value(&scenario, Action::Control),
        true_value(&scenario, Action::Active)
    );

    for design in DesignConfig::table_designs() {
        let result = run_trial(&scenario, &design.clone().with_seed(3))?;
        let path: Vec<String> = result
            .per_interim_alloc
            .iter()
            .map(|s| format!("{:.3}", s.stage1.probs[1]))
            .collect();
        println!(
            "{:<16} u_bar = {:.4}  P(a1=1) by analysis: {}",
            design.label(),
            result.mean_utility,
            path.join(" -> ")
        );
    }
    Ok(())
}
