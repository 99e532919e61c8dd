//! Posterior expected utilities by backward induction, dynamic versus myopic.
//!
//! `cargo run --example backward_induction`

use smartq::domain::{Action, History, UtilityTable};
use smartq::inference::{Cell, PosteriorSummary, Posteriors};
use smartq::policy::{brute_force_value, optimal_policy};

fn main() -> smartq::Result<()> {
    // Prophylaxis halves infection, but infected participants who had it
    // almost always die whatever happens next.
    let stage1: Posteriors = [(Action::Control, 0.5), (Action::Active, 0.45)]
        .into_iter()
        .map(|(a, p)| (Cell::stage1(a), PosteriorSummary::from_mean(p)))
        .collect();
    let mut stage2 = Posteriors::new();
    for (a1, death) in [(Action::Control, 0.05), (Action::Active, 0.95)] {
        for a2 in Action::ALL {
            stage2.insert(Cell::new(History::infected(a1), a2), PosteriorSummary::from_mean(death));
        }
    }
    // Myopic designs see one pooled stage-two history.
    for a2 in Action::ALL {
        stage2.insert(Cell::new(History::POOLED, a2), PosteriorSummary::from_mean(0.5));
    }
    let utilities = UtilityTable::default();

    for myopic in [false, true] {
        let policy = optimal_policy(&stage1, &stage2, &utilities, myopic)?;
        let [q0, q1] = policy.stage1_values();
        println!(
            "{:<8} Q1(a1=0) = {q0:.4}  Q1(a1=1) = {q1:.4}  optimal a1 = {}",
            if myopic { "myopic" } else { "dynamic" },
            policy.stage1_opt.bit()
        );
    }

    let oracle = brute_force_value(&stage1, &stage2, &utilities)?;
    println!("enumerated stage-two rules: {:.4} / {:.4}", oracle[&Action::Control], oracle[&Action::Active]);
    Ok(())
}
