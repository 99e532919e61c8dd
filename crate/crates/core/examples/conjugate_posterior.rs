//! Beta-binomial posteriors for every cell of a stage.
//!
//! `cargo run --example conjugate_posterior`

use smartq::design::PriorSpec;
use smartq::domain::{Action, History, Stage};
use smartq::inference::{posterior_conjugate, posterior_conjugate_stage, Cell, CellCounts, StageData};

fn main() -> smartq::Result<()> {
    let prior = PriorSpec::default();

    // Single cell: 12 infections among 100 participants.
    let counts = CellCounts::new(12, 100)?;
    let post = posterior_conjugate(counts, &prior);
    println!("12/100 under Beta(1,1): E[pi] = {:.4}", post.mean_event_prob);

    // An empty cell falls back to the prior mean.
    println!("0/0: E[pi] = {}", posterior_conjugate(CellCounts::default(), &prior).mean_event_prob);

    // A dynamic stage-two table has one cell per (a1, a2).
    let mut data = StageData::empty(Stage::Two, false);
    data.set(Cell::new(History::infected(Action::Control), Action::Control), CellCounts::new(30, 40)?)?;
    data.set(Cell::new(History::infected(Action::Control), Action::Active), CellCounts::new(3, 40)?)?;
    data.set(Cell::new(History::infected(Action::Active), Action::Control), CellCounts::new(38, 40)?)?;
    data.set(Cell::new(History::infected(Action::Active), Action::Active), CellCounts::new(20, 40)?)?;
    for (cell, p) in posterior_conjugate_stage(&data, &prior) {
        println!("  {cell:<28} death prob {:.4}", p.mean_event_prob);
    }
    Ok(())
}
