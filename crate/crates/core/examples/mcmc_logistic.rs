//! Logistic-regression posteriors by MCMC, checked against the conjugate engine.
//!
//! `cargo run --release --example mcmc_logistic`

use smartq::design::PriorSpec;
use smartq::domain::{Action, History, Stage};
use smartq::inference::{posterior_conjugate, posterior_mcmc, Cell, CellCounts, StageData};

fn main() -> smartq::Result<()> {
    let prior = PriorSpec::default();
    let mut data = StageData::empty(Stage::Two, false);
    let counts = [(60, 300), (15, 280), (250, 310), (140, 290)];
    for ((a1, a2), (events, trials)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().zip(counts) {
        let cell = Cell::new(History::infected(Action::from_bit(a1)?), Action::from_bit(a2)?);
        data.set(cell, CellCounts::new(events, trials)?)?;
    }

    let fit = posterior_mcmc(&data, &prior, 4, 1000, 1000, 2024)?;
    println!("max split R-hat {:.4}, acceptance {:?}", fit.max_rhat(), fit.accept_rates);
    for w in &fit.warnings {
        println!("warning: {w}");
    }
    println!("{:<28} {:>9} {:>9}", "cell", "mcmc", "exact");
    for (cell, counts) in data.cells() {
        let exact = posterior_conjugate(*counts, &prior).mean_event_prob;
        println!("{:<28} {:>9.4} {:>9.4}", cell.to_string(), fit.cells[cell].mean_event_prob, exact);
    }
    Ok(())
}
