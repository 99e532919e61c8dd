//! The terminal utility table: defaults, lookups and custom overrides.
//!
//! `cargo run --example utility_table`

use smartq::domain::{Action, History, Outcome, PatientRecord, UtilityRow, UtilityTable};
use smartq::domain::utility_lookup;

fn main() -> smartq::Result<()> {
    let table = UtilityTable::default();
    println!("default table:");
    for (row, value) in table.rows() {
        println!("  {:<24} {}", row.key(), value.unwrap());
    }

    // An infected participant who got active prophylaxis, then placebo, and died.
    let record = PatientRecord::new(
        Action::Active,
        Outcome::Event,
        Some((Action::Control, Outcome::Event)),
        &table,
    )?;
    println!("\nutility of {:?}: {}", record.terminal_row()?, utility_lookup(&table, &record)?);

    // Myopic designs pool stage-two histories; their utility averages over a1.
    for a2 in Action::ALL {
        let u = table.stage2(History::POOLED, a2, Outcome::NoEvent)?;
        println!("pooled history, a2={}, survives: {u}", a2.bit());
    }

    // A custom table that values survival after treatment a little less.
    let custom = UtilityTable::alive_dead(1.0, 0.0)?.with(
        UtilityRow::Infected { a1: Action::Control, a2: Action::Active, y2: Outcome::NoEvent },
        0.9,
    )?;
    println!("\ncustom range: {:?}", custom.min_max());
    Ok(())
}
