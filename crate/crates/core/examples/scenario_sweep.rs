//! Compare the four designs over the reduced scenario grid.
//!
//! `cargo run --release --example scenario_sweep`

use smartq::domain::Grid;
use smartq::sweep::{run_sweep, SweepConfig};

fn main() -> smartq::Result<()> {
    let config = SweepConfig {
        scenarios: Grid::reduced().scenarios(),
        ..SweepConfig::default()
    };
    let result = run_sweep(&config)?;
    println!("{} design summaries, {} relative utilities", result.rows.len(), result.relative.len());

    for m in [0, 1] {
        let mut rels: Vec<_> = result.relative.iter().filter(|r| r.m == m).filter_map(|r| r.rel.map(|v| (r.scenario, v))).collect();
        rels.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo_s, lo) = rels.first().unwrap();
        let (hi_s, hi) = rels.last().unwrap();
        println!("m={m}: min rel {lo:.4} at {lo_s}; max rel {hi:.4} at {hi_s}");
    }
    Ok(())
}
