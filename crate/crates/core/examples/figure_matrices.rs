//! Lay relative utilities out as (s0, s1) panels over the (r0, r1) plane and
//! write them as CSV matrices.
//!
//! `cargo run --release --example figure_matrices [out-dir]`

use std::path::PathBuf;

use smartq::cli::output::bundle_files;
use smartq::domain::Grid;
use smartq::sweep::{figure_matrix, run_sweep, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "figure-matrices".into()).into();
    let grid = Grid::reduced();
    let result = run_sweep(&SweepConfig {
        scenarios: grid.scenarios(),
        ..SweepConfig::default()
    })?;

    std::fs::create_dir_all(&out)?;
    for m in [0, 1] {
        let bundle = figure_matrix(&result.relative, m, &grid)?;
        let files = bundle_files(&bundle);
        for (name, body) in &files {
            std::fs::write(out.join(name), body)?;
        }
        println!("m={m}: wrote {} panels to {}", files.len(), out.display());
    }

    // Print one panel: the harmful-prophylaxis corner.
    let bundle = figure_matrix(&result.relative, 1, &grid)?;
    let panel = bundle.panels.iter().find(|p| p.s0 == 0.05 && p.s1 == 0.95).unwrap();
    println!("\nm=1, s0=0.05, s1=0.95 (rows r1, columns r0 = {:?})", panel.r0_values);
    for (r1, row) in panel.r1_values.iter().zip(&panel.values) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("  r1={r1:<5} {}", cells.join(" "));
    }
    Ok(())
}
