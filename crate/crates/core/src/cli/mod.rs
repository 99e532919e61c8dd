//! Command-line front end: `simulate`, `sweep` and `report`.
//!
//! Exit status: 0 on success, 2 for invalid flags, invalid configuration or an
//! unwritable output location, 1 when a run fails or its input is incomplete.

pub mod config;
pub mod manifest;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::design::{DesignConfig, Engine};
use crate::domain::{Grid, Scenario};
use crate::error::Error;
use crate::simulator::run_trial;
use crate::sweep::{figure_matrix, relative_utilities, run_sweep, SweepConfig};
use config::ConfigFile;
use manifest::{OutputDir, RunManifest};

pub const REPLICATES_FILE: &str = "sweep_replicates.csv";
pub const AGGREGATE_FILE: &str = "sweep_aggregate.csv";
pub const PATIENTS_FILE: &str = "patients.csv";
pub const ALLOCATIONS_FILE: &str = "allocations.csv";

#[derive(Debug, Parser)]
#[command(name = "smartq", version, about = "Simulate adaptive two-stage SMART designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial and write patient records and allocation snapshots.
    Simulate(SimulateArgs),
    /// Run every design over a scenario grid.
    Sweep(SweepArgs),
    /// Turn a sweep aggregate into relative-utility matrices.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long)]
    s1: Option<f64>,
    /// 1 for a myopic design, 0 for dynamic.
    #[arg(long)]
    m: Option<u8>,
    /// Allocation exponent; 0 is fixed randomisation.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    patients: Option<usize>,
    #[arg(long)]
    interims: Option<usize>,
    #[arg(long)]
    min_alloc_prob: Option<f64>,
    /// Output directory.
    #[arg(long, env = "SMARTQ_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// full, reduced, or file (with --grid-file).
    #[arg(long)]
    grid: Option<String>,
    /// CSV with header r0,r1,s0,s1.
    #[arg(long)]
    grid_file: Option<PathBuf>,
    /// `all` or a comma-separated list of m:c pairs such as `0:1,1:1`.
    #[arg(long)]
    designs: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long, env = "SMARTQ_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    patients: Option<usize>,
    #[arg(long)]
    interims: Option<usize>,
    #[arg(long)]
    min_alloc_prob: Option<f64>,
    #[arg(long, env = "SMARTQ_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    CsvMatrix,
    LongCsv,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Aggregate CSV written by `sweep`.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    m: Option<u8>,
    #[arg(long, value_enum)]
    format: Option<ReportFormat>,
    #[arg(long, env = "SMARTQ_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

/// A command failure and the status it maps to.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(_) => 1,
        }
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn run_failure(e: Error) -> Failure {
    Failure::Run(e.to_string())
}

/// Errors creating or writing the output directory are usage errors.
fn output_failure(e: Error) -> Failure {
    match e {
        Error::Io { .. } => Failure::Usage(e.to_string()),
        other => Failure::Run(other.to_string()),
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(msg) | Failure::Run(msg) => eprintln!("error: {msg}"),
            }
            f.code()
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    match path {
        Some(p) => ConfigFile::load(p).map_err(usage),
        None => Ok(ConfigFile::default()),
    }
}

fn parse_engine(s: Option<String>) -> Result<Engine, Failure> {
    s.map(|s| s.parse().map_err(usage)).transpose().map(Option::unwrap_or_default)
}

fn required<T>(value: Option<T>, name: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("--{name} is required (flag or config file)")))
}

/// Settings shared by every design a command builds.
struct DesignBase {
    engine: Engine,
    patients: usize,
    interims: usize,
    min_alloc_prob: Option<f64>,
}

impl DesignBase {
    fn design(&self, cfg: &ConfigFile, m: u8, c: f64, seed: u64) -> Result<DesignConfig, Failure> {
        let myopic = match m {
            0 => false,
            1 => true,
            other => return Err(Failure::Usage(format!("--m must be 0 or 1, got {other}"))),
        };
        let d = DesignConfig {
            myopic,
            adapt_c: c,
            max_patients: self.patients,
            num_interims: self.interims,
            prior: cfg.prior(),
            engine: self.engine,
            mcmc: cfg.mcmc(),
            utilities: cfg.utilities().map_err(usage)?,
            min_alloc_prob: self.min_alloc_prob,
            seed,
        };
        d.validate().map_err(usage)?;
        Ok(d)
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let file = &cfg.simulate;
    let scenario = Scenario::new(
        required(args.r0.or(file.r0), "r0")?,
        required(args.r1.or(file.r1), "r1")?,
        required(args.s0.or(file.s0), "s0")?,
        required(args.s1.or(file.s1), "s1")?,
    )
    .map_err(usage)?;
    let m = args.m.or(file.m).unwrap_or(0);
    let c = args.c.or(file.c).unwrap_or(1.0);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let base = DesignBase {
        engine: parse_engine(args.engine.or(file.engine.clone()))?,
        patients: args.patients.or(file.patients).unwrap_or(2000),
        interims: args.interims.or(file.interims).unwrap_or(4),
        min_alloc_prob: args.min_alloc_prob.or(file.min_alloc_prob),
    };
    let design = base.design(&cfg, m, c, seed)?;
    let out = args.out.or(file.out.clone()).unwrap_or_else(|| PathBuf::from("smartq-out"));

    let result = run_trial(&scenario, &design).map_err(run_failure)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let mut snapshot = BTreeMap::new();
    for (k, v) in [
        ("r0", output::fmt_real(scenario.r0)),
        ("r1", output::fmt_real(scenario.r1)),
        ("s0", output::fmt_real(scenario.s0)),
        ("s1", output::fmt_real(scenario.s1)),
        ("m", m.to_string()),
        ("c", output::fmt_real(c)),
        ("seed", seed.to_string()),
        ("engine", base.engine.to_string()),
        ("patients", base.patients.to_string()),
        ("interims", base.interims.to_string()),
    ] {
        snapshot.insert(k.to_string(), v);
    }
    let mut manifest = RunManifest::new("simulate", snapshot);
    manifest.base_seed = Some(seed);
    manifest.engine = Some(base.engine.to_string());
    let mut dir = OutputDir::create(&out, manifest).map_err(output_failure)?;
    dir.write(PATIENTS_FILE, &output::patients_csv(&result)).map_err(output_failure)?;
    dir.write(ALLOCATIONS_FILE, &output::allocations_csv(&result)).map_err(output_failure)?;
    dir.finish().map_err(output_failure)?;

    println!(
        "u_bar={} patients={} seed={}",
        output::fmt_real(result.mean_utility),
        design.max_patients,
        seed
    );
    Ok(())
}

fn parse_designs(spec: &str) -> Result<Vec<(u8, f64)>, Failure> {
    if spec == "all" {
        return Ok(vec![(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)]);
    }
    spec.split(',')
        .map(|item| {
            let (m, c) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("design `{item}` is not of the form m:c")))?;
            let m: u8 = m.parse().map_err(|_| Failure::Usage(format!("bad m in design `{item}`")))?;
            let c: f64 = c.parse().map_err(|_| Failure::Usage(format!("bad c in design `{item}`")))?;
            Ok((m, c))
        })
        .collect()
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let file = &cfg.sweep;
    let grid_name = args.grid.or(file.grid.clone()).unwrap_or_else(|| "full".into());
    let grid_file = args.grid_file.or(file.grid_file.clone());
    let scenarios = match grid_name.as_str() {
        "full" => Grid::full().scenarios(),
        "reduced" => Grid::reduced().scenarios(),
        "file" => {
            let path = grid_file.ok_or_else(|| Failure::Usage("--grid file requires --grid-file".into()))?;
            let text = std::fs::read_to_string(&path).map_err(|e| usage(Error::io(&path, e)))?;
            output::parse_scenarios(&path, &text).map_err(usage)?
        }
        other => return Err(Failure::Usage(format!("unknown grid `{other}` (full, reduced or file)"))),
    };
    let designs_spec = args.designs.or(file.designs.clone()).unwrap_or_else(|| "all".into());
    let base = DesignBase {
        engine: parse_engine(args.engine.or(file.engine.clone()))?,
        patients: args.patients.or(file.patients).unwrap_or(2000),
        interims: args.interims.or(file.interims).unwrap_or(4),
        min_alloc_prob: args.min_alloc_prob.or(file.min_alloc_prob),
    };
    let designs = parse_designs(&designs_spec)?
        .into_iter()
        .map(|(m, c)| base.design(&cfg, m, c, 0))
        .collect::<Result<Vec<_>, _>>()?;
    let replicates = args.replicates.or(file.replicates).unwrap_or(10);
    let base_seed = args.base_seed.or(file.base_seed).unwrap_or(0);
    let threads = args.threads.or(file.threads);
    let out_dir = args.out_dir.or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("smartq-out"));

    let config = SweepConfig {
        scenarios,
        designs,
        replicates,
        base_seed,
        parallelism: threads,
    };
    config.validate().map_err(usage)?;

    let mut snapshot = BTreeMap::new();
    for (k, v) in [
        ("grid", grid_name.clone()),
        ("designs", designs_spec),
        ("replicates", replicates.to_string()),
        ("base-seed", base_seed.to_string()),
        ("engine", base.engine.to_string()),
        ("patients", base.patients.to_string()),
        ("interims", base.interims.to_string()),
        ("scenarios", config.scenarios.len().to_string()),
    ] {
        snapshot.insert(k.to_string(), v);
    }
    let mut manifest = RunManifest::new("sweep", snapshot);
    manifest.base_seed = Some(base_seed);
    manifest.engine = Some(base.engine.to_string());
    let mut dir = OutputDir::create(&out_dir, manifest).map_err(output_failure)?;

    let started = Instant::now();
    let result = run_sweep(&config).map_err(run_failure)?;
    if !result.warnings.is_empty() {
        eprintln!("warning: {} trial diagnostic warning(s)", result.warnings.len());
        for w in result.warnings.iter().take(20) {
            eprintln!("warning: {w}");
        }
    }
    dir.write(REPLICATES_FILE, &output::replicate_csv(&result.rows)).map_err(output_failure)?;
    dir.write(AGGREGATE_FILE, &output::aggregate_csv(&result.rows)).map_err(output_failure)?;
    dir.finish().map_err(output_failure)?;
    println!(
        "scenarios={} designs={} replicates={} aggregated_rows={} elapsed_s={:.1}",
        config.scenarios.len(),
        config.designs.len(),
        replicates,
        result.rows.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Axes of the smallest rectangular grid containing every scenario.
fn inferred_grid(scenarios: impl Iterator<Item = Scenario>) -> Grid {
    let mut r = Vec::new();
    let mut s = Vec::new();
    for sc in scenarios {
        r.extend([sc.r0, sc.r1]);
        s.extend([sc.s0, sc.s1]);
    }
    for v in [&mut r, &mut s] {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| a.to_bits() == b.to_bits());
    }
    Grid {
        r_values: r,
        s_values: s,
    }
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let file = &cfg.report;
    let input = required(args.input.or(file.input.clone()), "in")?;
    let m = args.m.or(file.m).unwrap_or(0);
    if m > 1 {
        return Err(Failure::Usage(format!("--m must be 0 or 1, got {m}")));
    }
    let format = match (args.format, file.format.as_deref()) {
        (Some(f), _) => f,
        (None, Some(s)) => ReportFormat::from_str(s, false).map_err(|e| Failure::Usage(format!("format: {e}")))?,
        (None, None) => ReportFormat::CsvMatrix,
    };
    let out_dir = args.out_dir.or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("smartq-out"));

    let text = std::fs::read_to_string(&input).map_err(|e| usage(Error::io(&input, e)))?;
    let rows = output::parse_aggregate(&input, &text).map_err(run_failure)?;
    let rows: Vec<_> = rows.into_iter().filter(|r| r.m == m).collect();
    if rows.is_empty() {
        return Err(Failure::Run(format!("{} has no rows for m={m}", input.display())));
    }
    let relative = relative_utilities(&rows).map_err(|e| Failure::Run(gap_message(e)))?;
    let grid = inferred_grid(rows.iter().map(|r| r.scenario));
    let bundle = figure_matrix(&relative, m, &grid).map_err(|e| Failure::Run(gap_message(e)))?;

    let mut snapshot = BTreeMap::new();
    snapshot.insert("in".to_string(), input.display().to_string());
    snapshot.insert("m".to_string(), m.to_string());
    snapshot.insert("format".to_string(), format!("{format:?}"));
    let mut dir = OutputDir::create(&out_dir, RunManifest::new("report", snapshot)).map_err(output_failure)?;
    match format {
        ReportFormat::CsvMatrix => {
            for (name, body) in output::bundle_files(&bundle) {
                dir.write(&name, &body).map_err(output_failure)?;
            }
            println!(
                "matrices={} shape={}x{} m={m}",
                bundle.panels.len(),
                grid.r_values.len(),
                grid.r_values.len()
            );
        }
        ReportFormat::LongCsv => {
            let body = output::long_csv(&relative, m);
            let n = body.lines().count() - 1;
            dir.write(&format!("rel_u_m{m}.csv"), &body).map_err(output_failure)?;
            println!("rows={n} m={m}");
        }
    }
    dir.finish().map_err(output_failure)?;
    Ok(())
}

/// Full listing of missing cells for an incomplete input.
fn gap_message(e: Error) -> String {
    match e {
        Error::IncompleteGrid { missing } => {
            let mut msg = format!("input is missing {} design cell(s):", missing.len());
            for (s, what) in missing {
                msg.push_str(&format!("\n  {s} {what}"));
            }
            msg
        }
        other => other.to_string(),
    }
}
