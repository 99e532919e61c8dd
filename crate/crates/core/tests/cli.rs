use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_smartq");

fn smartq(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SMARTQ_OUT_DIR")
        .env_remove("SMARTQ_THREADS")
        .output()
        .expect("run smartq")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn u_bar(o: &Output) -> f64 {
    let line = stdout(o);
    let field = line.split_whitespace().find_map(|f| f.strip_prefix("u_bar=")).expect("u_bar in summary");
    field.parse().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_without_infection_scores_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sim");
    let o = smartq(&["simulate", "--r0", "0", "--r1", "0", "--s0", "0.3", "--s1", "0.6", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(u_bar(&o), 1.0);
    assert!(stdout(&o).starts_with("u_bar=1.0000000000000000 "), "{}", stdout(&o));
}

#[test]
fn simulate_fixed_design_matches_true_value_average() {
    let tmp = TempDir::new().unwrap();
    let o = smartq(&[
        "simulate", "--c", "0", "--m", "0", "--r0", "0.1", "--r1", "0.3", "--s0", "0.45", "--s1", "0.5",
        "--out", p(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((u_bar(&o) - 0.9025).abs() < 0.02);
}

#[test]
fn simulate_is_byte_stable_for_a_seed() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = smartq(&[
            "simulate", "--r0", "0.4", "--r1", "0.2", "--s0", "0.3", "--s1", "0.8", "--seed", "7", "--out", p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (stdout(&o), read(&out.join("patients.csv")), read(&out.join("allocations.csv")), out)
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
    assert_eq!(a.1.lines().count(), 2001);
    let manifest = read(&a.3.join("manifest.toml"));
    assert!(manifest.contains("command = \"simulate\""));
    assert!(manifest.contains("patients.csv"));
    assert!(manifest.contains("base_seed = 7"));
}

#[test]
fn simulate_rejects_bad_arguments() {
    let tmp = TempDir::new().unwrap();
    let o = smartq(&["simulate", "--r0", "0.1", "--r1", "0.1", "--s0", "0.1", "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2), "missing --s1");
    let o = smartq(&["simulate", "--r0", "1.5", "--r1", "0.1", "--s0", "0.1", "--s1", "0.1", "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2), "probability out of range");
    let o = smartq(&[
        "simulate", "--r0", "0.1", "--r1", "0.1", "--s0", "0.1", "--s1", "0.1", "--m", "2", "--out", p(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2), "m out of range");
    let o = smartq(&[
        "simulate", "--r0", "0.1", "--r1", "0.1", "--s0", "0.1", "--s1", "0.1", "--engine", "hmc", "--out",
        p(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2), "unknown engine");
}

#[test]
fn reduced_sweep_and_report_round_trip() {
    let tmp = TempDir::new().unwrap();
    let sweep = |name: &str| {
        let out = tmp.path().join(name);
        let o = smartq(&[
            "sweep", "--grid", "reduced", "--replicates", "1", "--base-seed", "5", "--out-dir", p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let a = sweep("a");
    let b = sweep("b");
    let agg = read(&a.join("sweep_aggregate.csv"));
    assert_eq!(agg, read(&b.join("sweep_aggregate.csv")));
    assert_eq!(read(&a.join("sweep_replicates.csv")), read(&b.join("sweep_replicates.csv")));
    let mut lines = agg.lines();
    assert_eq!(lines.next(), Some("r0,r1,s0,s1,m,c,u_bar_bar,std_err"));
    assert_eq!(lines.count(), 1600);
    assert!(read(&a.join("manifest.toml")).contains("sweep_aggregate.csv"));

    let agg_path = a.join("sweep_aggregate.csv");
    for m in ["0", "1"] {
        let out = tmp.path().join(format!("long{m}"));
        let o = smartq(&["report", "--in", p(&agg_path), "--m", m, "--format", "long-csv", "--out-dir", p(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let long = read(&out.join(format!("rel_u_m{m}.csv")));
        let mut lines = long.lines();
        assert_eq!(lines.next(), Some("r0,r1,s0,s1,m,rel_u"));
        assert_eq!(lines.count(), 400);
    }

    let out = tmp.path().join("matrix");
    let o = smartq(&["report", "--in", p(&agg_path), "--m", "0", "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let panels: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("rel_u_m0_"))
        .collect();
    assert_eq!(panels.len(), 16);
    let panel = read(&out.join("rel_u_m0_s0_0.05_s1_0.95.csv"));
    assert_eq!(panel.lines().count(), 6);
    assert_eq!(panel.lines().next().unwrap().split(',').count(), 6);
}

#[test]
fn report_without_fixed_baseline_fails() {
    let tmp = TempDir::new().unwrap();
    let grid = tmp.path().join("grid.csv");
    std::fs::write(&grid, "r0,r1,s0,s1\n0.1,0.3,0.45,0.5\n0.5,0.5,0.05,0.95\n").unwrap();
    let out = tmp.path().join("sweep");
    let o = smartq(&[
        "sweep", "--grid", "file", "--grid-file", p(&grid), "--designs", "0:1,1:1", "--replicates", "2",
        "--out-dir", p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&out.join("sweep_aggregate.csv")).lines().count(), 5);

    let o = smartq(&[
        "report", "--in", p(&out.join("sweep_aggregate.csv")), "--m", "0", "--out-dir", p(&tmp.path().join("r")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("no fixed"), "{err}");
    assert!(err.contains("r0=0.1"), "{err}");
}

#[test]
fn unwritable_output_directory_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = smartq(&["sweep", "--grid", "reduced", "--replicates", "1", "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = smartq(&["simulate", "--r0", "0", "--r1", "0", "--s0", "0", "--s1", "0", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn config_file_supplies_values_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    let out = tmp.path().join("from-config");
    std::fs::write(
        &cfg,
        format!(
            "[simulate]\nr0 = 0.0\nr1 = 0.0\ns0 = 0.5\ns1 = 0.5\nseed = 3\nout = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    let o = smartq(&["simulate", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(u_bar(&o), 1.0);
    assert!(stdout(&o).contains("seed=3"));
    assert!(out.join("patients.csv").exists());

    // a flag overrides the file: infections now happen
    let o = smartq(&["simulate", "--config", p(&cfg), "--r0", "0.9", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(u_bar(&o) < 1.0);
    assert!(stdout(&o).contains("seed=4"));

    // utility rows can be overridden too
    let cfg2 = tmp.path().join("util.toml");
    std::fs::write(
        &cfg2,
        format!(
            "[simulate]\nr0 = 0.0\nr1 = 0.0\ns0 = 0.5\ns1 = 0.5\nout = \"{}\"\n\n[utilities]\na1_0_y1_0 = 0.5\na1_1_y1_0 = 0.5\n",
            out.display()
        ),
    )
    .unwrap();
    let o = smartq(&["simulate", "--config", p(&cfg2)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(u_bar(&o), 0.5);

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[simulate]\nunknown-key = 1\n").unwrap();
    assert_eq!(smartq(&["simulate", "--config", p(&bad)]).status.code(), Some(2));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(smartq(&["simulate", "--config", p(&missing)]).status.code(), Some(2));
}

#[test]
fn environment_sets_output_directory_and_threads() {
    let tmp = TempDir::new().unwrap();
    let grid = tmp.path().join("grid.csv");
    std::fs::write(&grid, "r0,r1,s0,s1\n0.2,0.4,0.3,0.7\n").unwrap();
    let out = tmp.path().join("env-out");
    let o = Command::new(BIN)
        .args(["sweep", "--grid", "file", "--grid-file", p(&grid), "--replicates", "2"])
        .env("SMARTQ_OUT_DIR", &out)
        .env("SMARTQ_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&out.join("sweep_aggregate.csv")).lines().count(), 5);
    assert_eq!(read(&out.join("sweep_replicates.csv")).lines().count(), 9);
}

#[test]
fn no_arguments_prints_usage() {
    let o = smartq(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}
