//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.
//!
//! Run alone with `cargo test -p smartq --test acceptance`.

use std::collections::BTreeMap;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smartq::allocation::allocation_probs;
use smartq::cli::output::aggregate_csv;
use smartq::design::{DesignConfig, PriorSpec};
use smartq::domain::{Action, Grid, History, Scenario, Stage, UtilityRow, UtilityTable};
use smartq::inference::{posterior_conjugate, posterior_mcmc, Cell, CellCounts, PosteriorSummary, Posteriors, StageData};
use smartq::policy::{brute_force_value, q_stage1, q_stage2};
use smartq::simulator::true_value;
use smartq::sweep::{run_sweep, SweepConfig, SweepResult};

const BASE_SEED: u64 = 20_240_601;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn reduced_sweep(parallelism: Option<usize>) -> SweepResult {
    run_sweep(&SweepConfig {
        scenarios: Grid::reduced().scenarios(),
        designs: DesignConfig::table_designs(),
        replicates: 10,
        base_seed: BASE_SEED,
        parallelism,
    })
    .expect("reduced sweep")
}

fn rel(result: &SweepResult, s: &Scenario, m: u8) -> f64 {
    result
        .relative_for(s, m, 1.0)
        .and_then(|r| r.rel)
        .expect("relative utility present")
}

fn null_effect_neutrality(reduced: &SweepResult) -> Outcome {
    let nulls: Vec<Scenario> = Grid::reduced()
        .scenarios()
        .into_iter()
        .filter(|s| s.r0 == s.r1 && s.s0 == s.s1)
        .collect();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for s in &nulls {
        for m in [0, 1] {
            let v = rel(reduced, s, m);
            worst = worst.max((v - 1.0).abs());
            if !(0.97..=1.03).contains(&v) {
                bad.push(format!("{s} m={m}: {v:.4}"));
            }
        }
    }
    outcome(
        nulls.len() == 20 && bad.is_empty(),
        format!("{} null scenarios x 2 designs, max |rel-1| = {worst:.4} (tolerance 0.03) {bad:?}", nulls.len()),
    )
}

fn dynamic_dominance(reduced: &SweepResult) -> Outcome {
    let scenarios = Grid::reduced().scenarios();
    let values: Vec<(Scenario, f64)> = scenarios.iter().map(|s| (*s, rel(reduced, s, 0))).collect();
    let (min_s, min_v) = values.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let max_v = values.iter().map(|v| v.1).fold(f64::MIN, f64::max);
    outcome(
        values.len() == 400 && min_v >= 0.98 && max_v > 1.05,
        format!("400 scenarios, min rel(m=0) = {min_v:.4} at {min_s} (>= 0.98), max = {max_v:.4} (> 1.05)"),
    )
}

fn myopic_harm() -> Outcome {
    let s = Scenario::new(0.5, 0.45, 0.05, 0.95).unwrap();
    let v0 = true_value(&s, Action::Control);
    let v1 = true_value(&s, Action::Active);
    let result = run_sweep(&SweepConfig {
        scenarios: vec![s],
        designs: DesignConfig::table_designs(),
        replicates: 10,
        base_seed: BASE_SEED,
        parallelism: None,
    })
    .unwrap();
    let myopic = rel(&result, &s, 1);
    let dynamic = rel(&result, &s, 0);
    let oracle_ok = (v0 - 0.975).abs() < 1e-12 && (v1 - 0.5725).abs() < 1e-12;
    outcome(
        oracle_ok && myopic < 0.97 && dynamic >= 1.0,
        format!(
            "V(0) = {v0}, V(1) = {v1}; rel(m=1) = {myopic:.4} (need < 0.97), rel(m=0) = {dynamic:.4} (need >= 1.0)"
        ),
    )
}

fn stage1(p: [f64; 2]) -> Posteriors {
    Action::ALL
        .iter()
        .map(|&a| (Cell::stage1(a), PosteriorSummary::from_mean(p[a.index()])))
        .collect()
}

fn stage2(p: [f64; 4]) -> Posteriors {
    let mut out = Posteriors::new();
    for a1 in Action::ALL {
        for a2 in Action::ALL {
            out.insert(
                Cell::new(History::infected(a1), a2),
                PosteriorSummary::from_mean(p[a1.index() * 2 + a2.index()]),
            );
        }
    }
    out
}

fn backward_induction_oracle() -> Outcome {
    let mut runner = TestRunner::new_with_rng(
        PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let strategy = (
        prop::array::uniform2(0.0f64..=1.0),
        prop::array::uniform4(0.0f64..=1.0),
        prop::collection::vec(0.0f64..10.0, 10),
    );
    let max_diff = std::cell::Cell::new(0.0f64);
    let res = runner.run(&strategy, |(p1, p2, u)| {
        let mut table = UtilityTable::empty();
        for (row, v) in UtilityRow::all().into_iter().zip(u) {
            table.set(row, v).unwrap();
        }
        let s1 = stage1(p1);
        let s2 = stage2(p2);
        let q2 = q_stage2(&s2, &table).unwrap();
        let q1 = q_stage1(&s1, &q2, &table, false).unwrap();
        let bf = brute_force_value(&s1, &s2, &table).unwrap();
        for a in Action::ALL {
            let d = (q1[&a].value - bf[&a]).abs();
            max_diff.set(max_diff.get().max(d));
            prop_assert!(d <= 1e-12, "a1={}: {} vs {}", a.bit(), q1[&a].value, bf[&a]);
        }
        Ok(())
    });
    outcome(res.is_ok(), format!("1000 random inputs, max |q_stage1 - brute force| = {:.2e} (tolerance 1e-12) {res:?}", max_diff.get()))
}

fn engine_parity() -> Outcome {
    let prior = PriorSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED);
    let mut worst_diff: f64 = 0.0;
    let mut worst_rhat: f64 = 0.0;
    let mut failures = Vec::new();
    for dataset in 0..20 {
        let (stage, myopic) = match dataset % 3 {
            0 => (Stage::One, false),
            1 => (Stage::Two, false),
            _ => (Stage::Two, true),
        };
        let mut data = StageData::empty(stage, myopic);
        let cells: Vec<Cell> = data.cells().keys().copied().collect();
        for cell in cells {
            let trials = rng.random_range(200..=600u64);
            let p: f64 = rng.random_range(0.05..0.95);
            let events = (0..trials).filter(|_| rng.random::<f64>() < p).count() as u64;
            data.set(cell, CellCounts::new(events, trials).unwrap()).unwrap();
        }
        let fit = posterior_mcmc(&data, &prior, 4, 1000, 1000, BASE_SEED + dataset).unwrap();
        worst_rhat = worst_rhat.max(fit.max_rhat());
        if !fit.warnings.is_empty() || fit.max_rhat().is_nan() || fit.max_rhat() > 1.05 {
            failures.push(format!("dataset {dataset}: R-hat {:.4}", fit.max_rhat()));
        }
        for (cell, counts) in data.cells() {
            let exact = posterior_conjugate(*counts, &prior).mean_event_prob;
            let post = &fit.cells[cell];
            let n_draws = post.draws.as_ref().map_or(0, Vec::len);
            if n_draws != 4000 {
                failures.push(format!("dataset {dataset} {cell}: {n_draws} draws"));
            }
            let d = (exact - post.mean_event_prob).abs();
            worst_diff = worst_diff.max(d);
            if d >= 0.03 {
                failures.push(format!("dataset {dataset} {cell}: |diff| = {d:.4}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "20 datasets, 4 chains x 1000/1000, max |conjugate - mcmc| = {worst_diff:.4} (< 0.03), max R-hat = {worst_rhat:.4} (<= 1.05) {failures:?}"
        ),
    )
}

fn fixed_design_calibration() -> Outcome {
    let s = Scenario::new(0.1, 0.3, 0.45, 0.5).unwrap();
    let target = 0.5 * (true_value(&s, Action::Control) + true_value(&s, Action::Active));
    let result = run_sweep(&SweepConfig {
        scenarios: vec![s],
        designs: vec![DesignConfig::new(0, 0.0).unwrap(), DesignConfig::new(1, 0.0).unwrap()],
        replicates: 100,
        base_seed: BASE_SEED,
        parallelism: None,
    })
    .unwrap();
    let details: Vec<String> = result.rows.iter().map(|r| format!("m={}: {:.5}", r.m, r.u_bar_bar)).collect();
    let pass = (target - 0.9025).abs() < 1e-12 && result.rows.iter().all(|r| (r.u_bar_bar - target).abs() <= 0.01);
    outcome(pass, format!("target {target}, 100 replicates: {} (tolerance 0.01)", details.join(", ")))
}

fn allocation_properties() -> Outcome {
    let config = || PropConfig { cases: 1000, failure_persistence: None, ..PropConfig::default() };
    let rng = || proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha);
    let h = History::INITIAL;
    let mut results = BTreeMap::new();

    let q = prop::array::uniform2(0.0f64..10.0);
    let c = 0.0f64..4.0;

    let mut r = TestRunner::new_with_rng(config(), rng());
    results.insert("sum-to-one", r.run(&(q.clone(), c.clone()), |(q, c)| {
        let p = allocation_probs(h, q, c, None).unwrap();
        prop_assert!((p.probs[0] + p.probs[1] - 1.0).abs() <= 1e-12);
        prop_assert!(p.probs.iter().all(|x| (0.0..=1.0).contains(x)));
        Ok(())
    }).map_err(|e| e.to_string()));

    let mut r = TestRunner::new_with_rng(config(), rng());
    results.insert("c=0 equality", r.run(&q.clone(), |q| {
        prop_assert_eq!(allocation_probs(h, q, 0.0, None).unwrap().probs, [0.5, 0.5]);
        Ok(())
    }).map_err(|e| e.to_string()));

    let mut r = TestRunner::new_with_rng(config(), rng());
    results.insert("scale invariance", r.run(&(prop::array::uniform2(0.01f64..10.0), c.clone(), 0.01f64..100.0), |(q, c, k)| {
        let a = allocation_probs(h, q, c, None).unwrap().probs;
        let b = allocation_probs(h, q.map(|v| v * k), c, None).unwrap().probs;
        prop_assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
        Ok(())
    }).map_err(|e| e.to_string()));

    let mut r = TestRunner::new_with_rng(config(), rng());
    results.insert("zero-denominator fallback", r.run(&(0.01f64..4.0), |c| {
        prop_assert_eq!(allocation_probs(h, [0.0, 0.0], c, None).unwrap().probs, [0.5, 0.5]);
        Ok(())
    }).map_err(|e| e.to_string()));

    let mut r = TestRunner::new_with_rng(config(), rng());
    results.insert("stop allocating", r.run(&(1e-6f64..10.0), |q| {
        prop_assert_eq!(allocation_probs(h, [0.0, q], 1.0, None).unwrap().probs, [0.0, 1.0]);
        prop_assert_eq!(allocation_probs(h, [q, 0.0], 1.0, None).unwrap().probs, [1.0, 0.0]);
        Ok(())
    }).map_err(|e| e.to_string()));

    let failed: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e: &String| format!("{name}: {e}")))
        .collect();
    outcome(
        failed.is_empty(),
        format!("{} properties x 1000 cases {}", results.len(), if failed.is_empty() { String::new() } else { format!("{failed:?}") }),
    )
}

fn determinism(reduced: &SweepResult) -> Outcome {
    let single = reduced_sweep(Some(1));
    let many = reduced_sweep(Some(4));
    let a = aggregate_csv(&single.rows);
    let b = aggregate_csv(&many.rows);
    let c = aggregate_csv(&reduced.rows);
    outcome(
        a == b && a == c,
        format!("aggregate CSV at parallelism 1, 4 and auto: {} bytes, identical = {}", a.len(), a == b && a == c),
    )
}

fn full_grid_feasibility() -> Outcome {
    let started = Instant::now();
    let result = run_sweep(&SweepConfig::default()).expect("full sweep");
    let secs = started.elapsed().as_secs_f64();
    let threads = rayon::current_num_threads();
    outcome(
        result.rows.len() == 28224 * 4 && secs < 1800.0,
        format!("28224 scenarios x 4 designs x 10 replicates in {secs:.1} s on {threads} thread(s) (limit 1800 s)"),
    )
}

fn main() {
    let started = Instant::now();
    let reduced = reduced_sweep(None);
    let criteria: Vec<Criterion> = vec![
        ("1 null-effect neutrality", Box::new(|| null_effect_neutrality(&reduced))),
        ("2 dynamic dominance", Box::new(|| dynamic_dominance(&reduced))),
        ("3 myopic harm", Box::new(myopic_harm)),
        ("4 backward-induction oracle", Box::new(backward_induction_oracle)),
        ("5 engine parity", Box::new(engine_parity)),
        ("6 fixed-design calibration", Box::new(fixed_design_calibration)),
        ("7 allocation-rule properties", Box::new(allocation_properties)),
        ("8 determinism and parallelism independence", Box::new(|| determinism(&reduced))),
        ("9 full-grid feasibility", Box::new(full_grid_feasibility)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
