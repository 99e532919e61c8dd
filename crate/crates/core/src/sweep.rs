//! Scenario sweeps across designs, relative utilities, and the per-panel
//! matrix layout used for heat-map figures.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::design::DesignConfig;
use crate::domain::{Grid, Scenario};
use crate::error::{Error, Result};
use crate::rng;
use crate::simulator::simulate;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub scenarios: Vec<Scenario>,
    pub designs: Vec<DesignConfig>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Worker threads; `None` uses every available core.
    pub parallelism: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            scenarios: Grid::full().scenarios(),
            designs: DesignConfig::table_designs(),
            replicates: 10,
            base_seed: 0,
            parallelism: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.designs.is_empty() {
            return Err(Error::Config("at least one design is required".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("at least one scenario is required".into()));
        }
        if self.parallelism == Some(0) {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        for d in &self.designs {
            d.validate()?;
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        Ok(())
    }
}

/// Replicate utilities of one design in one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSummary {
    pub scenario: Scenario,
    pub m: u8,
    pub c: f64,
    /// Per-replicate mean participant utility. Empty when read back from an
    /// aggregate file.
    pub replicate_u: Vec<f64>,
    /// Mean of `replicate_u`.
    pub u_bar_bar: f64,
    /// Standard error of `u_bar_bar`; NaN with a single replicate.
    pub std_err: f64,
}

impl DesignSummary {
    pub fn from_replicates(scenario: Scenario, m: u8, c: f64, replicate_u: Vec<f64>) -> Self {
        let n = replicate_u.len() as f64;
        let mean = replicate_u.iter().sum::<f64>() / n;
        let std_err = if replicate_u.len() > 1 {
            let var = replicate_u.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            f64::NAN
        };
        DesignSummary {
            scenario,
            m,
            c,
            replicate_u,
            u_bar_bar: mean,
            std_err,
        }
    }
}

/// Adaptive-over-fixed ratio for one scenario and myopic flag.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativeRow {
    pub scenario: Scenario,
    pub m: u8,
    /// Exponent of the adaptive design in the numerator.
    pub c: f64,
    /// `None` when the fixed design's utility is zero.
    pub rel: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<DesignSummary>,
    pub relative: Vec<RelativeRow>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    /// Relative utility for a scenario, `m`, and adaptive exponent.
    pub fn relative_for(&self, scenario: &Scenario, m: u8, c: f64) -> Option<&RelativeRow> {
        self.relative
            .iter()
            .find(|r| r.m == m && r.c == c && same_scenario(&r.scenario, scenario))
    }

    pub fn summary_for(&self, scenario: &Scenario, m: u8, c: f64) -> Option<&DesignSummary> {
        self.rows
            .iter()
            .find(|r| r.m == m && r.c == c && same_scenario(&r.scenario, scenario))
    }
}

fn same_scenario(a: &Scenario, b: &Scenario) -> bool {
    scenario_key(a) == scenario_key(b)
}

pub(crate) fn scenario_key(s: &Scenario) -> [u64; 4] {
    [s.r0, s.r1, s.s0, s.s1].map(f64::to_bits)
}

struct ScenarioOutcome {
    summaries: Vec<DesignSummary>,
    warnings: Vec<String>,
}

fn run_scenario(config: &SweepConfig, index: usize, scenario: &Scenario) -> Result<ScenarioOutcome> {
    let mut summaries = Vec::with_capacity(config.designs.len());
    let mut warnings = Vec::new();
    for (d_idx, design) in config.designs.iter().enumerate() {
        let mut us = Vec::with_capacity(config.replicates);
        for replicate in 0..config.replicates {
            let seeded = design.clone().with_seed(rng::trial_seed(config.base_seed, index, replicate));
            let result = simulate(scenario, &seeded, false).map_err(|e| Error::Trial {
                scenario: index,
                design: d_idx,
                replicate,
                source: Box::new(e),
            })?;
            warnings.extend(
                result
                    .warnings
                    .into_iter()
                    .map(|w| format!("scenario {index} {scenario}, design {}, replicate {replicate}: {w}", design.label())),
            );
            us.push(result.mean_utility);
        }
        summaries.push(DesignSummary::from_replicates(*scenario, design.m(), design.adapt_c, us));
    }
    Ok(ScenarioOutcome { summaries, warnings })
}

/// Run every design on every scenario, `replicates` times each.
///
/// Trial seeds come from [`rng::trial_seed`], so results do not depend on the
/// number of threads or on scheduling.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let work = || -> Result<Vec<ScenarioOutcome>> {
        config
            .scenarios
            .par_iter()
            .enumerate()
            .map(|(i, s)| run_scenario(config, i, s))
            .collect()
    };
    let outcomes = match config.parallelism {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(format!("cannot build thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut rows = Vec::with_capacity(config.scenarios.len() * config.designs.len());
    let mut warnings = Vec::new();
    for o in outcomes {
        rows.extend(o.summaries);
        warnings.extend(o.warnings);
    }
    // Design sets without a fixed/adaptive pair are legitimate here; only the
    // ratios that can be formed are kept.
    let (relative, _) = relative_parts(&rows);
    Ok(SweepResult {
        rows,
        relative,
        warnings,
    })
}

/// Divide each adaptive design's utility by the fixed (`c = 0`) design with
/// the same `m` in the same scenario.
///
/// Output follows the first appearance of each scenario in `rows`, then `m`
/// and `c` ascending. Fails if an adaptive design has no fixed baseline or if
/// a scenario/`m` pair has no adaptive design.
pub fn relative_utilities(rows: &[DesignSummary]) -> Result<Vec<RelativeRow>> {
    let (out, gaps) = relative_parts(rows);
    if gaps.is_empty() {
        Ok(out)
    } else {
        Err(Error::IncompleteGrid { missing: gaps })
    }
}

fn relative_parts(rows: &[DesignSummary]) -> (Vec<RelativeRow>, Vec<(Scenario, String)>) {
    let mut order: Vec<[u64; 4]> = Vec::new();
    let mut groups: HashMap<[u64; 4], BTreeMap<u8, Vec<&DesignSummary>>> = HashMap::new();
    for row in rows {
        let key = scenario_key(&row.scenario);
        let entry = groups.entry(key).or_insert_with(|| {
            order.push(key);
            BTreeMap::new()
        });
        entry.entry(row.m).or_default().push(row);
    }
    let mut out = Vec::new();
    let mut gaps = Vec::new();
    for key in order {
        for (&m, designs) in &groups[&key] {
            let scenario = designs[0].scenario;
            let fixed = designs.iter().find(|d| d.c == 0.0);
            let mut adaptive: Vec<_> = designs.iter().filter(|d| d.c != 0.0).collect();
            adaptive.sort_by(|a, b| a.c.total_cmp(&b.c));
            match (fixed, adaptive.is_empty()) {
                (None, _) => gaps.push((scenario, format!("m={m}: no fixed (c=0) design"))),
                (Some(_), true) => gaps.push((scenario, format!("m={m}: no adaptive design"))),
                (Some(fixed), false) => {
                    for a in adaptive {
                        let rel = (fixed.u_bar_bar > 0.0).then(|| a.u_bar_bar / fixed.u_bar_bar);
                        out.push(RelativeRow {
                            scenario,
                            m,
                            c: a.c,
                            rel,
                        });
                    }
                }
            }
        }
    }
    (out, gaps)
}

/// One `(s0, s1)` panel: rows indexed by `r1`, columns by `r0`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPanel {
    pub s0: f64,
    pub s1: f64,
    pub r0_values: Vec<f64>,
    pub r1_values: Vec<f64>,
    /// `values[i][j]` is the relative utility at `r1 = r1_values[i]`,
    /// `r0 = r0_values[j]`; NaN where the fixed design scored zero.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixBundle {
    pub m: u8,
    pub c: f64,
    /// Panels with `s0` outermost, `s1` inner, matching [`Grid::scenarios`].
    pub panels: Vec<MatrixPanel>,
}

/// Arrange relative utilities for `m` (adaptive `c = 1`) into one matrix per
/// `(s0, s1)` pair of `grid`. Fails listing every grid cell without a value.
pub fn figure_matrix(relative: &[RelativeRow], m: u8, grid: &Grid) -> Result<MatrixBundle> {
    figure_matrix_for(relative, m, 1.0, grid)
}

pub fn figure_matrix_for(relative: &[RelativeRow], m: u8, c: f64, grid: &Grid) -> Result<MatrixBundle> {
    let lookup: HashMap<[u64; 4], Option<f64>> = relative
        .iter()
        .filter(|r| r.m == m && r.c == c)
        .map(|r| (scenario_key(&r.scenario), r.rel))
        .collect();
    let mut missing = Vec::new();
    let mut panels = Vec::with_capacity(grid.s_values.len().pow(2));
    for &s0 in &grid.s_values {
        for &s1 in &grid.s_values {
            let values = grid
                .r_values
                .iter()
                .map(|&r1| {
                    grid.r_values
                        .iter()
                        .map(|&r0| {
                            let s = Scenario { r0, r1, s0, s1 };
                            match lookup.get(&scenario_key(&s)) {
                                Some(v) => v.unwrap_or(f64::NAN),
                                None => {
                                    missing.push((s, format!("m={m}, c={c}")));
                                    f64::NAN
                                }
                            }
                        })
                        .collect()
                })
                .collect();
            panels.push(MatrixPanel {
                s0,
                s1,
                r0_values: grid.r_values.clone(),
                r1_values: grid.r_values.clone(),
                values,
            });
        }
    }
    if missing.is_empty() {
        Ok(MatrixBundle { m, c, panels })
    } else {
        Err(Error::IncompleteGrid { missing })
    }
}
