//! Posterior inference for the per-cell event probabilities.
//!
//! Two engines are provided. [`conjugate`] computes exact Beta posteriors per
//! history-action cell; [`mcmc`] samples the Bernoulli-logistic coefficient
//! posterior and pushes draws through the inverse logit. Because the linear
//! predictors are saturated (one free parameter per cell) both engines
//! describe the same model family and agree up to prior and Monte Carlo
//! differences.

pub mod conjugate;
pub mod mcmc;

use std::collections::BTreeMap;
use std::fmt;

use crate::design::{Engine, McmcSettings, PriorSpec};
use crate::domain::{Action, History, Outcome, PatientRecord, Stage};
use crate::error::{Error, Result};

pub use conjugate::{posterior_conjugate, posterior_conjugate_stage};
pub use mcmc::{linear_predictor, posterior_mcmc, CoefficientVector, McmcPosterior};

/// A history-action cell: the unit a posterior is computed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub history: History,
    pub action: Action,
}

impl Cell {
    pub fn new(history: History, action: Action) -> Self {
        Cell { history, action }
    }

    pub fn stage1(a1: Action) -> Self {
        Cell::new(History::INITIAL, a1)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/a={}", self.history, self.action.bit())
    }
}

/// Sufficient statistics of one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CellCounts {
    pub events: u64,
    pub trials: u64,
}

impl CellCounts {
    pub fn new(events: u64, trials: u64) -> Result<Self> {
        if events > trials {
            return Err(Error::Argument(format!(
                "cell has {events} events but only {trials} trials"
            )));
        }
        Ok(CellCounts { events, trials })
    }

    #[inline]
    pub fn observe(&mut self, event: bool) {
        self.trials += 1;
        self.events += event as u64;
    }

    pub fn merged(self, other: CellCounts) -> CellCounts {
        CellCounts {
            events: self.events + other.events,
            trials: self.trials + other.trials,
        }
    }
}

/// Cell counts for one stage, with every cell of that stage present.
#[derive(Clone, Debug, PartialEq)]
pub struct StageData {
    stage: Stage,
    myopic: bool,
    cells: BTreeMap<Cell, CellCounts>,
}

impl StageData {
    /// All-zero data for the stage. Stage one always has two cells; stage two
    /// has four (dynamic) or two pooled cells (myopic).
    pub fn empty(stage: Stage, myopic: bool) -> Self {
        let histories = match stage {
            Stage::One => vec![History::INITIAL],
            Stage::Two => History::stage2_histories(myopic),
        };
        let cells = histories
            .into_iter()
            .flat_map(|h| Action::ALL.map(|a| (Cell::new(h, a), CellCounts::default())))
            .collect();
        StageData {
            stage,
            myopic: myopic && stage == Stage::Two,
            cells,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn is_pooled(&self) -> bool {
        self.myopic
    }

    pub fn cells(&self) -> &BTreeMap<Cell, CellCounts> {
        &self.cells
    }

    pub fn get(&self, cell: &Cell) -> Option<CellCounts> {
        self.cells.get(cell).copied()
    }

    /// Overwrite a cell's counts. The cell must belong to this stage layout.
    pub fn set(&mut self, cell: Cell, counts: CellCounts) -> Result<()> {
        match self.cells.get_mut(&cell) {
            Some(slot) => {
                *slot = counts;
                Ok(())
            }
            None => Err(Error::Argument(format!(
                "cell {cell} does not belong to this stage layout"
            ))),
        }
    }

    pub fn observe(&mut self, cell: Cell, event: bool) -> Result<()> {
        match self.cells.get_mut(&cell) {
            Some(slot) => {
                slot.observe(event);
                Ok(())
            }
            None => Err(Error::Argument(format!(
                "cell {cell} does not belong to this stage layout"
            ))),
        }
    }

    pub fn total_trials(&self) -> u64 {
        self.cells.values().map(|c| c.trials).sum()
    }
}

/// Count stage-one infections per `a1` over all records, and stage-two deaths
/// per `(a1, a2)` (or per `a2` pooled when `myopic`) over infected records.
pub fn accumulate(records: &[PatientRecord], myopic: bool) -> (StageData, StageData) {
    let mut stage1 = StageData::empty(Stage::One, false);
    let mut stage2 = StageData::empty(Stage::Two, myopic);
    for r in records {
        stage1
            .observe(Cell::stage1(r.stage1_action), r.stage1_outcome.is_event())
            .expect("stage-one layout has both actions");
        if let Some((a2, y2)) = r.stage2 {
            let h = History::stage2(r.stage1_action, Outcome::Event, myopic);
            stage2
                .observe(Cell::new(h, a2), y2.is_event())
                .expect("stage-two layout covers every reachable history");
        }
    }
    (stage1, stage2)
}

/// Posterior over one cell's event probability.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub mean_event_prob: f64,
    pub draws: Option<Vec<f64>>,
    pub engine: Engine,
}

impl PosteriorSummary {
    /// A summary carrying only a mean, as the conjugate engine returns.
    pub fn from_mean(mean_event_prob: f64) -> Self {
        PosteriorSummary {
            mean_event_prob,
            draws: None,
            engine: Engine::Conjugate,
        }
    }
}

pub type Posteriors = BTreeMap<Cell, PosteriorSummary>;

/// Posteriors for one stage under the selected engine, plus any diagnostic
/// warnings the engine raised.
pub fn stage_posteriors(
    data: &StageData,
    engine: Engine,
    prior: &PriorSpec,
    mcmc: &McmcSettings,
    seed: u64,
) -> Result<(Posteriors, Vec<String>)> {
    match engine {
        Engine::Conjugate => Ok((posterior_conjugate_stage(data, prior), Vec::new())),
        Engine::Mcmc => {
            let fit = posterior_mcmc(data, prior, mcmc.chains, mcmc.warmup, mcmc.sampling, seed)?;
            Ok((fit.cells, fit.warnings))
        }
    }
}
