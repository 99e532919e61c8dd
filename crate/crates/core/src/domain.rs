//! Domain vocabulary shared by every other module: actions, outcomes,
//! histories, patient records, data-generating scenarios and utility tables.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary treatment decision.
///
/// At stage one `Active` is prophylaxis, at stage two it is treatment.
/// `Control` is placebo at both stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Control = 0,
    Active = 1,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Control, Action::Active];

    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Action::Control),
            1 => Ok(Action::Active),
            other => Err(Error::Argument(format!("action must be 0 or 1, got {other}"))),
        }
    }

    #[inline]
    pub fn bit(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

/// A binary stage outcome. Stage one: infection. Stage two: death.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    NoEvent = 0,
    Event = 1,
}

impl Outcome {
    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Outcome::NoEvent),
            1 => Ok(Outcome::Event),
            other => Err(Error::Argument(format!("outcome must be 0 or 1, got {other}"))),
        }
    }

    #[inline]
    pub fn from_event(event: bool) -> Self {
        if event {
            Outcome::Event
        } else {
            Outcome::NoEvent
        }
    }

    #[inline]
    pub fn bit(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn is_event(self) -> bool {
        self == Outcome::Event
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    One = 1,
    Two = 2,
}

/// Patient history observed before a decision.
///
/// Stage one has the empty history. At stage two a dynamic design keeps
/// `(a1, y1)` while a myopic design collapses every stage-two history into
/// one pooled (empty) history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct History {
    stage: Stage,
    stage1: Option<(Action, Outcome)>,
}

impl History {
    pub const INITIAL: History = History {
        stage: Stage::One,
        stage1: None,
    };

    pub const POOLED: History = History {
        stage: Stage::Two,
        stage1: None,
    };

    /// Stage-two history after `(a1, y1)`. With `myopic` set the result is
    /// the pooled history regardless of the arguments.
    pub fn stage2(a1: Action, y1: Outcome, myopic: bool) -> Self {
        if myopic {
            History::POOLED
        } else {
            History {
                stage: Stage::Two,
                stage1: Some((a1, y1)),
            }
        }
    }

    /// The dynamic history reached by infected patients given `a1`.
    pub fn infected(a1: Action) -> Self {
        History::stage2(a1, Outcome::Event, false)
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn stage1_action(&self) -> Option<Action> {
        self.stage1.map(|(a, _)| a)
    }

    pub fn stage1_outcome(&self) -> Option<Outcome> {
        self.stage1.map(|(_, y)| y)
    }

    pub fn is_pooled(&self) -> bool {
        self.stage == Stage::Two && self.stage1.is_none()
    }

    /// Stage-two histories that carry decisions under the given myopic flag.
    pub fn stage2_histories(myopic: bool) -> Vec<History> {
        if myopic {
            vec![History::POOLED]
        } else {
            Action::ALL.iter().map(|&a1| History::infected(a1)).collect()
        }
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.stage, self.stage1) {
            (Stage::One, _) => write!(f, "h1"),
            (Stage::Two, None) => write!(f, "h2(pooled)"),
            (Stage::Two, Some((a, y))) => write!(f, "h2(a1={},y1={})", a.bit(), y.bit()),
        }
    }
}

/// One of the ten terminal realisations a participant can end in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UtilityRow {
    /// Not infected after stage one; the patient never enters stage two.
    Uninfected { a1: Action },
    /// Infected, treated with `a2`, with terminal outcome `y2`.
    Infected { a1: Action, a2: Action, y2: Outcome },
}

impl UtilityRow {
    /// Rows in table order: grouped by `a1`, then `a2`, then `y2`.
    pub fn all() -> [UtilityRow; 10] {
        use Action::*;
        use Outcome::*;
        let inf = |a1, a2, y2| UtilityRow::Infected { a1, a2, y2 };
        [
            UtilityRow::Uninfected { a1: Control },
            inf(Control, Control, NoEvent),
            inf(Control, Control, Event),
            inf(Control, Active, NoEvent),
            inf(Control, Active, Event),
            UtilityRow::Uninfected { a1: Active },
            inf(Active, Control, NoEvent),
            inf(Active, Control, Event),
            inf(Active, Active, NoEvent),
            inf(Active, Active, Event),
        ]
    }

    #[inline]
    fn index(self) -> usize {
        match self {
            UtilityRow::Uninfected { a1 } => a1.index() * 5,
            UtilityRow::Infected { a1, a2, y2 } => {
                a1.index() * 5 + 1 + a2.index() * 2 + y2.bit() as usize
            }
        }
    }

    /// Configuration key, e.g. `a1_0_y1_0` or `a1_1_y1_1_a2_0_y2_1`.
    pub fn key(&self) -> String {
        match *self {
            UtilityRow::Uninfected { a1 } => format!("a1_{}_y1_0", a1.bit()),
            UtilityRow::Infected { a1, a2, y2 } => {
                format!("a1_{}_y1_1_a2_{}_y2_{}", a1.bit(), a2.bit(), y2.bit())
            }
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        UtilityRow::all()
            .into_iter()
            .find(|row| row.key() == key)
            .ok_or_else(|| Error::Config(format!("unknown utility row `{key}`")))
    }
}

impl fmt::Display for UtilityRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Utility of every terminal realisation.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityTable {
    entries: [Option<f64>; 10],
}

impl Default for UtilityTable {
    /// One for every survivor (including the uninfected), zero for every death.
    fn default() -> Self {
        let mut entries = [None; 10];
        for row in UtilityRow::all() {
            let value = match row {
                UtilityRow::Uninfected { .. } => 1.0,
                UtilityRow::Infected { y2, .. } => {
                    if y2.is_event() {
                        0.0
                    } else {
                        1.0
                    }
                }
            };
            entries[row.index()] = Some(value);
        }
        UtilityTable { entries }
    }
}

impl UtilityTable {
    /// A table with no rows set. Lookups fail until every row is filled.
    pub fn empty() -> Self {
        UtilityTable {
            entries: [None; 10],
        }
    }

    /// Survivors get `alive`, deaths get `dead`, independent of history.
    pub fn alive_dead(alive: f64, dead: f64) -> Result<Self> {
        let mut table = UtilityTable::empty();
        for row in UtilityRow::all() {
            let value = match row {
                UtilityRow::Infected {
                    y2: Outcome::Event, ..
                } => dead,
                _ => alive,
            };
            table.set(row, value)?;
        }
        Ok(table)
    }

    pub fn set(&mut self, row: UtilityRow, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Config(format!(
                "utility for {row} must be finite and non-negative, got {value}"
            )));
        }
        self.entries[row.index()] = Some(value);
        Ok(())
    }

    pub fn with(mut self, row: UtilityRow, value: f64) -> Result<Self> {
        self.set(row, value)?;
        Ok(self)
    }

    pub fn get(&self, row: UtilityRow) -> Result<f64> {
        self.entries[row.index()]
            .ok_or_else(|| Error::Config(format!("utility table has no entry for row {row}")))
    }

    /// Fails with the first absent row, if any.
    pub fn validate(&self) -> Result<()> {
        for row in UtilityRow::all() {
            self.get(row)?;
        }
        Ok(())
    }

    pub fn rows(&self) -> impl Iterator<Item = (UtilityRow, Option<f64>)> + '_ {
        UtilityRow::all()
            .into_iter()
            .map(move |row| (row, self.entries[row.index()]))
    }

    /// `u(h1, a1, y1 = 0)`.
    pub fn uninfected(&self, a1: Action) -> Result<f64> {
        self.get(UtilityRow::Uninfected { a1 })
    }

    /// `u(h2, a2, y2)`. For the pooled history the two `a1` rows are averaged
    /// with equal weight.
    pub fn stage2(&self, history: History, a2: Action, y2: Outcome) -> Result<f64> {
        if history.stage() != Stage::Two {
            return Err(Error::Argument(format!(
                "stage-two utility requested for {history}"
            )));
        }
        match history.stage1_action() {
            Some(a1) => self.get(UtilityRow::Infected { a1, a2, y2 }),
            None => {
                let c = self.get(UtilityRow::Infected {
                    a1: Action::Control,
                    a2,
                    y2,
                })?;
                let a = self.get(UtilityRow::Infected {
                    a1: Action::Active,
                    a2,
                    y2,
                })?;
                Ok(0.5 * (c + a))
            }
        }
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut it = self.entries.iter().flatten().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    /// Dense copy for hot loops; fails if any row is missing.
    pub(crate) fn dense(&self) -> Result<[f64; 10]> {
        self.validate()?;
        Ok(self.entries.map(|v| v.unwrap_or(0.0)))
    }

    #[inline]
    pub(crate) fn dense_index(row: UtilityRow) -> usize {
        row.index()
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = UtilityTable::empty();
        for (row, value) in self.rows() {
            if let Some(v) = value {
                out.set(row, v * factor)?;
            }
        }
        Ok(out)
    }
}

/// Everything that happened to one participant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatientRecord {
    pub stage1_action: Action,
    pub stage1_outcome: Outcome,
    /// Present exactly when `stage1_outcome` is an event.
    pub stage2: Option<(Action, Outcome)>,
    pub realized_utility: f64,
}

impl PatientRecord {
    pub fn new(
        stage1_action: Action,
        stage1_outcome: Outcome,
        stage2: Option<(Action, Outcome)>,
        table: &UtilityTable,
    ) -> Result<Self> {
        if stage1_outcome.is_event() != stage2.is_some() {
            return Err(Error::Argument(
                "stage-two fields must be present exactly for infected patients".into(),
            ));
        }
        let mut record = PatientRecord {
            stage1_action,
            stage1_outcome,
            stage2,
            realized_utility: 0.0,
        };
        record.realized_utility = utility_lookup(table, &record)?;
        Ok(record)
    }

    pub fn stage2_action(&self) -> Option<Action> {
        self.stage2.map(|(a, _)| a)
    }

    pub fn stage2_outcome(&self) -> Option<Outcome> {
        self.stage2.map(|(_, y)| y)
    }

    pub fn terminal_row(&self) -> Result<UtilityRow> {
        match (self.stage1_outcome, self.stage2) {
            (Outcome::NoEvent, None) => Ok(UtilityRow::Uninfected {
                a1: self.stage1_action,
            }),
            (Outcome::Event, Some((a2, y2))) => Ok(UtilityRow::Infected {
                a1: self.stage1_action,
                a2,
                y2,
            }),
            _ => Err(Error::Argument(
                "patient record violates the stage-two presence invariant".into(),
            )),
        }
    }
}

/// Utility of the terminal row a record ended in.
pub fn utility_lookup(table: &UtilityTable, record: &PatientRecord) -> Result<f64> {
    table.get(record.terminal_row()?)
}

/// True event probabilities of the data-generating model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Infection probability under stage-one placebo.
    pub r0: f64,
    /// Infection probability under prophylaxis.
    pub r1: f64,
    /// Death probability after infection, stage-one placebo.
    pub s0: f64,
    /// Death probability after infection, stage-one prophylaxis.
    pub s1: f64,
}

impl Scenario {
    pub fn new(r0: f64, r1: f64, s0: f64, s1: f64) -> Result<Self> {
        let s = Scenario { r0, r1, s0, s1 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r0", self.r0), ("r1", self.r1), ("s0", self.s0), ("s1", self.s1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Argument(format!(
                    "{name} must be a probability in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn infection_prob(&self, a1: Action) -> f64 {
        match a1 {
            Action::Control => self.r0,
            Action::Active => self.r1,
        }
    }

    /// Death probability after infection. Depends on `a1` only.
    #[inline]
    pub fn death_prob(&self, a1: Action) -> f64 {
        match a1 {
            Action::Control => self.s0,
            Action::Active => self.s1,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(r0={}, r1={}, s0={}, s1={})",
            self.r0, self.r1, self.s0, self.s1
        )
    }
}

/// Cartesian product of infection and death probability axes.
///
/// Scenarios are enumerated with `s0` outermost, then `s1`, `r0`, and `r1`
/// innermost, so each `(s0, s1)` panel is a contiguous block.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub r_values: Vec<f64>,
    pub s_values: Vec<f64>,
}

const S_PERCENT: [u32; 8] = [5, 10, 20, 40, 60, 80, 90, 95];
const REDUCED_S_PERCENT: [u32; 4] = [5, 40, 80, 95];

impl Grid {
    /// 21 infection values `0, 0.05, ..., 1` and 8 death values.
    pub fn full() -> Self {
        Grid {
            r_values: (0..=20).map(|k| k as f64 / 20.0).collect(),
            s_values: S_PERCENT.iter().map(|&p| p as f64 / 100.0).collect(),
        }
    }

    /// 5 infection values and 4 death values; a bitwise subset of `full`.
    pub fn reduced() -> Self {
        Grid {
            r_values: (0..=20).step_by(5).map(|k| k as f64 / 20.0).collect(),
            s_values: REDUCED_S_PERCENT.iter().map(|&p| p as f64 / 100.0).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.r_values.len().pow(2) * self.s_values.len().pow(2)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::with_capacity(self.len());
        for &s0 in &self.s_values {
            for &s1 in &self.s_values {
                for &r0 in &self.r_values {
                    for &r1 in &self.r_values {
                        out.push(Scenario { r0, r1, s0, s1 });
                    }
                }
            }
        }
        out
    }
}

/// All 28224 scenarios of the full grid in panel order.
pub fn scenario_grid() -> Vec<Scenario> {
    Grid::full().scenarios()
}
