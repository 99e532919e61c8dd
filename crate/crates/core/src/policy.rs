//! Posterior expected utilities (Q-values) and backward induction.
//!
//! Utilities are affine in the event probability, so the posterior expected
//! utility of a cell only depends on the posterior mean. Every Q-value here is
//! computed from `mean_event_prob`; draws are never averaged.

use std::collections::BTreeMap;

use crate::domain::{Action, History, Outcome, UtilityTable};
use crate::error::{Error, Result};
use crate::inference::{Cell, Posteriors};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QValue {
    pub history: History,
    pub action: Action,
    pub value: f64,
}

pub type StageQ = BTreeMap<Cell, QValue>;

/// Q-values and optimal decisions at both stages.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicySnapshot {
    pub stage2_q: StageQ,
    pub stage2_opt: BTreeMap<History, Action>,
    pub stage1_q: BTreeMap<Action, QValue>,
    pub stage1_opt: Action,
}

impl PolicySnapshot {
    pub fn stage1_values(&self) -> [f64; 2] {
        Action::ALL.map(|a| self.stage1_q[&a].value)
    }

    /// `[Q(h, 0), Q(h, 1)]` for a stage-two history.
    pub fn stage2_values(&self, history: History) -> Option<[f64; 2]> {
        let q0 = self.stage2_q.get(&Cell::new(history, Action::Control))?;
        let q1 = self.stage2_q.get(&Cell::new(history, Action::Active))?;
        Some([q0.value, q1.value])
    }
}

/// Index of the larger value; ties go to action 0.
pub fn argmax(values: [f64; 2]) -> Action {
    if values[1] > values[0] {
        Action::Active
    } else {
        Action::Control
    }
}

fn mean_of(posteriors: &Posteriors, cell: &Cell) -> Result<f64> {
    posteriors
        .get(cell)
        .map(|p| p.mean_event_prob)
        .ok_or_else(|| Error::Argument(format!("no posterior for cell {cell}")))
}

/// Stage-two Q-values for every cell in `posteriors`:
/// `u(h, a, 0) * (1 - E[pi]) + u(h, a, 1) * E[pi]`.
pub fn q_stage2(posteriors: &Posteriors, utilities: &UtilityTable) -> Result<StageQ> {
    let mut out = StageQ::new();
    for (&cell, post) in posteriors {
        let pi = post.mean_event_prob;
        let alive = utilities.stage2(cell.history, cell.action, Outcome::NoEvent)?;
        let dead = utilities.stage2(cell.history, cell.action, Outcome::Event)?;
        out.insert(
            cell,
            QValue {
                history: cell.history,
                action: cell.action,
                value: alive * (1.0 - pi) + dead * pi,
            },
        );
    }
    Ok(out)
}

/// Best continuation value `max_a2 Q2(h, a2)` for a stage-two history.
fn continuation(stage2_q: &StageQ, history: History) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for a2 in Action::ALL {
        let q = stage2_q
            .get(&Cell::new(history, a2))
            .ok_or_else(|| Error::Argument(format!("no stage-two Q-value for {history}, a2={}", a2.bit())))?;
        best = best.max(q.value);
    }
    Ok(best)
}

/// Stage-one Q-values:
/// `u(h1, a1, 0) * (1 - E[pi1]) + max_a2 Q2((a1, 1), a2) * (1 - m) * E[pi1]`.
///
/// With `myopic` the second term is zero and `stage2_q` is not consulted.
pub fn q_stage1(
    stage1_posteriors: &Posteriors,
    stage2_q: &StageQ,
    utilities: &UtilityTable,
    myopic: bool,
) -> Result<BTreeMap<Action, QValue>> {
    let mut out = BTreeMap::new();
    for a1 in Action::ALL {
        let pi = mean_of(stage1_posteriors, &Cell::stage1(a1))?;
        let mut value = utilities.uninfected(a1)? * (1.0 - pi);
        if !myopic {
            value += continuation(stage2_q, History::infected(a1))? * pi;
        }
        out.insert(
            a1,
            QValue {
                history: History::INITIAL,
                action: a1,
                value,
            },
        );
    }
    Ok(out)
}

/// Backward induction over both stages.
pub fn optimal_policy(
    stage1_posteriors: &Posteriors,
    stage2_posteriors: &Posteriors,
    utilities: &UtilityTable,
    myopic: bool,
) -> Result<PolicySnapshot> {
    let stage2_q = q_stage2(stage2_posteriors, utilities)?;
    let mut stage2_opt = BTreeMap::new();
    for history in History::stage2_histories(myopic) {
        let values = Action::ALL.map(|a2| stage2_q.get(&Cell::new(history, a2)).map(|q| q.value));
        match values {
            [Some(q0), Some(q1)] => {
                stage2_opt.insert(history, argmax([q0, q1]));
            }
            _ => {
                return Err(Error::Argument(format!(
                    "stage-two posteriors do not cover history {history}"
                )))
            }
        }
    }
    let stage1_q = q_stage1(stage1_posteriors, &stage2_q, utilities, myopic)?;
    let stage1_opt = argmax(Action::ALL.map(|a| stage1_q[&a].value));
    Ok(PolicySnapshot {
        stage2_q,
        stage2_opt,
        stage1_q,
        stage1_opt,
    })
}

/// Dynamic stage-one values by enumerating every stage-two decision rule.
///
/// For each `a1` the four rules `d2: {h(0,1), h(1,1)} -> {0,1}` are scored by
/// the full two-stage expected utility and the best is kept. Shares no code
/// with [`q_stage1`]; used as its oracle.
pub fn brute_force_value(
    stage1_posteriors: &Posteriors,
    stage2_posteriors: &Posteriors,
    utilities: &UtilityTable,
) -> Result<BTreeMap<Action, f64>> {
    let mut out = BTreeMap::new();
    for a1 in Action::ALL {
        let p1 = stage1_posteriors
            .get(&Cell::stage1(a1))
            .ok_or_else(|| Error::Argument(format!("no stage-one posterior for a1={}", a1.bit())))?
            .mean_event_prob;
        let mut best = f64::NEG_INFINITY;
        for rule in 0u8..4 {
            // bit k of `rule` is the stage-two action after stage-one action k
            let a2 = if (rule >> a1.bit()) & 1 == 1 { Action::Active } else { Action::Control };
            let h2 = History::stage2(a1, Outcome::Event, false);
            let p2 = stage2_posteriors
                .get(&Cell::new(h2, a2))
                .ok_or_else(|| Error::Argument(format!("no stage-two posterior for {h2}")))?
                .mean_event_prob;
            let survive = utilities.get(crate::domain::UtilityRow::Infected { a1, a2, y2: Outcome::NoEvent })?;
            let die = utilities.get(crate::domain::UtilityRow::Infected { a1, a2, y2: Outcome::Event })?;
            let clear = utilities.get(crate::domain::UtilityRow::Uninfected { a1 })?;
            let total = (1.0 - p1) * clear + p1 * (1.0 - p2) * survive + p1 * p2 * die;
            best = best.max(total);
        }
        out.insert(a1, best);
    }
    Ok(out)
}
