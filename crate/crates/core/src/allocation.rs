//! Randomisation probabilities proportional to `Q^c`.

use crate::domain::{Action, History};
use crate::error::{Error, Result};

const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// Allocation probabilities for one history, indexed by action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AllocationProbs {
    pub history: History,
    pub probs: [f64; 2],
}

impl AllocationProbs {
    pub fn equal(history: History) -> Self {
        AllocationProbs {
            history,
            probs: [0.5, 0.5],
        }
    }

    #[inline]
    pub fn prob(&self, action: Action) -> f64 {
        self.probs[action.index()]
    }

    /// Pick an action from a uniform draw in `[0, 1)`: action 1 when
    /// `u < P(action 1)`.
    #[inline]
    pub fn choose(&self, u: f64) -> Action {
        if u < self.probs[1] {
            Action::Active
        } else {
            Action::Control
        }
    }
}

/// `P(a) = Q(a)^c / sum_a' Q(a')^c`.
///
/// `c = 0` always gives equal allocation (`0^0 = 1`). A denominator below
/// `1e-12` falls back to equal allocation. `floor`, when set, bounds each
/// probability to `[floor, 1 - floor]`.
pub fn allocation_probs(history: History, q: [f64; 2], c: f64, floor: Option<f64>) -> Result<AllocationProbs> {
    if let Some(bad) = q.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Argument(format!(
            "Q-values must be finite and non-negative, got {bad}"
        )));
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::Argument(format!("allocation exponent must be >= 0, got {c}")));
    }
    if c == 0.0 {
        return Ok(AllocationProbs::equal(history));
    }
    let w = q.map(|v| v.powf(c));
    let total = w[0] + w[1];
    if !total.is_finite() || total < DEGENERATE_DENOMINATOR {
        return Ok(AllocationProbs::equal(history));
    }
    let mut p1 = w[1] / total;
    if let Some(floor) = floor {
        p1 = p1.clamp(floor, 1.0 - floor);
    }
    Ok(AllocationProbs {
        history,
        probs: [1.0 - p1, p1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn probs(q: [f64; 2], c: f64) -> [f64; 2] {
        allocation_probs(History::INITIAL, q, c, None).unwrap().probs
    }

    #[test]
    fn examples() {
        assert_eq!(probs([0.96, 0.64], 0.0), [0.5, 0.5]);
        let p = probs([0.96, 0.64], 1.0);
        assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.4).abs() < 1e-12);
        assert_eq!(probs([0.0, 0.0], 1.0), [0.5, 0.5]);
        assert_eq!(probs([0.0, 0.3], 1.0), [0.0, 1.0]);
    }

    #[test]
    fn negative_q_rejected() {
        assert!(allocation_probs(History::INITIAL, [-0.1, 0.5], 1.0, None).is_err());
        assert!(allocation_probs(History::INITIAL, [0.1, 0.5], -1.0, None).is_err());
    }

    #[test]
    fn floor_bounds_probabilities() {
        let p = allocation_probs(History::INITIAL, [0.0, 0.3], 1.0, Some(0.1)).unwrap();
        assert!((p.probs[0] - 0.1).abs() < 1e-15);
        assert!((p.probs[0] + p.probs[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn choose_uses_threshold() {
        let p = AllocationProbs { history: History::INITIAL, probs: [0.7, 0.3] };
        assert_eq!(p.choose(0.29), Action::Active);
        assert_eq!(p.choose(0.3), Action::Control);
        let never = AllocationProbs { history: History::INITIAL, probs: [1.0, 0.0] };
        assert_eq!(never.choose(0.0), Action::Control);
    }

    proptest! {
        #[test]
        fn tempered_exponent_is_monotone(q0 in 0.01f64..1.0, q1 in 0.01f64..1.0, bump in 0.001f64..0.5, c in 0.05f64..3.0) {
            let before = probs([q0, q1], c)[0];
            let after = probs([q0 + bump, q1], c)[0];
            prop_assert!(after > before);
        }
    }
}
