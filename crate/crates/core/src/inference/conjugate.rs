//! Exact Beta-Bernoulli posteriors per cell.

use super::{CellCounts, PosteriorSummary, Posteriors, StageData};
use crate::design::PriorSpec;

/// Posterior mean `(alpha + events) / (alpha + beta + trials)`.
pub fn posterior_conjugate(counts: CellCounts, prior: &PriorSpec) -> PosteriorSummary {
    let a = prior.conjugate_alpha + counts.events as f64;
    let b = prior.conjugate_beta + (counts.trials - counts.events) as f64;
    PosteriorSummary::from_mean(a / (a + b))
}

pub fn posterior_conjugate_stage(data: &StageData, prior: &PriorSpec) -> Posteriors {
    data.cells()
        .iter()
        .map(|(&cell, &counts)| (cell, posterior_conjugate(counts, prior)))
        .collect()
}
