//! Whole-trial simulation.
//!
//! A trial enrols `max_patients` participants in `num_interims` equal
//! cohorts. All outcomes are observed immediately. After every analysis but
//! the last, posteriors are refitted on all data so far, Q-values are
//! recomputed by backward induction, and the next cohort is randomised with
//! probabilities proportional to `Q^c`. The first cohort is always randomised
//! equally.

use rand::RngCore;

use crate::allocation::{allocation_probs, AllocationProbs};
use crate::design::DesignConfig;
use crate::domain::{Action, History, Outcome, PatientRecord, Scenario, Stage, UtilityRow, UtilityTable};
use crate::error::Result;
use crate::inference::{stage_posteriors, Cell, CellCounts, StageData};
use crate::policy::{optimal_policy, PolicySnapshot};
use crate::rng;

/// When analyses happen and which of them re-randomise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterimSchedule {
    pub cohort_size: usize,
    pub num_analyses: usize,
    /// 1-based analysis indices after which allocations are updated.
    pub adapt_at: Vec<usize>,
}

impl InterimSchedule {
    /// Equal cohorts with adaptation at every analysis except the last.
    pub fn for_design(design: &DesignConfig) -> Self {
        InterimSchedule {
            cohort_size: design.cohort_size(),
            num_analyses: design.num_interims,
            adapt_at: (1..design.num_interims).collect(),
        }
    }
}

/// The four uniforms a participant consumes, in stream order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatientDraws {
    pub allocate1: f64,
    pub infect: f64,
    pub allocate2: f64,
    pub die: f64,
}

impl PatientDraws {
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        PatientDraws {
            allocate1: rng::uniform(rng),
            infect: rng::uniform(rng),
            allocate2: rng::uniform(rng),
            die: rng::uniform(rng),
        }
    }
}

/// Simulate one participant given their stage-one action.
///
/// Infection is drawn with probability `r_{a1}`. Infected patients receive
/// `a2` from `a2_provider` and die with probability `s_{a1}`; the death
/// probability does not depend on `a2`.
pub fn generate_patient<R, F>(
    scenario: &Scenario,
    a1: Action,
    a2_provider: F,
    rng: &mut R,
    utilities: &UtilityTable,
) -> Result<PatientRecord>
where
    R: RngCore + ?Sized,
    F: FnOnce(History) -> Action,
{
    let draws = PatientDraws::sample(rng);
    let y1 = Outcome::from_event(draws.infect < scenario.infection_prob(a1));
    let stage2 = if y1.is_event() {
        let a2 = a2_provider(History::infected(a1));
        let y2 = Outcome::from_event(draws.die < scenario.death_prob(a1));
        Some((a2, y2))
    } else {
        None
    };
    PatientRecord::new(a1, y1, stage2, utilities)
}

/// Expected participant utility under the default table when every patient
/// gets `a1`: `(1 - r) + r * (1 - s)`.
pub fn true_value(scenario: &Scenario, a1: Action) -> f64 {
    let r = scenario.infection_prob(a1);
    let s = scenario.death_prob(a1);
    (1.0 - r) + r * (1.0 - s)
}

/// Allocation probabilities in force for the cohort that follows `analysis`.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationSnapshot {
    /// 0 for the initial allocation, otherwise the 1-based analysis index.
    pub analysis: usize,
    pub stage1: AllocationProbs,
    /// One entry per stage-two history: two (dynamic) or one pooled (myopic).
    pub stage2: Vec<AllocationProbs>,
    /// Q-values behind the allocation; absent for the initial snapshot.
    pub policy: Option<PolicySnapshot>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    /// Mean realised utility over all `max_patients` participants.
    pub mean_utility: f64,
    pub per_interim_alloc: Vec<AllocationSnapshot>,
    pub patient_records: Option<Vec<PatientRecord>>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// Running cell counts, dense by `a1` and `a2`.
#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    stage1: [CellCounts; 2],
    stage2: [[CellCounts; 2]; 2],
}

impl Tally {
    fn stage_data(&self, myopic: bool) -> (StageData, StageData) {
        let mut s1 = StageData::empty(Stage::One, false);
        let mut s2 = StageData::empty(Stage::Two, myopic);
        for a1 in Action::ALL {
            s1.set(Cell::stage1(a1), self.stage1[a1.index()]).expect("stage-one cell");
        }
        for a2 in Action::ALL {
            if myopic {
                let pooled = self.stage2[0][a2.index()].merged(self.stage2[1][a2.index()]);
                s2.set(Cell::new(History::POOLED, a2), pooled).expect("pooled cell");
            } else {
                for a1 in Action::ALL {
                    s2.set(Cell::new(History::infected(a1), a2), self.stage2[a1.index()][a2.index()])
                        .expect("dynamic cell");
                }
            }
        }
        (s1, s2)
    }
}

/// Run one trial with the patient stream keyed by `design.seed`.
pub fn run_trial(scenario: &Scenario, design: &DesignConfig) -> Result<TrialResult> {
    simulate(scenario, design, true)
}

/// Run one trial; `keep_records` controls whether patient records are kept.
pub fn simulate(scenario: &Scenario, design: &DesignConfig, keep_records: bool) -> Result<TrialResult> {
    scenario.validate()?;
    design.validate()?;
    let schedule = InterimSchedule::for_design(design);
    let utilities = design.utilities.dense()?;
    let utility_of = |row: UtilityRow| utilities[UtilityTable::dense_index(row)];

    let mut stream = rng::patient_stream(design.seed);
    let mut tally = Tally::default();
    let mut records = keep_records.then(|| Vec::with_capacity(design.max_patients));
    let mut warnings = Vec::new();
    let mut total_utility = 0.0;

    let mut alloc1 = AllocationProbs::equal(History::INITIAL);
    let stage2_histories = History::stage2_histories(design.myopic);
    let mut alloc2: Vec<AllocationProbs> = stage2_histories.iter().map(|&h| AllocationProbs::equal(h)).collect();
    let mut snapshots = vec![AllocationSnapshot {
        analysis: 0,
        stage1: alloc1,
        stage2: alloc2.clone(),
        policy: None,
    }];

    for analysis in 1..=schedule.num_analyses {
        // stage-two allocation indexed by a1; both entries share the pooled cell when myopic
        let by_a1 = if design.myopic { [alloc2[0], alloc2[0]] } else { [alloc2[0], alloc2[1]] };
        for _ in 0..schedule.cohort_size {
            let draws = PatientDraws::sample(&mut stream);
            let a1 = alloc1.choose(draws.allocate1);
            let infected = draws.infect < scenario.infection_prob(a1);
            tally.stage1[a1.index()].observe(infected);
            let (row, stage2) = if infected {
                let a2 = by_a1[a1.index()].choose(draws.allocate2);
                let died = draws.die < scenario.death_prob(a1);
                tally.stage2[a1.index()][a2.index()].observe(died);
                let y2 = Outcome::from_event(died);
                (UtilityRow::Infected { a1, a2, y2 }, Some((a2, y2)))
            } else {
                (UtilityRow::Uninfected { a1 }, None)
            };
            let u = utility_of(row);
            total_utility += u;
            if let Some(records) = records.as_mut() {
                records.push(PatientRecord {
                    stage1_action: a1,
                    stage1_outcome: Outcome::from_event(infected),
                    stage2,
                    realized_utility: u,
                });
            }
        }

        if !schedule.adapt_at.contains(&analysis) {
            continue;
        }
        let (data1, data2) = tally.stage_data(design.myopic);
        let (post1, w1) = stage_posteriors(
            &data1,
            design.engine,
            &design.prior,
            &design.mcmc,
            rng::analysis_seed(design.seed, analysis, 1),
        )?;
        let (post2, w2) = stage_posteriors(
            &data2,
            design.engine,
            &design.prior,
            &design.mcmc,
            rng::analysis_seed(design.seed, analysis, 2),
        )?;
        warnings.extend(w1.into_iter().chain(w2).map(|w| format!("analysis {analysis}: {w}")));

        let policy = optimal_policy(&post1, &post2, &design.utilities, design.myopic)?;
        alloc1 = allocation_probs(History::INITIAL, policy.stage1_values(), design.adapt_c, design.min_alloc_prob)?;
        alloc2 = stage2_histories
            .iter()
            .map(|&h| {
                let q = policy.stage2_values(h).expect("policy covers every stage-two history");
                allocation_probs(h, q, design.adapt_c, design.min_alloc_prob)
            })
            .collect::<Result<_>>()?;
        snapshots.push(AllocationSnapshot {
            analysis,
            stage1: alloc1,
            stage2: alloc2.clone(),
            policy: Some(policy),
        });
    }

    Ok(TrialResult {
        mean_utility: total_utility / design.max_patients as f64,
        per_interim_alloc: snapshots,
        patient_records: records,
        seed: design.seed,
        warnings,
    })
}
