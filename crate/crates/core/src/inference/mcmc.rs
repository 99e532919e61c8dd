//! Bernoulli-logistic regression sampled by preconditioned random-walk
//! Metropolis.
//!
//! The sampler first finds the posterior mode by Newton's method and uses the
//! inverse Hessian there (the Laplace covariance) to shape proposals. Chains
//! start from over-dispersed points around the mode, tune a global step scale
//! toward a 30% acceptance rate during warmup, and then sample with the scale
//! frozen. Each chain owns a ChaCha8 stream selected by its index, so the
//! output does not depend on how chains are scheduled.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Cell, PosteriorSummary, Posteriors, StageData};
use crate::design::{Engine, PriorSpec};
use crate::domain::{Action, History, Stage};
use crate::error::{Error, Result};

const TARGET_ACCEPT: f64 = 0.3;
const RHAT_LIMIT: f64 = 1.05;

/// Logistic coefficients for one stage model.
///
/// Stage one: `(b10, b11)` for `b10 + b11*a1`. Dynamic stage two:
/// `(b20, b21, b22, b23)` for `b20 + b21*a2 + b22*a1 + b23*a1*a2`. Pooled
/// stage two: `(b20, b21)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    pub stage: Stage,
    pub values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(stage: Stage, values: Vec<f64>) -> Result<Self> {
        match (stage, values.len()) {
            (Stage::One, 2) | (Stage::Two, 2) | (Stage::Two, 4) => Ok(CoefficientVector { stage, values }),
            (s, n) => Err(Error::Argument(format!(
                "a stage {} coefficient vector cannot have {n} entries",
                s as u8
            ))),
        }
    }

    pub fn is_pooled(&self) -> bool {
        self.stage == Stage::Two && self.values.len() == 2
    }
}

/// Covariate row for a cell: `[1, a1]`, `[1, a2, a1, a1*a2]` or `[1, a2]`.
fn covariates(history: &History, action: Action) -> Vec<f64> {
    let a = action.bit() as f64;
    match (history.stage(), history.stage1_action()) {
        (Stage::One, _) => vec![1.0, a],
        (Stage::Two, None) => vec![1.0, a],
        (Stage::Two, Some(a1)) => {
            let a1 = a1.bit() as f64;
            vec![1.0, a, a1, a1 * a]
        }
    }
}

/// Evaluate the stage's linear predictor at `(history, action)`.
pub fn linear_predictor(coeffs: &CoefficientVector, history: &History, action: Action) -> Result<f64> {
    let shape_ok = match history.stage() {
        Stage::One => coeffs.stage == Stage::One,
        Stage::Two => coeffs.stage == Stage::Two && (history.is_pooled() == coeffs.is_pooled()),
    };
    if !shape_ok {
        return Err(Error::Argument(format!(
            "{}-entry stage {} coefficients do not fit history {history}",
            coeffs.values.len(),
            coeffs.stage as u8
        )));
    }
    let x = covariates(history, action);
    Ok(x.iter().zip(&coeffs.values).map(|(x, b)| x * b).sum())
}

#[inline]
pub(crate) fn inv_logit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

struct Row {
    x: DVector<f64>,
    events: f64,
    trials: f64,
}

struct LogitModel {
    rows: Vec<Row>,
    dim: usize,
    prior_mean: f64,
    prior_precision: f64,
}

impl LogitModel {
    fn from_stage(data: &StageData, prior: &PriorSpec) -> Self {
        let rows: Vec<Row> = data
            .cells()
            .iter()
            .map(|(cell, counts)| Row {
                x: DVector::from_vec(covariates(&cell.history, cell.action)),
                events: counts.events as f64,
                trials: counts.trials as f64,
            })
            .collect();
        let dim = rows[0].x.len();
        LogitModel {
            rows,
            dim,
            prior_mean: prior.coefficient_prior_mean,
            prior_precision: prior.coefficient_prior_sd.powi(-2),
        }
    }

    fn log_density(&self, beta: &DVector<f64>) -> f64 {
        let mut lp = 0.0;
        for row in &self.rows {
            if row.trials == 0.0 {
                continue;
            }
            let eta = row.x.dot(beta);
            // log sigma(eta) = -softplus(-eta); log(1 - sigma(eta)) = -softplus(eta)
            lp -= row.events * softplus(-eta) + (row.trials - row.events) * softplus(eta);
        }
        let centred = beta.map(|b| b - self.prior_mean);
        lp - 0.5 * self.prior_precision * centred.norm_squared()
    }

    /// Gradient and negative Hessian of the log density.
    fn gradient_and_information(&self, beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let mut grad = beta.map(|b| -(b - self.prior_mean) * self.prior_precision);
        let mut info = DMatrix::identity(self.dim, self.dim) * self.prior_precision;
        for row in &self.rows {
            if row.trials == 0.0 {
                continue;
            }
            let p = inv_logit(row.x.dot(beta));
            grad += &row.x * (row.events - row.trials * p);
            info += &row.x * row.x.transpose() * (row.trials * p * (1.0 - p));
        }
        (grad, info)
    }

    /// Posterior mode and the Cholesky factor of the Laplace covariance.
    fn laplace(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let mut beta = DVector::from_element(self.dim, self.prior_mean);
        let mut current = self.log_density(&beta);
        for _ in 0..200 {
            let (grad, info) = self.gradient_and_information(&beta);
            let step = info
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Internal("posterior information is not positive definite".into()))?
                .solve(&grad);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-8 {
                let candidate = &beta + &step * t;
                let value = self.log_density(&candidate);
                if value.is_finite() && value >= current - 1e-12 {
                    beta = candidate;
                    current = value;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted || step.norm() * t < 1e-10 {
                break;
            }
        }
        if !current.is_finite() {
            return Err(Error::Internal("non-finite log density at the posterior mode".into()));
        }
        let (_, info) = self.gradient_and_information(&beta);
        let cov = info
            .cholesky()
            .ok_or_else(|| Error::Internal("posterior information is not positive definite".into()))?
            .inverse();
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Internal("Laplace covariance is not positive definite".into()))?
            .l();
        Ok((beta, chol))
    }
}

struct ChainOutput {
    draws: Vec<DVector<f64>>,
    accept_rate: f64,
}

fn run_chain(
    model: &LogitModel,
    mode: &DVector<f64>,
    chol: &DMatrix<f64>,
    warmup: usize,
    sampling: usize,
    seed: u64,
    chain: usize,
) -> Result<ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64 + 1);
    let dim = model.dim;
    let normal = |rng: &mut ChaCha8Rng| DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));

    let mut beta = mode + chol * normal(&mut rng) * 2.0;
    let mut current = model.log_density(&beta);
    if !current.is_finite() {
        return Err(Error::Internal("non-finite log density at chain start".into()));
    }
    let mut log_scale = (2.38 / (dim as f64).sqrt()).ln();
    let mut draws = Vec::with_capacity(sampling);
    let mut accepted = 0usize;

    for iter in 0..warmup + sampling {
        let proposal = &beta + chol * normal(&mut rng) * log_scale.exp();
        let value = model.log_density(&proposal);
        if !value.is_finite() {
            return Err(Error::Internal("non-finite log density during sampling".into()));
        }
        let log_u: f64 = rng.random::<f64>().ln();
        let accept = log_u < value - current;
        if accept {
            beta = proposal;
            current = value;
        }
        if iter < warmup {
            let a = if accept { 1.0 } else { 0.0 };
            log_scale += (a - TARGET_ACCEPT) / ((iter + 1) as f64).powf(0.6);
        } else {
            accepted += accept as usize;
            draws.push(beta.clone());
        }
    }
    Ok(ChainOutput {
        draws,
        accept_rate: accepted as f64 / sampling as f64,
    })
}

/// Split-chain potential scale reduction for one scalar quantity.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let half = chains.iter().map(Vec::len).min().unwrap_or(0) / 2;
    if half < 2 {
        return f64::NAN;
    }
    let pieces: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[half..2 * half]])
        .collect();
    let n = half as f64;
    let m = pieces.len() as f64;
    let means: Vec<f64> = pieces.iter().map(|p| p.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let between = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let within = pieces
        .iter()
        .zip(&means)
        .map(|(p, mu)| p.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * within + between / n;
    (var_plus / within).sqrt()
}

/// MCMC fit of one stage.
#[derive(Clone, Debug)]
pub struct McmcPosterior {
    /// Per-cell event-probability draws and their means.
    pub cells: Posteriors,
    /// Coefficient draws in chain-major order.
    pub coefficient_draws: Vec<CoefficientVector>,
    /// Split R-hat per coefficient.
    pub rhat: Vec<f64>,
    pub accept_rates: Vec<f64>,
    /// Convergence warnings; empty when every R-hat is within 1.05.
    pub warnings: Vec<String>,
}

impl McmcPosterior {
    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().fold(f64::NAN, f64::max)
    }
}

/// Sample the coefficient posterior of a stage model and push the draws
/// through the inverse logit for every cell of `data`.
pub fn posterior_mcmc(
    data: &StageData,
    prior: &PriorSpec,
    chains: usize,
    warmup: usize,
    sampling: usize,
    seed: u64,
) -> Result<McmcPosterior> {
    if chains == 0 || warmup == 0 || sampling == 0 {
        return Err(Error::Argument("chains, warmup and sampling must all be >= 1".into()));
    }
    prior.validate()?;
    let model = LogitModel::from_stage(data, prior);
    let (mode, chol) = model.laplace()?;

    let outputs: Vec<ChainOutput> = (0..chains)
        .into_par_iter()
        .map(|c| run_chain(&model, &mode, &chol, warmup, sampling, seed, c))
        .collect::<Result<_>>()?;

    let dim = model.dim;
    let rhat: Vec<f64> = (0..dim)
        .map(|j| {
            let per_chain: Vec<Vec<f64>> = outputs
                .iter()
                .map(|o| o.draws.iter().map(|b| b[j]).collect())
                .collect();
            split_rhat(&per_chain)
        })
        .collect();
    let warnings = rhat
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_nan() || **r > RHAT_LIMIT)
        .map(|(j, r)| format!("stage {} coefficient {j}: split R-hat {r:.4} exceeds {RHAT_LIMIT}", data.stage() as u8))
        .collect();

    let all: Vec<&DVector<f64>> = outputs.iter().flat_map(|o| o.draws.iter()).collect();
    let cells = data
        .cells()
        .keys()
        .map(|&cell: &Cell| {
            let x = DVector::from_vec(covariates(&cell.history, cell.action));
            let draws: Vec<f64> = all.iter().map(|b| inv_logit(x.dot(b))).collect();
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            (
                cell,
                PosteriorSummary {
                    mean_event_prob: mean,
                    draws: Some(draws),
                    engine: Engine::Mcmc,
                },
            )
        })
        .collect();

    Ok(McmcPosterior {
        cells,
        coefficient_draws: all
            .iter()
            .map(|b| CoefficientVector {
                stage: data.stage(),
                values: b.iter().copied().collect(),
            })
            .collect(),
        rhat,
        accept_rates: outputs.iter().map(|o| o.accept_rate).collect(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{posterior_conjugate, CellCounts};

    #[test]
    fn linear_predictor_examples() {
        let s1 = CoefficientVector::new(Stage::One, vec![0.0, 0.0]).unwrap();
        let eta = linear_predictor(&s1, &History::INITIAL, Action::Active).unwrap();
        assert_eq!(eta, 0.0);
        assert_eq!(inv_logit(eta), 0.5);

        let s2 = CoefficientVector::new(Stage::Two, vec![-1.0, 0.5, 0.25, -0.75]).unwrap();
        let eta = linear_predictor(&s2, &History::infected(Action::Active), Action::Active).unwrap();
        assert!((eta - (-1.0)).abs() < 1e-15);

        let pooled = CoefficientVector::new(Stage::Two, vec![-1.0, 0.5]).unwrap();
        assert_eq!(linear_predictor(&pooled, &History::POOLED, Action::Control).unwrap(), -1.0);
    }

    #[test]
    fn linear_predictor_shape_mismatch() {
        let s2 = CoefficientVector::new(Stage::Two, vec![-1.0, 0.5, 0.25, -0.75]).unwrap();
        assert!(linear_predictor(&s2, &History::INITIAL, Action::Active).is_err());
        assert!(linear_predictor(&s2, &History::POOLED, Action::Active).is_err());
        let s1 = CoefficientVector::new(Stage::One, vec![0.0, 1.0]).unwrap();
        assert!(linear_predictor(&s1, &History::infected(Action::Control), Action::Active).is_err());
        assert!(CoefficientVector::new(Stage::One, vec![0.0; 4]).is_err());
    }

    #[test]
    fn inv_logit_is_stable() {
        assert_eq!(inv_logit(-1000.0), 0.0);
        assert_eq!(inv_logit(1000.0), 1.0);
        assert!((softplus(-800.0)).abs() < 1e-300);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn rhat_of_identical_chains_is_near_one() {
        let c: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        let r = split_rhat(&[c.clone(), c.clone(), c.clone(), c]);
        assert!(r < 1.01, "{r}");
        let shifted = vec![vec![0.0, 0.1, 0.0, 0.1], vec![5.0, 5.1, 5.0, 5.1]];
        assert!(split_rhat(&shifted) > 2.0);
    }

    #[test]
    fn stage1_matches_conjugate_oracle() {
        let mut data = StageData::empty(Stage::One, false);
        for a in Action::ALL {
            data.set(Cell::stage1(a), CellCounts::new(50, 200).unwrap()).unwrap();
        }
        let fit = posterior_mcmc(&data, &PriorSpec::default(), 4, 1000, 1000, 11).unwrap();
        assert!(fit.warnings.is_empty(), "{:?}", fit.warnings);
        let oracle = posterior_conjugate(CellCounts::new(50, 200).unwrap(), &PriorSpec::default());
        assert!((oracle.mean_event_prob - 51.0 / 202.0).abs() < 1e-15);
        for (cell, post) in &fit.cells {
            assert_eq!(post.draws.as_ref().unwrap().len(), 4000);
            assert!((post.mean_event_prob - 0.25).abs() < 0.03, "{cell}: {}", post.mean_event_prob);
            assert!((post.mean_event_prob - oracle.mean_event_prob).abs() < 0.03);
        }
    }

    #[test]
    fn empty_data_recovers_prior_pushforward() {
        let data = StageData::empty(Stage::Two, false);
        let fit = posterior_mcmc(&data, &PriorSpec::default(), 4, 500, 1000, 3).unwrap();
        for post in fit.cells.values() {
            assert!((post.mean_event_prob - 0.5).abs() < 0.05, "{}", post.mean_event_prob);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let mut data = StageData::empty(Stage::Two, true);
        data.set(Cell::new(History::POOLED, Action::Control), CellCounts::new(7, 30).unwrap()).unwrap();
        let a = posterior_mcmc(&data, &PriorSpec::default(), 4, 200, 200, 99).unwrap();
        let b = posterior_mcmc(&data, &PriorSpec::default(), 4, 200, 200, 99).unwrap();
        assert_eq!(a.cells, b.cells);
        let c = posterior_mcmc(&data, &PriorSpec::default(), 4, 200, 200, 100).unwrap();
        assert_ne!(a.cells, c.cells);
    }

    #[test]
    fn rejects_zero_chains() {
        let data = StageData::empty(Stage::One, false);
        assert!(posterior_mcmc(&data, &PriorSpec::default(), 0, 10, 10, 0).is_err());
    }
}
