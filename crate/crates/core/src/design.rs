//! Trial design settings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::UtilityTable;
use crate::error::{Error, Result};

/// Which posterior engine an analysis uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Conjugate,
    Mcmc,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Conjugate => "conjugate",
            Engine::Mcmc => "mcmc",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conjugate" => Ok(Engine::Conjugate),
            "mcmc" => Ok(Engine::Mcmc),
            other => Err(Error::Config(format!(
                "unknown engine `{other}` (expected conjugate or mcmc)"
            ))),
        }
    }
}

/// Priors for both engines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Beta prior `alpha` for every conjugate cell.
    pub conjugate_alpha: f64,
    pub conjugate_beta: f64,
    /// Independent normal prior on every logistic coefficient.
    pub coefficient_prior_mean: f64,
    pub coefficient_prior_sd: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            conjugate_alpha: 1.0,
            conjugate_beta: 1.0,
            coefficient_prior_mean: 0.0,
            coefficient_prior_sd: 2.5,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("conjugate_alpha", self.conjugate_alpha),
            ("conjugate_beta", self.conjugate_beta),
            ("coefficient_prior_sd", self.coefficient_prior_sd),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !self.coefficient_prior_mean.is_finite() {
            return Err(Error::Config("coefficient_prior_mean must be finite".into()));
        }
        Ok(())
    }
}

/// Chain layout for the MCMC engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcSettings {
    pub chains: usize,
    pub warmup: usize,
    pub sampling: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings {
            chains: 4,
            warmup: 1000,
            sampling: 1000,
        }
    }
}

impl McmcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.warmup == 0 || self.sampling == 0 {
            return Err(Error::Config(
                "mcmc chains, warmup and sampling must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One design: the myopic constant `m`, the adaptation exponent `c`, and
/// everything needed to run a trial under it.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignConfig {
    /// `true` for a myopic design (m = 1).
    pub myopic: bool,
    /// Allocation exponent; 0 is fixed equal randomisation, 1 is fully adaptive.
    pub adapt_c: f64,
    pub max_patients: usize,
    pub num_interims: usize,
    pub prior: PriorSpec,
    pub engine: Engine,
    pub mcmc: McmcSettings,
    pub utilities: UtilityTable,
    /// Optional lower bound on every allocation probability. Off by default.
    pub min_alloc_prob: Option<f64>,
    pub seed: u64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            myopic: false,
            adapt_c: 0.0,
            max_patients: 2000,
            num_interims: 4,
            prior: PriorSpec::default(),
            engine: Engine::Conjugate,
            mcmc: McmcSettings::default(),
            utilities: UtilityTable::default(),
            min_alloc_prob: None,
            seed: 0,
        }
    }
}

impl DesignConfig {
    /// Design with the given `m` and `c`, defaults elsewhere.
    pub fn new(m: u8, c: f64) -> Result<Self> {
        let myopic = match m {
            0 => false,
            1 => true,
            other => return Err(Error::Config(format!("m must be 0 or 1, got {other}"))),
        };
        let design = DesignConfig {
            myopic,
            adapt_c: c,
            ..DesignConfig::default()
        };
        design.validate()?;
        Ok(design)
    }

    /// The four fixed/adaptive by dynamic/myopic designs, ordered
    /// `(m, c)` = (0,0), (0,1), (1,0), (1,1).
    pub fn table_designs() -> Vec<DesignConfig> {
        [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)]
            .into_iter()
            .map(|(m, c)| DesignConfig::new(m, c).expect("static design is valid"))
            .collect()
    }

    pub fn m(&self) -> u8 {
        self.myopic as u8
    }

    pub fn cohort_size(&self) -> usize {
        self.max_patients / self.num_interims
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.adapt_c.is_finite() && self.adapt_c >= 0.0) {
            return Err(Error::Config(format!(
                "c must be a non-negative real, got {}",
                self.adapt_c
            )));
        }
        if self.max_patients == 0 {
            return Err(Error::Config("max_patients must be positive".into()));
        }
        if self.num_interims == 0 {
            return Err(Error::Config("num_interims must be >= 1".into()));
        }
        if !self.max_patients.is_multiple_of(self.num_interims) {
            return Err(Error::Config(format!(
                "max_patients ({}) must be divisible by num_interims ({})",
                self.max_patients, self.num_interims
            )));
        }
        if let Some(floor) = self.min_alloc_prob {
            if !(0.0..=0.5).contains(&floor) {
                return Err(Error::Config(format!(
                    "min_alloc_prob must lie in [0, 0.5], got {floor}"
                )));
            }
        }
        self.prior.validate()?;
        self.mcmc.validate()?;
        self.utilities.validate()?;
        Ok(())
    }

    /// Short label such as `m0c1`.
    pub fn label(&self) -> String {
        format!("m{}c{}", self.m(), self.adapt_c)
    }
}
