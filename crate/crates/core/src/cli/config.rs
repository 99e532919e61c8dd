//! Configuration files.
//!
//! A config file is TOML with one section per command. Keys inside
//! `[simulate]`, `[sweep]` and `[report]` are spelled exactly like the
//! command's long flags; a flag given on the command line wins over the file.
//! Three shared sections apply to every command that runs trials:
//!
//! ```toml
//! [prior]
//! conjugate_alpha = 1.0
//! conjugate_beta = 1.0
//! coefficient_prior_mean = 0.0
//! coefficient_prior_sd = 2.5
//!
//! [mcmc]
//! chains = 4
//! warmup = 1000
//! sampling = 1000
//!
//! [utilities]
//! a1_0_y1_0 = 1.0
//! a1_1_y1_1_a2_0_y2_1 = 0.0
//! ```
//!
//! `[utilities]` overrides individual rows of the default table; rows not
//! listed keep their default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::design::{McmcSettings, PriorSpec};
use crate::domain::{UtilityRow, UtilityTable};
use crate::error::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub report: ReportSection,
    pub prior: Option<PriorSection>,
    pub mcmc: Option<McmcSection>,
    #[serde(default)]
    pub utilities: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateSection {
    pub r0: Option<f64>,
    pub r1: Option<f64>,
    pub s0: Option<f64>,
    pub s1: Option<f64>,
    pub m: Option<u8>,
    pub c: Option<f64>,
    pub seed: Option<u64>,
    pub engine: Option<String>,
    pub patients: Option<usize>,
    pub interims: Option<usize>,
    pub min_alloc_prob: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepSection {
    pub grid: Option<String>,
    pub grid_file: Option<PathBuf>,
    pub designs: Option<String>,
    pub replicates: Option<usize>,
    pub base_seed: Option<u64>,
    pub engine: Option<String>,
    pub threads: Option<usize>,
    pub patients: Option<usize>,
    pub interims: Option<usize>,
    pub min_alloc_prob: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ReportSection {
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub m: Option<u8>,
    pub format: Option<String>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub conjugate_alpha: Option<f64>,
    pub conjugate_beta: Option<f64>,
    pub coefficient_prior_mean: Option<f64>,
    pub coefficient_prior_sd: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    pub chains: Option<usize>,
    pub warmup: Option<usize>,
    pub sampling: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn prior(&self) -> PriorSpec {
        let d = PriorSpec::default();
        match &self.prior {
            None => d,
            Some(p) => PriorSpec {
                conjugate_alpha: p.conjugate_alpha.unwrap_or(d.conjugate_alpha),
                conjugate_beta: p.conjugate_beta.unwrap_or(d.conjugate_beta),
                coefficient_prior_mean: p.coefficient_prior_mean.unwrap_or(d.coefficient_prior_mean),
                coefficient_prior_sd: p.coefficient_prior_sd.unwrap_or(d.coefficient_prior_sd),
            },
        }
    }

    pub fn mcmc(&self) -> McmcSettings {
        let d = McmcSettings::default();
        match &self.mcmc {
            None => d,
            Some(m) => McmcSettings {
                chains: m.chains.unwrap_or(d.chains),
                warmup: m.warmup.unwrap_or(d.warmup),
                sampling: m.sampling.unwrap_or(d.sampling),
            },
        }
    }

    /// Default table with the file's `[utilities]` rows applied.
    pub fn utilities(&self) -> Result<UtilityTable> {
        let mut table = UtilityTable::default();
        for (key, &value) in &self.utilities {
            table.set(UtilityRow::from_key(key)?, value)?;
        }
        Ok(table)
    }
}
