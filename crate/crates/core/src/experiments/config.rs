use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imputation::ImputationMethod;
use crate::jackknife::LastWeightRule;
use crate::simgen::{Scenario, SkewedLaw, TailConstraint};

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_140_601;
pub const DEFAULT_REPLICATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Kg,
    Dist,
    Aft,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Kg => "kg",
            StudyKind::Dist => "dist",
            StudyKind::Aft => "aft",
        }
    }
}

/// How datasets are drawn for a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// One unconstrained dataset per replication.
    Unconditional,
    /// One dataset per replication, redrawn until the constraint holds.
    Constrained(TailConstraint),
    /// Two datasets per replication: the original estimators use one with
    /// `(delta(n-1), delta(n)) = (0, 1)`, the modified ones use one with
    /// `delta(n-1) = 0`.
    Paired,
}

/// Settings of one simulation study. Empty lists and missing options are
/// filled with per-study defaults by [`StudyConfig::resolved`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distributions: Vec<SkewedLaw>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    /// Target censoring levels in percent; 0 means no censoring.
    #[serde(default)]
    pub p_list: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imputation: Option<ImputationMethod>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub last_weight: LastWeightRule,
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn percent_grid(hi: u32) -> Vec<f64> {
    (1..=hi / 10).map(|k| f64::from(10 * k)).collect()
}

impl StudyConfig {
    /// The study with every field at its default.
    pub fn new(study: StudyKind) -> Self {
        Self {
            study,
            distributions: Vec::new(),
            n_list: Vec::new(),
            p_list: Vec::new(),
            replications: DEFAULT_REPLICATIONS,
            seed: DEFAULT_SEED,
            sampling: None,
            imputation: None,
            alpha: 0.0,
            last_weight: LastWeightRule::default(),
        }
        .resolved()
    }

    /// Reads TOML or JSON, chosen by file extension.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fills unset fields with the defaults of `self.study`.
    pub fn resolved(mut self) -> Self {
        let (n_list, p_max) = match self.study {
            StudyKind::Kg | StudyKind::Dist => (vec![30, 50, 100, 150], 90),
            StudyKind::Aft => (vec![30, 50, 100], 70),
        };
        if self.n_list.is_empty() {
            self.n_list = n_list;
        }
        if self.p_list.is_empty() {
            self.p_list = percent_grid(p_max);
        }
        if self.study == StudyKind::Dist && self.distributions.is_empty() {
            self.distributions = SkewedLaw::ALL.to_vec();
        }
        self.sampling.get_or_insert(match self.study {
            StudyKind::Dist => Sampling::Paired,
            StudyKind::Kg | StudyKind::Aft => Sampling::Unconditional,
        });
        self.imputation.get_or_insert(match self.study {
            StudyKind::Aft => ImputationMethod::ResampledMean {
                resamples: crate::imputation::DEFAULT_RESAMPLES,
            },
            StudyKind::Kg | StudyKind::Dist => ImputationMethod::default(),
        });
        self
    }

    pub fn imputation_method(&self) -> ImputationMethod {
        self.imputation.unwrap_or_default()
    }

    pub fn sampling_mode(&self) -> Sampling {
        self.sampling.unwrap_or(Sampling::Unconditional)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.p_list.is_empty() {
            return Err(Error::Config("n_list and p_list must not be empty".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("sample size {n} is below 2")));
        }
        if let Some(p) = self.p_list.iter().find(|p| !(0.0..100.0).contains(*p)) {
            return Err(Error::Config(format!("censoring percentage {p} outside [0, 100)")));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Config("alpha must be finite".into()));
        }
        if self.study != StudyKind::Dist && !self.distributions.is_empty() {
            return Err(Error::Config("distributions apply to the dist study only".into()));
        }
        let method = self.imputation_method();
        method.validate().map_err(|e| Error::Config(e.to_string()))?;
        if method.needs_covariates() && self.study != StudyKind::Aft {
            return Err(Error::Config(format!(
                "imputation method `{}` needs covariates, which the {} study does not have",
                method.tag(),
                self.study.name()
            )));
        }
        Ok(())
    }

    /// The data-generating scenarios covered by this configuration.
    pub fn scenarios(&self) -> Vec<Scenario> {
        match self.study {
            StudyKind::Kg => vec![Scenario::KoziolGreen],
            StudyKind::Dist => self.distributions.iter().map(|&law| Scenario::Skewed { law }).collect(),
            StudyKind::Aft => vec![Scenario::Aft { alpha: self.alpha }],
        }
    }
}
