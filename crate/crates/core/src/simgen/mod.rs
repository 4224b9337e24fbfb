//! Seeded generation of right-censored datasets for the simulation studies.
//!
//! A [`CellGenerator`] fixes the lifetime law, sample size and calibrated
//! censoring law for one study cell; every call to
//! [`CellGenerator::generate`] draws a fresh dataset from the supplied RNG,
//! regenerating whole datasets until the tail constraint holds.

pub mod calibrate;
pub mod dist;
pub mod quadrature;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use calibrate::{
    calibrate_censoring, censoring_probability, AftLogLifetime, CensorFamily, LifetimeLaw, UniformSum,
};
pub use dist::{DistSpec, Sampler};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::km::{Observation, OrderedSample};
use crate::rng;

/// Attempts allowed per dataset before a constraint is declared infeasible.
pub const MAX_ATTEMPTS: usize = 100_000;

/// Coefficients of the log-normal AFT study, `beta_j = j + 1`.
pub const AFT_BETA: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];
pub const AFT_SIGMA: f64 = 1.0;

/// Conditioning on the censoring indicators of the two largest observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailConstraint {
    #[default]
    None,
    /// `delta(n-1) = 0`
    SecondLastCensored,
    /// `delta(n-1) = 0` and `delta(n) = 1`
    SecondLastCensoredLastUncensored,
}

impl TailConstraint {
    pub fn accepts(self, s: &OrderedSample) -> bool {
        let case = s.tail_case();
        match self {
            TailConstraint::None => true,
            TailConstraint::SecondLastCensored => !case.second_last,
            TailConstraint::SecondLastCensoredLastUncensored => !case.second_last && case.last,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TailConstraint::None => "none",
            TailConstraint::SecondLastCensored => "second-last-censored",
            TailConstraint::SecondLastCensoredLastUncensored => "second-last-censored-last-uncensored",
        }
    }
}

/// The four skewed lifetime laws and their paired censoring families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkewedLaw {
    LogNormal,
    Exponential,
    Gamma,
    Weibull,
}

impl SkewedLaw {
    pub const ALL: [SkewedLaw; 4] = [SkewedLaw::LogNormal, SkewedLaw::Exponential, SkewedLaw::Gamma, SkewedLaw::Weibull];

    pub fn lifetime(self) -> DistSpec {
        match self {
            SkewedLaw::LogNormal => DistSpec::LogNormal { meanlog: 1.1, sdlog: 1.0 },
            SkewedLaw::Exponential => DistSpec::Exponential { rate: 0.2 },
            SkewedLaw::Gamma => DistSpec::Gamma { shape: 4.0, rate: 1.0 },
            // density (3/38.96) t^2 exp(-t^3/38.96)
            SkewedLaw::Weibull => DistSpec::Weibull {
                shape: 3.0,
                scale: 38.96f64.cbrt(),
            },
        }
    }

    pub fn censor_family(self) -> CensorFamily {
        match self {
            SkewedLaw::Exponential => CensorFamily::Exponential,
            _ => CensorFamily::UniformA2A,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SkewedLaw::LogNormal => "lognormal",
            SkewedLaw::Exponential => "exponential",
            SkewedLaw::Gamma => "gamma",
            SkewedLaw::Weibull => "weibull",
        }
    }
}

/// Data-generating model of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Scenario {
    /// `T ~ Exp(1)`, `C ~ Exp(lambda)`.
    KoziolGreen,
    Skewed { law: SkewedLaw },
    /// Log-normal AFT with five U(0,1) covariates, `log C ~ U(a, 2a)`.
    Aft { alpha: f64 },
}

impl Scenario {
    pub fn name(&self) -> String {
        match self {
            Scenario::KoziolGreen => "kg".into(),
            Scenario::Skewed { law } => law.name().into(),
            Scenario::Aft { .. } => "aft".into(),
        }
    }

    /// Analytic `E[T]`.
    pub fn true_mean(&self) -> f64 {
        match *self {
            Scenario::KoziolGreen => 1.0,
            Scenario::Skewed { law } => law.lifetime().mean(),
            Scenario::Aft { alpha } => aft_true_mean(alpha, &AFT_BETA, AFT_SIGMA),
        }
    }

    pub fn has_covariates(&self) -> bool {
        matches!(self, Scenario::Aft { .. })
    }
}

/// `E[exp(alpha + x'beta + sigma eps)]` for `x ~ U(0,1)^p`.
pub fn aft_true_mean(alpha: f64, beta: &[f64], sigma: f64) -> f64 {
    let covariate_factor: f64 = beta
        .iter()
        .map(|&b| if b == 0.0 { 1.0 } else { b.exp_m1() / b })
        .product();
    (alpha + 0.5 * sigma * sigma).exp() * covariate_factor
}

/// A calibrated censoring law. `p = 0` means no censoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CensoringLaw {
    Never,
    Exponential { rate: f64 },
    /// `U(a, 2a)`, on the log scale for the AFT model.
    UniformA2A { a: f64 },
}

impl CensoringLaw {
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            CensoringLaw::Never => None,
            CensoringLaw::Exponential { rate } => Some(rate),
            CensoringLaw::UniformA2A { a } => Some(a),
        }
    }

    fn sampler(&self) -> Result<Option<Sampler>> {
        match *self {
            CensoringLaw::Never => Ok(None),
            CensoringLaw::Exponential { rate } => DistSpec::Exponential { rate }.sampler().map(Some),
            CensoringLaw::UniformA2A { a } => DistSpec::Uniform { lo: a, hi: 2.0 * a }.sampler().map(Some),
        }
    }
}

/// One generated dataset and its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDataset {
    pub data: Dataset,
    pub true_mean: f64,
    /// Target censoring probability as a fraction.
    pub target_censoring: f64,
    /// Datasets drawn until the constraint held (1 when unconstrained).
    pub attempts: usize,
}

impl GeneratedDataset {
    pub fn sample(&self) -> &OrderedSample {
        &self.data.sample
    }
}

fn validate_cell(n: usize, p: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewObservations(n));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("censoring fraction must be in [0, 1), got {p}")));
    }
    Ok(())
}

/// Calibrated generator for one `(scenario, n, p)` cell.
#[derive(Debug, Clone)]
pub struct CellGenerator {
    scenario: Scenario,
    n: usize,
    p: f64,
    constraint: TailConstraint,
    lifetime: Sampler,
    censoring: CensoringLaw,
    censor_sampler: Option<Sampler>,
    true_mean: f64,
}

impl CellGenerator {
    /// Calibrates the censoring law for target fraction `p` (`0 <= p < 1`).
    /// With `p = 0` nothing is censored and the constraint is not applied.
    pub fn new(scenario: Scenario, n: usize, p: f64, constraint: TailConstraint) -> Result<Self> {
        validate_cell(n, p)?;
        let (lifetime, censoring) = match scenario {
            Scenario::KoziolGreen => {
                let censoring = if p == 0.0 {
                    CensoringLaw::Never
                } else {
                    CensoringLaw::Exponential { rate: p / (1.0 - p) }
                };
                (DistSpec::Exponential { rate: 1.0 }.sampler()?, censoring)
            }
            Scenario::Skewed { law } => {
                let spec = law.lifetime();
                let censoring = if p == 0.0 {
                    CensoringLaw::Never
                } else {
                    let family = law.censor_family();
                    let param = calibrate_censoring(&spec, family, p)?;
                    match family {
                        CensorFamily::Exponential => CensoringLaw::Exponential { rate: param },
                        CensorFamily::UniformA2A => CensoringLaw::UniformA2A { a: param },
                    }
                };
                (spec.sampler()?, censoring)
            }
            Scenario::Aft { alpha } => {
                let censoring = if p == 0.0 {
                    CensoringLaw::Never
                } else {
                    let law = AftLogLifetime::new(alpha, &AFT_BETA, AFT_SIGMA)?;
                    CensoringLaw::UniformA2A {
                        a: calibrate_censoring(&law, CensorFamily::UniformA2A, p)?,
                    }
                };
                // the lifetime sampler is unused; log-times are built from covariates
                (DistSpec::Normal { mean: 0.0, sd: AFT_SIGMA }.sampler()?, censoring)
            }
        };
        let constraint = if p == 0.0 { TailConstraint::None } else { constraint };
        Ok(Self {
            scenario,
            n,
            p,
            constraint,
            lifetime,
            censor_sampler: censoring.sampler()?,
            censoring,
            true_mean: scenario.true_mean(),
        })
    }

    pub fn censoring(&self) -> CensoringLaw {
        self.censoring
    }

    pub fn true_mean(&self) -> f64 {
        self.true_mean
    }

    pub fn constraint(&self) -> TailConstraint {
        self.constraint
    }

    /// Draws one `(T, C)` pair on the scale the censoring law lives on,
    /// returning the observation and, for the AFT model, the covariate row.
    fn draw_pair<R: Rng + ?Sized>(&self, rng: &mut R, x_row: &mut [f64]) -> Observation {
        match self.scenario {
            Scenario::Aft { alpha } => {
                let mut z = alpha;
                for (x, b) in x_row.iter_mut().zip(AFT_BETA) {
                    *x = rng.random::<f64>();
                    z += b * *x;
                }
                let eps: f64 = StandardNormal.sample(rng);
                z += AFT_SIGMA * eps;
                match &self.censor_sampler {
                    Some(c) => {
                        let log_c = c.sample(rng);
                        Observation::new(z.min(log_c).exp(), z <= log_c)
                    }
                    None => Observation::event(z.exp()),
                }
            }
            _ => {
                let t = self.lifetime.sample(rng);
                match &self.censor_sampler {
                    Some(c) => {
                        let c = c.sample(rng);
                        Observation::new(t.min(c), t <= c)
                    }
                    None => Observation::event(t),
                }
            }
        }
    }

    fn draw_once<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Dataset> {
        let p = if self.scenario.has_covariates() { AFT_BETA.len() } else { 0 };
        let mut raw = Vec::with_capacity(self.n);
        let mut x_values = Vec::with_capacity(self.n * p);
        let mut row = vec![0.0; p];
        for _ in 0..self.n {
            raw.push(self.draw_pair(rng, &mut row));
            x_values.extend_from_slice(&row);
        }
        let covariates = (p > 0).then(|| DMatrix::from_row_slice(self.n, p, &x_values));
        Dataset::from_rows(&raw, covariates)
    }

    /// Draws datasets until the tail constraint holds.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GeneratedDataset> {
        for attempt in 1..=MAX_ATTEMPTS {
            let data = self.draw_once(rng)?;
            if self.constraint.accepts(&data.sample) {
                return Ok(GeneratedDataset {
                    data,
                    true_mean: self.true_mean,
                    target_censoring: self.p,
                    attempts: attempt,
                });
            }
        }
        Err(Error::Infeasible {
            constraint: self.constraint.name().into(),
            attempts: MAX_ATTEMPTS,
        })
    }

    /// Fraction of censored pairs among `draws` unconstrained draws.
    pub fn empirical_censoring<R: Rng + ?Sized>(&self, rng: &mut R, draws: usize) -> f64 {
        let mut row = vec![0.0; if self.scenario.has_covariates() { AFT_BETA.len() } else { 0 }];
        let censored = (0..draws).filter(|_| !self.draw_pair(rng, &mut row).event).count();
        censored as f64 / draws as f64
    }
}

/// Koziol-Green dataset: `T ~ Exp(1)`, `C ~ Exp(p / (1 - p))`.
pub fn gen_koziol_green(n: usize, p: f64, seed: u64) -> Result<GeneratedDataset> {
    CellGenerator::new(Scenario::KoziolGreen, n, p, TailConstraint::None)?.generate(&mut rng::stream(seed, &[]))
}

/// Skewed-lifetime dataset with its paired censoring family.
pub fn gen_skewed(law: SkewedLaw, n: usize, p: f64, seed: u64, constraint: TailConstraint) -> Result<GeneratedDataset> {
    CellGenerator::new(Scenario::Skewed { law }, n, p, constraint)?.generate(&mut rng::stream(seed, &[]))
}

/// Log-normal AFT dataset with covariates.
pub fn gen_aft(n: usize, p: f64, seed: u64, alpha: f64) -> Result<GeneratedDataset> {
    CellGenerator::new(Scenario::Aft { alpha }, n, p, TailConstraint::None)?.generate(&mut rng::stream(seed, &[]))
}
