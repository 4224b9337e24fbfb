//! Imputation of a censored largest observation.
//!
//! Six strategies produce `Y~(n) >= Y(n)`, always reclassified as an event:
//! Efron's tail correction (value unchanged), a predicted difference that
//! needs only the random-censorship assumption, and four methods built on a
//! log-normal AFT fit (conditional mean or median, each either from one fit
//! or averaged over bootstrap refits).

pub mod aft;
pub mod normal;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use aft::{conditional_mean_time, conditional_median_time, fit_aft_stute, AftFit, Center};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::jackknife::ImputedSample;
use crate::km::{Observation, OrderedSample};
use crate::rng;

pub const DEFAULT_RESAMPLES: usize = 100;
pub const DEFAULT_GAP_FRACTION: f64 = 0.25;

/// Identifies which strategy produced an [`ImputedSample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Efron,
    PredictedDifference,
    ConditionalMean,
    ConditionalMedian,
    ResampledMean,
    ResampledMedian,
}

impl MethodTag {
    pub fn name(self) -> &'static str {
        match self {
            MethodTag::Efron => "efron",
            MethodTag::PredictedDifference => "predicted-difference",
            MethodTag::ConditionalMean => "conditional-mean",
            MethodTag::ConditionalMedian => "conditional-median",
            MethodTag::ResampledMean => "resampled-mean",
            MethodTag::ResampledMedian => "resampled-median",
        }
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

fn default_gap_fraction() -> f64 {
    DEFAULT_GAP_FRACTION
}

/// An imputation strategy with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ImputationMethod {
    Efron,
    PredictedDifference {
        #[serde(default = "default_gap_fraction")]
        gap_fraction: f64,
    },
    ConditionalMean,
    ConditionalMedian,
    ResampledMean {
        #[serde(default = "default_resamples")]
        resamples: usize,
    },
    ResampledMedian {
        #[serde(default = "default_resamples")]
        resamples: usize,
    },
}

impl Default for ImputationMethod {
    fn default() -> Self {
        ImputationMethod::PredictedDifference {
            gap_fraction: DEFAULT_GAP_FRACTION,
        }
    }
}

impl ImputationMethod {
    pub fn tag(&self) -> MethodTag {
        match self {
            ImputationMethod::Efron => MethodTag::Efron,
            ImputationMethod::PredictedDifference { .. } => MethodTag::PredictedDifference,
            ImputationMethod::ConditionalMean => MethodTag::ConditionalMean,
            ImputationMethod::ConditionalMedian => MethodTag::ConditionalMedian,
            ImputationMethod::ResampledMean { .. } => MethodTag::ResampledMean,
            ImputationMethod::ResampledMedian { .. } => MethodTag::ResampledMedian,
        }
    }

    pub fn needs_covariates(&self) -> bool {
        !matches!(
            self,
            ImputationMethod::Efron | ImputationMethod::PredictedDifference { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ImputationMethod::PredictedDifference { gap_fraction } if !(gap_fraction > 0.0 && gap_fraction <= 1.0) => {
                Err(Error::InvalidParameter(format!("gap fraction must be in (0, 1], got {gap_fraction}")))
            }
            ImputationMethod::ResampledMean { resamples } | ImputationMethod::ResampledMedian { resamples }
                if resamples == 0 =>
            {
                Err(Error::InvalidParameter("resample count must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Parses a method name as used on the command line.
    pub fn from_name(name: &str, gap_fraction: f64, resamples: usize) -> Result<Self> {
        let method = match name {
            "efron" => ImputationMethod::Efron,
            "predicted-difference" | "nu" => ImputationMethod::PredictedDifference { gap_fraction },
            "conditional-mean" => ImputationMethod::ConditionalMean,
            "conditional-median" => ImputationMethod::ConditionalMedian,
            "resampled-mean" => ImputationMethod::ResampledMean { resamples },
            "resampled-median" => ImputationMethod::ResampledMedian { resamples },
            other => return Err(Error::Config(format!("unknown imputation method `{other}`"))),
        };
        method.validate()?;
        Ok(method)
    }

    /// Imputes the largest observation of `data`, using its covariates when
    /// the method needs them. `seed` drives bootstrap resampling only.
    pub fn impute<'a>(&self, data: &'a Dataset, seed: u64) -> Result<ImputedSample<'a>> {
        match &data.covariates {
            Some(x) => CovariateImputer::new(*self, x, seed).impute_largest(&data.sample),
            None => self.impute_largest(&data.sample),
        }
    }
}

/// Produces the imputed largest observation for a sample.
pub trait ImputeLargest {
    fn impute_largest<'a>(&self, s: &'a OrderedSample) -> Result<ImputedSample<'a>>;
}

/// Covariate-free imputation; AFT-based methods report a configuration error.
impl ImputeLargest for ImputationMethod {
    fn impute_largest<'a>(&self, s: &'a OrderedSample) -> Result<ImputedSample<'a>> {
        match *self {
            ImputationMethod::Efron => efron_reclassify(s),
            ImputationMethod::PredictedDifference { gap_fraction } => impute_predicted_difference(s, gap_fraction),
            other => Err(Error::Config(format!("imputation method `{}` requires covariates", other.tag()))),
        }
    }
}

/// Imputation with access to covariate rows aligned with the sample.
#[derive(Debug, Clone, Copy)]
pub struct CovariateImputer<'x> {
    pub method: ImputationMethod,
    pub covariates: &'x DMatrix<f64>,
    pub seed: u64,
}

impl<'x> CovariateImputer<'x> {
    pub fn new(method: ImputationMethod, covariates: &'x DMatrix<f64>, seed: u64) -> Self {
        Self {
            method,
            covariates,
            seed,
        }
    }
}

impl ImputeLargest for CovariateImputer<'_> {
    fn impute_largest<'a>(&self, s: &'a OrderedSample) -> Result<ImputedSample<'a>> {
        require_censored_last(s)?;
        let x = self.covariates;
        let y_n = s.largest();
        let x_n: Vec<f64> = x.row(s.len() - 1).iter().copied().collect();
        let time = match self.method {
            ImputationMethod::Efron | ImputationMethod::PredictedDifference { .. } => {
                return self.method.impute_largest(s);
            }
            ImputationMethod::ConditionalMean => conditional_mean_time(&fit_aft_stute(x, s)?, &x_n, y_n)?,
            ImputationMethod::ConditionalMedian => conditional_median_time(&fit_aft_stute(x, s)?, &x_n, y_n)?,
            ImputationMethod::ResampledMean { resamples } => impute_resampled(Center::Mean, x, s, resamples, self.seed)?,
            ImputationMethod::ResampledMedian { resamples } => {
                impute_resampled(Center::Median, x, s, resamples, self.seed)?
            }
        };
        ImputedSample::new(s, time, self.method.tag())
    }
}

fn require_censored_last(s: &OrderedSample) -> Result<()> {
    if s.events()[s.len() - 1] {
        Err(Error::NotApplicable("largest observation is uncensored".into()))
    } else {
        Ok(())
    }
}

/// Efron's tail correction: keep `Y(n)` and treat it as an event.
pub fn efron_reclassify(s: &OrderedSample) -> Result<ImputedSample<'_>> {
    require_censored_last(s)?;
    ImputedSample::new(s, s.largest(), MethodTag::Efron)
}

/// The predicted difference `nu`: mean gap between consecutive distinct
/// event times among the top `ceil(q n)` observations. The window grows
/// downward until it holds two distinct event times.
pub fn predicted_difference(s: &OrderedSample, gap_fraction: f64) -> Result<f64> {
    if !(gap_fraction > 0.0 && gap_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("gap fraction must be in (0, 1], got {gap_fraction}")));
    }
    let n = s.len();
    let start_window = ((gap_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut lowest = f64::INFINITY;
    let mut highest = f64::NEG_INFINITY;
    let mut distinct = 0usize;
    // walk down from the top, counting distinct event times
    for (k, i) in (0..n).rev().enumerate() {
        if s.events()[i] {
            let t = s.times()[i];
            if t != lowest {
                distinct += 1;
            }
            lowest = lowest.min(t);
            highest = highest.max(t);
        }
        if k + 1 >= start_window && distinct >= 2 {
            return Ok((highest - lowest) / (distinct - 1) as f64);
        }
    }
    Err(Error::InsufficientData(
        "predicted difference needs at least two distinct uncensored times".into(),
    ))
}

/// `Y~(n) = Y(n) + nu`.
pub fn impute_predicted_difference(s: &OrderedSample, gap_fraction: f64) -> Result<ImputedSample<'_>> {
    require_censored_last(s)?;
    let nu = predicted_difference(s, gap_fraction)?;
    ImputedSample::new(s, s.largest() + nu, MethodTag::PredictedDifference)
}

/// Average of conditional imputations over `resamples` bootstrap refits of
/// the AFT model. Resample `b` draws its rows from the stream `(seed, b)`.
pub fn impute_resampled(center: Center, x: &DMatrix<f64>, s: &OrderedSample, resamples: usize, seed: u64) -> Result<f64> {
    use rand::Rng;
    if resamples == 0 {
        return Err(Error::InvalidParameter("resample count must be at least 1".into()));
    }
    let n = s.len();
    let draws = (0..resamples).map(|b| {
        let mut rng = rng::stream(seed, &[b as u64]);
        (0..n).map(|_| rng.random_range(0..n)).collect::<Vec<usize>>()
    });
    impute_with_resamples(center, x, s, draws)
}

/// [`impute_resampled`] over explicitly supplied row-index resamples.
pub fn impute_with_resamples<I>(center: Center, x: &DMatrix<f64>, s: &OrderedSample, resamples: I) -> Result<f64>
where
    I: IntoIterator<Item = Vec<usize>>,
{
    let y_n = s.largest();
    let x_n: Vec<f64> = x.row(s.len() - 1).iter().copied().collect();
    let observations: Vec<Observation> = s.observations().collect();

    let mut total = 0usize;
    let mut failed = 0usize;
    let mut sum = 0.0;
    for rows in resamples {
        total += 1;
        let raw: Vec<Observation> = rows.iter().map(|&i| observations[i]).collect();
        let xb = x.select_rows(rows.iter());
        let refit = Dataset::from_rows(&raw, Some(xb)).and_then(|d| {
            let xb = d.covariates.as_ref().expect("covariates present");
            fit_aft_stute(xb, &d.sample)
        });
        match refit.and_then(|fit| aft::conditional_time(&fit, &x_n, y_n, center)) {
            Ok(t) => sum += t,
            Err(_) => failed += 1,
        }
    }
    if total == 0 || 2 * failed > total || failed == total {
        return Err(Error::ResamplingFailed { failed, total });
    }
    Ok(sum / (total - failed) as f64)
}
