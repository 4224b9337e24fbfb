//! Delete-1 jackknife bias of the K-M integral and its tail-imputed variant.
//!
//! The closed-form jackknife bias is nonzero only when the largest
//! observation is an event and the second largest is censored. The modified
//! estimators replace a censored `Y(n)` by an imputed `Y~(n)` treated as an
//! event, so the bias correction also applies in the `(0, 0)` case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imputation::{ImputeLargest, MethodTag};
use crate::km::{km_weights, weighted_sum, OrderedSample, TailCase};

/// A sample whose censored largest observation has been replaced by an
/// imputed event time.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedSample<'a> {
    base: &'a OrderedSample,
    imputed_time: f64,
    method: MethodTag,
}

impl<'a> ImputedSample<'a> {
    pub fn new(base: &'a OrderedSample, imputed_time: f64, method: MethodTag) -> Result<Self> {
        if base.events()[base.len() - 1] {
            return Err(Error::NotApplicable(
                "largest observation is uncensored; nothing to impute".into(),
            ));
        }
        if !imputed_time.is_finite() || imputed_time < base.largest() {
            return Err(Error::InvalidParameter(format!(
                "imputed time {imputed_time} must be finite and >= Y(n) = {}",
                base.largest()
            )));
        }
        Ok(Self {
            base,
            imputed_time,
            method,
        })
    }

    pub fn base(&self) -> &'a OrderedSample {
        self.base
    }

    pub fn imputed_time(&self) -> f64 {
        self.imputed_time
    }

    /// The reclassified indicator of the imputed observation, always an event.
    pub fn imputed_event(&self) -> bool {
        true
    }

    pub fn method(&self) -> MethodTag {
        self.method
    }
}

/// Which `w_n` enters the modified estimator when `Y(n)` was censored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LastWeightRule {
    /// `w_n` computed as if `delta(n) = 1`.
    #[default]
    Reclassified,
    /// `w_n` computed from the observed `delta(n) = 0`, i.e. zero.
    Observed,
}

/// Estimates for one sample under the case table of the last two indicators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    pub s_hat: f64,
    pub bias: f64,
    pub s_tilde: f64,
    pub modified: bool,
    pub case: TailCase,
    pub imputed_time: Option<f64>,
}

impl EstimateBundle {
    fn new(s_hat: f64, bias: f64, modified: bool, case: TailCase, imputed_time: Option<f64>) -> Self {
        Self {
            s_hat,
            bias,
            s_tilde: s_hat - bias,
            modified,
            case,
            imputed_time,
        }
    }
}

/// `prod_{j=1}^{n-2} ((n-1-j)/(n-j))^delta(j)`; 1 for `n = 2`.
pub fn tail_product(s: &OrderedSample) -> f64 {
    let n = s.len();
    s.events()[..n - 2]
        .iter()
        .enumerate()
        .filter(|(_, &e)| e)
        .map(|(k, _)| (n - 2 - k) as f64 / (n - 1 - k) as f64)
        .product()
}

fn shrink_factor(n: usize) -> f64 {
    (n - 1) as f64 / n as f64
}

/// Closed-form delete-1 jackknife bias of the K-M integral.
pub fn jackknife_bias<F>(s: &OrderedSample, phi: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let case = s.tail_case();
    if !case.last || case.second_last {
        return 0.0;
    }
    -shrink_factor(s.len()) * phi(s.largest()) * tail_product(s)
}

/// K-M integral, its jackknife bias and the bias-corrected estimate.
pub fn corrected_estimate<F>(s: &OrderedSample, phi: F) -> Result<EstimateBundle>
where
    F: Fn(f64) -> f64,
{
    let w = km_weights(s);
    let s_hat = weighted_sum(s.times(), &w.weights, &phi)?;
    let bias = jackknife_bias(s, &phi);
    Ok(EstimateBundle::new(s_hat, bias, false, s.tail_case(), None))
}

/// `w_n` under the given rule.
pub fn last_weight(s: &OrderedSample, rule: LastWeightRule) -> f64 {
    let n = s.len();
    let last_event = s.events()[n - 1];
    if !last_event && rule == LastWeightRule::Observed {
        return 0.0;
    }
    // w_n = 1 * prod_{j<n} ((n-j)/(n-j+1))^delta(j)
    s.events()[..n - 1]
        .iter()
        .enumerate()
        .filter(|(_, &e)| e)
        .map(|(k, _)| (n - 1 - k) as f64 / (n - k) as f64)
        .product()
}

/// Adjusted weight `w'_n = w_n + ((n-1)/n) * tail_product`.
pub fn adjusted_last_weight(s: &OrderedSample, rule: LastWeightRule) -> f64 {
    last_weight(s, rule) + shrink_factor(s.len()) * tail_product(s)
}

/// Modified estimator, bias and corrected estimator for a sample whose
/// largest observation was censored and has been imputed.
pub fn modified_estimates<F>(
    imp: &ImputedSample<'_>,
    phi: F,
    rule: LastWeightRule,
) -> Result<EstimateBundle>
where
    F: Fn(f64) -> f64,
{
    let s = imp.base();
    let n = s.len();
    let case = s.tail_case();
    if case.last {
        return Err(Error::NotApplicable(
            "modified estimator requires a censored largest observation".into(),
        ));
    }
    let w = km_weights(s);
    let head = weighted_sum(&s.times()[..n - 1], &w.weights[..n - 1], &phi)?;
    let y_imp = imp.imputed_time();
    let phi_imp = phi(y_imp);
    if !phi_imp.is_finite() {
        return Err(Error::NonFiniteIntegrand {
            index: n - 1,
            time: y_imp,
        });
    }
    let (last_w, bias) = if case.second_last {
        (last_weight(s, rule), 0.0)
    } else {
        (
            adjusted_last_weight(s, rule),
            -shrink_factor(n) * phi_imp * tail_product(s),
        )
    };
    let s_hat = head + last_w * phi_imp;
    Ok(EstimateBundle::new(s_hat, bias, true, case, Some(y_imp)))
}

/// Dispatch on `(delta(n-1), delta(n))`: the original estimators when the
/// largest observation is an event, the modified ones otherwise.
pub fn estimate_by_case<F>(
    s: &OrderedSample,
    phi: F,
    imputer: Option<&dyn ImputeLargest>,
    rule: LastWeightRule,
) -> Result<EstimateBundle>
where
    F: Fn(f64) -> f64,
{
    if s.tail_case().last {
        return corrected_estimate(s, phi);
    }
    let imputer = imputer.ok_or_else(|| {
        Error::Config("largest observation is censored and no imputation method was given".into())
    })?;
    let imp = imputer.impute_largest(s)?;
    modified_estimates(&imp, phi, rule)
}
