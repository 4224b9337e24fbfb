//! Kaplan-Meier integrals with jackknife bias correction.
//!
//! The [`km`] module computes Kaplan-Meier weights and integrals of an
//! ordered right-censored sample. [`jackknife`] provides the closed-form
//! jackknife bias estimate and the modified estimator that imputes a
//! censored largest observation using one of the methods in [`imputation`].
//! [`simgen`] and [`experiments`] reproduce the Monte-Carlo studies.

pub mod data;
pub mod error;
pub mod experiments;
pub mod imputation;
pub mod jackknife;
pub mod km;
pub mod rng;
pub mod simgen;

pub use data::{read_dataset, write_dataset, Dataset};
pub use error::{Error, Result};
pub use imputation::{ImputationMethod, ImputeLargest, MethodTag};
pub use jackknife::{
    corrected_estimate, estimate_by_case, jackknife_bias, modified_estimates, EstimateBundle, ImputedSample,
    LastWeightRule,
};
pub use km::{km_integral, km_mean, km_survival, km_weights, order_sample, Observation, OrderedSample, TailCase};
