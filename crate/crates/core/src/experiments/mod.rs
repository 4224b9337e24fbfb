//! Monte-Carlo studies of the four estimators.
//!
//! Each `(scenario, n, p)` cell draws `R` replications. Replication `r` of
//! cell `c` in scenario `k` reads random numbers only from the stream keyed
//! by `(seed, k, c, r)`, so results do not depend on how rayon schedules the
//! work. Per-cell aggregates use pairwise summation over replications in
//! index order.

mod config;
mod tables;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Sampling, StudyConfig, StudyKind, DEFAULT_REPLICATIONS, DEFAULT_SEED};
pub use tables::{emit_tables, read_cells, read_tables, TABLE_HEADER};

use crate::error::{Error, Result};
use crate::imputation::ImputationMethod;
use crate::jackknife::{corrected_estimate, modified_estimates, EstimateBundle, LastWeightRule};
use crate::rng;
use crate::simgen::{CellGenerator, DistSpec, GeneratedDataset, Scenario, TailConstraint};

/// Draws used to measure the realised censoring fraction of a cell.
pub const CENSORING_PROBE_DRAWS: usize = 100_000;
const PROBE_STREAM: u64 = u64::MAX;

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Estimator {
    S_hat,
    S_tilde,
    S_hat_star,
    S_tilde_star,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [Estimator::S_hat, Estimator::S_tilde, Estimator::S_hat_star, Estimator::S_tilde_star];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::S_hat => "S_hat",
            Estimator::S_tilde => "S_tilde",
            Estimator::S_hat_star => "S_hat_star",
            Estimator::S_tilde_star => "S_tilde_star",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Aggregate of one estimator over the replications of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub estimator: Estimator,
    pub n: usize,
    pub p_percent: f64,
    /// Mean of `estimate - true_mean` over valid replications.
    pub mean_bias: f64,
    /// Sample variance of the estimate over valid replications.
    pub variance: f64,
    pub replications: usize,
    pub valid_count: usize,
    /// Mean of the jackknife bias estimate attached to the estimator
    /// (`S_hat` and `S_hat_star` only).
    pub mean_jackknife_bias: Option<f64>,
}

impl RunSummary {
    /// Monte-Carlo standard error of `mean_bias`.
    pub fn std_error(&self) -> f64 {
        if self.valid_count == 0 {
            f64::NAN
        } else {
            (self.variance / self.valid_count as f64).sqrt()
        }
    }
}

/// Setup diagnostics of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub n: usize,
    pub p_percent: f64,
    /// Calibrated censoring rate or `a`; absent when nothing is censored.
    pub censoring_parameter: Option<f64>,
    /// Censored fraction over unconstrained probe draws.
    pub empirical_censoring: f64,
    /// Mean datasets drawn per accepted dataset, over all streams.
    pub mean_attempts: f64,
    /// Replications whose largest observation was imputed successfully.
    pub imputations: usize,
    /// Smallest `Y~(n) - Y(n)` over those imputations.
    pub min_imputation_gap: Option<f64>,
}

/// Results for one data-generating scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub scenario: String,
    pub true_mean: f64,
    pub config: StudyConfig,
    pub cells: Vec<CellDiagnostics>,
    /// Sorted by `(p_percent, n, estimator)`.
    pub summaries: Vec<RunSummary>,
    pub elapsed_seconds: f64,
}

impl StudyResult {
    pub fn summary(&self, estimator: Estimator, n: usize, p_percent: f64) -> Option<&RunSummary> {
        self.summaries
            .iter()
            .find(|s| s.estimator == estimator && s.n == n && s.p_percent == p_percent)
    }

    pub fn cell(&self, n: usize, p_percent: f64) -> Option<&CellDiagnostics> {
        self.cells.iter().find(|c| c.n == n && c.p_percent == p_percent)
    }
}

/// Analytic mean lifetime of a scenario.
pub fn true_mean(scenario: &Scenario) -> f64 {
    scenario.true_mean()
}

/// Analytic mean of a lifetime law; laws that put mass on negative values
/// are rejected.
pub fn lifetime_mean(spec: &DistSpec) -> Result<f64> {
    spec.validate()?;
    match *spec {
        DistSpec::Normal { .. } => Err(Error::InvalidParameter("normal law is not a lifetime law".into())),
        DistSpec::Uniform { lo, .. } if lo < 0.0 => {
            Err(Error::InvalidParameter("uniform lifetime must have a nonnegative support".into()))
        }
        _ => Ok(spec.mean()),
    }
}

/// Estimates from one replication; `None` marks an undefined estimator.
#[derive(Debug, Clone, Copy)]
struct Replicate {
    original: EstimateBundle,
    modified: Option<EstimateBundle>,
    /// `Y~(n) - Y(n)` when the largest observation was imputed.
    imputation_gap: Option<f64>,
    attempts: usize,
}

struct CellPlan {
    scenario_index: u64,
    cell_index: u64,
    n: usize,
    p_percent: f64,
    original: CellGenerator,
    modified: Option<CellGenerator>,
}

fn identity(t: f64) -> f64 {
    t
}

fn finite(b: &EstimateBundle) -> bool {
    b.s_hat.is_finite() && b.s_tilde.is_finite() && b.bias.is_finite()
}

/// Modified estimates for one dataset and the imputation gap, if any.
/// Errors that only mean "undefined for this sample" give `None` estimates.
fn modified_for(
    data: &GeneratedDataset,
    original: &EstimateBundle,
    method: ImputationMethod,
    rule: LastWeightRule,
    seed: u64,
) -> Result<(Option<EstimateBundle>, Option<f64>)> {
    if data.sample().tail_case().last {
        return Ok((Some(*original), None));
    }
    let imputed = match method.impute(&data.data, seed) {
        Ok(imp) => imp,
        Err(Error::Config(msg)) => return Err(Error::Config(msg)),
        Err(_) => return Ok((None, None)),
    };
    let gap = Some(imputed.imputed_time() - data.sample().largest());
    match modified_estimates(&imputed, identity, rule) {
        Ok(b) if finite(&b) => Ok((Some(b), gap)),
        Ok(_) | Err(Error::NonFiniteIntegrand { .. }) => Ok((None, gap)),
        Err(e) => Err(e),
    }
}

fn run_replicate(plan: &CellPlan, cfg: &StudyConfig, rep: u64) -> Result<Replicate> {
    let path = [plan.scenario_index, plan.cell_index, rep];
    let key = rng::derive_key(cfg.seed, &path);
    let method = cfg.imputation_method();
    let first = plan.original.generate(&mut rng::stream(key, &[0]))?;
    let original = corrected_estimate(first.sample(), identity)?;
    let impute_seed = rng::derive_key(key, &[2]);
    let ((modified, imputation_gap), attempts) = match &plan.modified {
        None => (
            modified_for(&first, &original, method, cfg.last_weight, impute_seed)?,
            first.attempts,
        ),
        Some(gen) => {
            let second = gen.generate(&mut rng::stream(key, &[1]))?;
            let second_original = corrected_estimate(second.sample(), identity)?;
            (
                modified_for(&second, &second_original, method, cfg.last_weight, impute_seed)?,
                first.attempts + second.attempts,
            )
        }
    };
    Ok(Replicate {
        original,
        modified,
        imputation_gap,
        attempts,
    })
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean and sample variance (0 with fewer than two values).
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, pairwise_sum(&squares) / (k - 1) as f64)
}

fn summarise(
    estimator: Estimator,
    plan: &CellPlan,
    replications: usize,
    true_mean: f64,
    estimates: &[f64],
    jackknife: Option<&[f64]>,
) -> RunSummary {
    let (mean, variance) = mean_and_variance(estimates);
    RunSummary {
        estimator,
        n: plan.n,
        p_percent: plan.p_percent,
        mean_bias: mean - true_mean,
        variance,
        replications,
        valid_count: estimates.len(),
        mean_jackknife_bias: jackknife.map(|b| mean_and_variance(b).0),
    }
}

fn aggregate(plan: &CellPlan, reps: &[Replicate], true_mean: f64) -> (Vec<RunSummary>, f64) {
    let r = reps.len();
    let s_hat: Vec<f64> = reps.iter().map(|x| x.original.s_hat).collect();
    let s_tilde: Vec<f64> = reps.iter().map(|x| x.original.s_tilde).collect();
    let bias: Vec<f64> = reps.iter().map(|x| x.original.bias).collect();
    let modified: Vec<&EstimateBundle> = reps.iter().filter_map(|x| x.modified.as_ref()).collect();
    let s_hat_star: Vec<f64> = modified.iter().map(|b| b.s_hat).collect();
    let s_tilde_star: Vec<f64> = modified.iter().map(|b| b.s_tilde).collect();
    let bias_star: Vec<f64> = modified.iter().map(|b| b.bias).collect();
    let attempts: Vec<f64> = reps.iter().map(|x| x.attempts as f64).collect();
    let summaries = vec![
        summarise(Estimator::S_hat, plan, r, true_mean, &s_hat, Some(&bias)),
        summarise(Estimator::S_tilde, plan, r, true_mean, &s_tilde, None),
        summarise(Estimator::S_hat_star, plan, r, true_mean, &s_hat_star, Some(&bias_star)),
        summarise(Estimator::S_tilde_star, plan, r, true_mean, &s_tilde_star, None),
    ];
    let streams = if plan.modified.is_some() { 2.0 } else { 1.0 };
    (summaries, pairwise_sum(&attempts) / (r as f64 * streams))
}

fn plan_cells(cfg: &StudyConfig, scenario_index: u64, scenario: Scenario) -> Result<Vec<CellPlan>> {
    let (first, second) = match cfg.sampling_mode() {
        Sampling::Unconditional => (TailConstraint::None, None),
        Sampling::Constrained(c) => (c, None),
        Sampling::Paired => (
            TailConstraint::SecondLastCensoredLastUncensored,
            Some(TailConstraint::SecondLastCensored),
        ),
    };
    let mut plans = Vec::new();
    for &p_percent in &cfg.p_list {
        for &n in &cfg.n_list {
            let p = p_percent / 100.0;
            plans.push(CellPlan {
                scenario_index,
                cell_index: plans.len() as u64,
                n,
                p_percent,
                original: CellGenerator::new(scenario, n, p, first)?,
                // without censoring both constraints are void, so one dataset serves
                modified: second
                    .filter(|_| p > 0.0)
                    .map(|c| CellGenerator::new(scenario, n, p, c))
                    .transpose()?,
            });
        }
    }
    Ok(plans)
}

fn run_cell(plan: &CellPlan, cfg: &StudyConfig, true_mean: f64) -> Result<(Vec<RunSummary>, CellDiagnostics)> {
    let reps = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| run_replicate(plan, cfg, r))
        .collect::<Result<Vec<_>>>()?;
    let (summaries, mean_attempts) = aggregate(plan, &reps, true_mean);
    let mut probe = rng::stream(cfg.seed, &[plan.scenario_index, plan.cell_index, PROBE_STREAM]);
    let diagnostics = CellDiagnostics {
        n: plan.n,
        p_percent: plan.p_percent,
        censoring_parameter: plan.original.censoring().parameter(),
        empirical_censoring: plan.original.empirical_censoring(&mut probe, CENSORING_PROBE_DRAWS),
        mean_attempts,
        imputations: reps.iter().filter(|r| r.imputation_gap.is_some()).count(),
        min_imputation_gap: reps.iter().filter_map(|r| r.imputation_gap).min_by(f64::total_cmp),
    };
    Ok((summaries, diagnostics))
}

/// Runs every scenario of the study on the current rayon pool. `progress`
/// is called once per finished cell, possibly from worker threads.
pub fn run_study_with_progress(
    cfg: &StudyConfig,
    progress: &(dyn Fn(&str, &CellDiagnostics) + Sync),
) -> Result<Vec<StudyResult>> {
    let cfg = cfg.clone().resolved();
    cfg.validate()?;
    let mut results = Vec::new();
    for (k, scenario) in cfg.scenarios().into_iter().enumerate() {
        let start = Instant::now();
        let name = scenario.name();
        let mean = true_mean(&scenario);
        let plans = plan_cells(&cfg, k as u64, scenario)?;
        let cells = plans
            .par_iter()
            .map(|plan| {
                let out = run_cell(plan, &cfg, mean)?;
                progress(&name, &out.1);
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut summaries = Vec::with_capacity(cells.len() * Estimator::ALL.len());
        let mut diagnostics = Vec::with_capacity(cells.len());
        for (s, d) in cells {
            summaries.extend(s);
            diagnostics.push(d);
        }
        sort_summaries(&mut summaries);
        diagnostics.sort_by(|a, b| a.p_percent.total_cmp(&b.p_percent).then(a.n.cmp(&b.n)));
        results.push(StudyResult {
            scenario: name,
            true_mean: mean,
            config: cfg.clone(),
            cells: diagnostics,
            summaries,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(results)
}

pub fn run_study(cfg: &StudyConfig) -> Result<Vec<StudyResult>> {
    run_study_with_progress(cfg, &|_, _| {})
}

pub(crate) fn sort_summaries(summaries: &mut [RunSummary]) {
    summaries.sort_by(|a, b| {
        a.p_percent
            .total_cmp(&b.p_percent)
            .then(a.n.cmp(&b.n))
            .then(a.estimator.cmp(&b.estimator))
    });
}
