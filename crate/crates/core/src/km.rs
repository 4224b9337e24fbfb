//! Ordered right-censored samples and the Kaplan-Meier product-limit machinery.
//!
//! Everything here works on an [`OrderedSample`]: observed times
//! `Y(1) <= ... <= Y(n)` with event indicators. At equal times events are
//! placed before censorings, so the estimator jumps at a tied event before
//! the censored mass leaves the risk set.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observed pair `(Y, delta)` with `Y = min(T, C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    /// `true` when the event was observed, `false` when censored.
    pub event: bool,
}

impl Observation {
    pub fn new(time: f64, event: bool) -> Self {
        Self { time, event }
    }

    pub fn event(time: f64) -> Self {
        Self::new(time, true)
    }

    pub fn censored(time: f64) -> Self {
        Self::new(time, false)
    }
}

/// Observations sorted by time, events before censorings at ties.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSample {
    times: Vec<f64>,
    events: Vec<bool>,
}

/// Kaplan-Meier jump weights `w_i` together with their total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub mass: f64,
}

fn validate(raw: &[Observation]) -> Result<()> {
    if raw.len() < 2 {
        return Err(Error::TooFewObservations(raw.len()));
    }
    for (index, obs) in raw.iter().enumerate() {
        if !obs.time.is_finite() || obs.time < 0.0 {
            return Err(Error::InvalidTime {
                index,
                value: obs.time,
            });
        }
    }
    Ok(())
}

fn observation_order(a: &Observation, b: &Observation) -> Ordering {
    a.time
        .total_cmp(&b.time)
        .then_with(|| b.event.cmp(&a.event))
}

/// Sorts raw observations into an [`OrderedSample`].
pub fn order_sample(raw: &[Observation]) -> Result<OrderedSample> {
    order_sample_with_permutation(raw).map(|(sample, _)| sample)
}

/// Like [`order_sample`], also returning `perm` with `sample[k] = raw[perm[k]]`
/// so that row-aligned data (covariates) can follow the ordering.
pub fn order_sample_with_permutation(raw: &[Observation]) -> Result<(OrderedSample, Vec<usize>)> {
    validate(raw)?;
    let mut perm: Vec<usize> = (0..raw.len()).collect();
    // sort_by is stable, so equal keys keep their input order.
    perm.sort_by(|&a, &b| observation_order(&raw[a], &raw[b]));
    let times = perm.iter().map(|&k| raw[k].time).collect();
    let events = perm.iter().map(|&k| raw[k].event).collect();
    Ok((OrderedSample { times, events }, perm))
}

impl OrderedSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Always false; an ordered sample holds at least two observations.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        self.times
            .iter()
            .zip(&self.events)
            .map(|(&time, &event)| Observation { time, event })
    }

    /// `Y(n)`
    pub fn largest(&self) -> f64 {
        self.times[self.len() - 1]
    }

    /// `(delta(n-1), delta(n))` as 0/1 values.
    pub fn tail_case(&self) -> TailCase {
        let n = self.len();
        TailCase {
            second_last: self.events[n - 2],
            last: self.events[n - 1],
        }
    }

    pub fn censored_count(&self) -> usize {
        self.events.iter().filter(|&&e| !e).count()
    }
}

/// Censoring indicators of the two largest observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TailCase {
    pub second_last: bool,
    pub last: bool,
}

impl std::fmt::Display for TailCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({}, {})",
            u8::from(self.second_last),
            u8::from(self.last)
        )
    }
}

/// Jump weights of the K-M distribution estimate, computed with a running
/// product in a single pass.
pub fn km_weights(s: &OrderedSample) -> WeightVector {
    let n = s.len();
    let mut weights = Vec::with_capacity(n);
    // survival just before the i-th order statistic
    let mut before = 1.0;
    for (i, &event) in s.events.iter().enumerate() {
        let at_risk = (n - i) as f64;
        if event {
            weights.push(before / at_risk);
            before *= (at_risk - 1.0) / at_risk;
        } else {
            weights.push(0.0);
        }
    }
    let mass = weights.iter().sum();
    WeightVector { weights, mass }
}

/// `1 - F_KM(t)`, right-continuous.
pub fn km_survival(s: &OrderedSample, t: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::NanArgument);
    }
    let n = s.len();
    let mut surv = 1.0;
    for (i, (&time, &event)) in s.times.iter().zip(&s.events).enumerate() {
        if time > t {
            break;
        }
        if event {
            let at_risk = (n - i) as f64;
            surv *= (at_risk - 1.0) / at_risk;
        }
    }
    Ok(surv)
}

/// K-M integral `sum_i w_i phi(Y(i))`.
///
/// `phi` is only evaluated at observations carrying positive weight.
pub fn km_integral<F>(s: &OrderedSample, phi: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let w = km_weights(s);
    weighted_sum(s.times(), &w.weights, &phi)
}

pub(crate) fn weighted_sum<F>(times: &[f64], weights: &[f64], phi: &F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut total = 0.0;
    for (index, (&time, &w)) in times.iter().zip(weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        let value = phi(time);
        if !value.is_finite() {
            return Err(Error::NonFiniteIntegrand { index, time });
        }
        total += w * value;
    }
    Ok(total)
}

/// K-M mean lifetime, the integral with the identity integrand.
pub fn km_mean(s: &OrderedSample) -> f64 {
    let w = km_weights(s);
    s.times.iter().zip(&w.weights).map(|(y, w)| y * w).sum()
}
