//! Parametric lifetime and censoring laws.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal, Normal, Uniform, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::imputation::normal::upper_tail;

/// A parametric distribution. Gamma uses shape/rate, Weibull shape/scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DistSpec {
    Exponential { rate: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
    Gamma { shape: f64, rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistSpec::Exponential { rate } => positive("rate", rate),
            DistSpec::LogNormal { meanlog, sdlog } => finite("meanlog", meanlog).and(positive("sdlog", sdlog)),
            DistSpec::Gamma { shape, rate } => positive("shape", shape).and(positive("rate", rate)),
            DistSpec::Weibull { shape, scale } => positive("shape", shape).and(positive("scale", scale)),
            DistSpec::Uniform { lo, hi } => {
                finite("lo", lo)?;
                finite("hi", hi)?;
                if lo < hi {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("uniform needs lo < hi, got [{lo}, {hi}]")))
                }
            }
            DistSpec::Normal { mean, sd } => finite("mean", mean).and(positive("sd", sd)),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistSpec::Exponential { rate } => 1.0 / rate,
            DistSpec::LogNormal { meanlog, sdlog } => (meanlog + 0.5 * sdlog * sdlog).exp(),
            DistSpec::Gamma { shape, rate } => shape / rate,
            DistSpec::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            DistSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistSpec::Normal { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistSpec::Exponential { rate } => 1.0 / (rate * rate),
            DistSpec::LogNormal { meanlog, sdlog } => {
                let s2 = sdlog * sdlog;
                s2.exp_m1() * (2.0 * meanlog + s2).exp()
            }
            DistSpec::Gamma { shape, rate } => shape / (rate * rate),
            DistSpec::Weibull { shape, scale } => {
                let g1 = gamma(1.0 + 1.0 / shape);
                scale * scale * (gamma(1.0 + 2.0 / shape) - g1 * g1)
            }
            DistSpec::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            DistSpec::Normal { sd, .. } => sd * sd,
        }
    }

    /// `P(X > t)`.
    pub fn survival(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return 0.0;
        }
        match *self {
            DistSpec::Exponential { rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-rate * t).exp()
                }
            }
            DistSpec::LogNormal { meanlog, sdlog } => {
                if t <= 0.0 {
                    1.0
                } else {
                    upper_tail((t.ln() - meanlog) / sdlog)
                }
            }
            DistSpec::Gamma { shape, rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    gamma_ur(shape, rate * t)
                }
            }
            DistSpec::Weibull { shape, scale } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-(t / scale).powf(shape)).exp()
                }
            }
            DistSpec::Uniform { lo, hi } => ((hi - t) / (hi - lo)).clamp(0.0, 1.0),
            DistSpec::Normal { mean, sd } => upper_tail((t - mean) / sd),
        }
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let bad = |e: &dyn std::fmt::Display| Error::InvalidParameter(e.to_string());
        Ok(match *self {
            DistSpec::Exponential { rate } => Sampler::Exponential(Exp::new(rate).map_err(|e| bad(&e))?),
            DistSpec::LogNormal { meanlog, sdlog } => Sampler::LogNormal(LogNormal::new(meanlog, sdlog).map_err(|e| bad(&e))?),
            DistSpec::Gamma { shape, rate } => Sampler::Gamma(Gamma::new(shape, 1.0 / rate).map_err(|e| bad(&e))?),
            DistSpec::Weibull { shape, scale } => Sampler::Weibull(Weibull::new(scale, shape).map_err(|e| bad(&e))?),
            DistSpec::Uniform { lo, hi } => Sampler::Uniform(Uniform::new(lo, hi).map_err(|e| bad(&e))?),
            DistSpec::Normal { mean, sd } => Sampler::Normal(Normal::new(mean, sd).map_err(|e| bad(&e))?),
        })
    }

    /// Parses `family:p1[,p2]`, e.g. `exp:0.2`, `lognormal:1.1,1`,
    /// `gamma:4,1`, `weibull:3,3.39`, `uniform:1,2`, `normal:0,1`.
    pub fn parse(text: &str) -> Result<Self> {
        let (family, params) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("distribution `{text}` must look like family:params")))?;
        let values = params
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Config(format!("bad parameters in `{text}`")))?;
        let want = |k: usize| -> Result<()> {
            if values.len() == k {
                Ok(())
            } else {
                Err(Error::Config(format!("`{family}` takes {k} parameter(s), got {}", values.len())))
            }
        };
        let spec = match family {
            "exp" | "exponential" => {
                want(1)?;
                DistSpec::Exponential { rate: values[0] }
            }
            "lognormal" | "ln" => {
                want(2)?;
                DistSpec::LogNormal { meanlog: values[0], sdlog: values[1] }
            }
            "gamma" => {
                want(2)?;
                DistSpec::Gamma { shape: values[0], rate: values[1] }
            }
            "weibull" => {
                want(2)?;
                DistSpec::Weibull { shape: values[0], scale: values[1] }
            }
            "uniform" => {
                want(2)?;
                DistSpec::Uniform { lo: values[0], hi: values[1] }
            }
            "normal" => {
                want(2)?;
                DistSpec::Normal { mean: values[0], sd: values[1] }
            }
            other => return Err(Error::Config(format!("unknown distribution family `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Ready-to-draw form of a [`DistSpec`].
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Exponential(Exp<f64>),
    LogNormal(LogNormal<f64>),
    Gamma(Gamma<f64>),
    Weibull(Weibull<f64>),
    Uniform(Uniform<f64>),
    Normal(Normal<f64>),
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exponential(d) => d.sample(rng),
            Sampler::LogNormal(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Weibull(d) => d.sample(rng),
            Sampler::Uniform(d) => d.sample(rng),
            Sampler::Normal(d) => d.sample(rng),
        }
    }
}
