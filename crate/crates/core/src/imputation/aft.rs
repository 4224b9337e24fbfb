//! Log-normal accelerated failure time fits weighted by K-M jumps, and the
//! truncated-normal imputation of a censored log-time they support.

use nalgebra::{DMatrix, DVector};

use super::normal::{inverse_mills, truncated_median};
use crate::error::{Error, Result};
use crate::km::{km_weights, OrderedSample};

/// Lower bound on the fitted scale.
pub const SCALE_FLOOR: f64 = 1e-8;

/// Relative pivot size below which the normal equations count as singular.
const RANK_TOLERANCE: f64 = 1e-12;

/// Fitted `log T = intercept + x' coefficients + scale * eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct AftFit {
    pub intercept: f64,
    pub coefficients: DVector<f64>,
    pub scale: f64,
}

/// Center of the truncated error law used for imputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Center {
    Mean,
    Median,
}

impl AftFit {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(self.coefficients.iter()).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Weighted least squares of `log Y(i)` on `[1, X(i)]` with K-M weights.
///
/// Rows of `x` must be aligned with the ordering of `s`.
pub fn fit_aft_stute(x: &DMatrix<f64>, s: &OrderedSample) -> Result<AftFit> {
    let n = s.len();
    if x.nrows() != n {
        return Err(Error::InvalidParameter(format!(
            "{} covariate rows for {n} observations",
            x.nrows()
        )));
    }
    if let Some(&t) = s.times().iter().find(|&&t| t <= 0.0) {
        return Err(Error::InvalidParameter(format!("log-time undefined for time {t}")));
    }
    let p = x.ncols();
    let dim = p + 1;
    let w = km_weights(s);

    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let mut row = vec![0.0; dim];
    for i in 0..n {
        let wi = w.weights[i];
        if wi == 0.0 {
            continue;
        }
        row[0] = 1.0;
        for j in 0..p {
            row[j + 1] = x[(i, j)];
        }
        let z = s.times()[i].ln();
        for a in 0..dim {
            rhs[a] += wi * row[a] * z;
            for b in 0..=a {
                gram[(a, b)] += wi * row[a] * row[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }

    let max_diag = (0..dim).map(|a| gram[(a, a)]).fold(0.0, f64::max);
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("normal equations are not positive definite".into()))?;
    let l = chol.l_dirty();
    let min_pivot = (0..dim).map(|a| l[(a, a)] * l[(a, a)]).fold(f64::INFINITY, f64::min);
    if min_pivot.is_nan() || min_pivot <= RANK_TOLERANCE * max_diag {
        return Err(Error::RankDeficient(format!(
            "pivot {min_pivot:e} relative to scale {max_diag:e}"
        )));
    }
    let theta = chol.solve(&rhs);

    let mut sse = 0.0;
    let mut mass = 0.0;
    for i in 0..n {
        let wi = w.weights[i];
        if !s.events()[i] || wi == 0.0 {
            continue;
        }
        let fitted = theta[0] + (0..p).map(|j| x[(i, j)] * theta[j + 1]).sum::<f64>();
        let r = s.times()[i].ln() - fitted;
        sse += wi * r * r;
        mass += wi;
    }
    let scale = if mass > 0.0 { (sse / mass).sqrt() } else { 0.0 };
    let coefficients = DVector::from_iterator(p, theta.iter().skip(1).copied());
    if !theta.iter().all(|v| v.is_finite()) {
        return Err(Error::RankDeficient("non-finite coefficients".into()));
    }
    Ok(AftFit {
        intercept: theta[0],
        coefficients,
        scale: scale.max(SCALE_FLOOR),
    })
}

/// Imputed time for a subject censored at `y_n` with covariates `x_n`:
/// the mean or median of the fitted log-normal law truncated below at
/// `log y_n`, mapped back to the time scale.
pub fn conditional_time(fit: &AftFit, x_n: &[f64], y_n: f64, center: Center) -> Result<f64> {
    if !(y_n > 0.0 && y_n.is_finite()) {
        return Err(Error::InvalidParameter(format!("censored time must be positive, got {y_n}")));
    }
    let mu = fit.linear_predictor(x_n);
    let a = (y_n.ln() - mu) / fit.scale;
    let offset = match center {
        Center::Mean => inverse_mills(a),
        Center::Median => truncated_median(a),
    };
    let imputed = (mu + fit.scale * offset).exp();
    if !imputed.is_finite() {
        return Err(Error::InvalidParameter(format!("imputed time overflows (log {})", mu + fit.scale * offset)));
    }
    Ok(imputed.max(y_n))
}

pub fn conditional_mean_time(fit: &AftFit, x_n: &[f64], y_n: f64) -> Result<f64> {
    conditional_time(fit, x_n, y_n, Center::Mean)
}

pub fn conditional_median_time(fit: &AftFit, x_n: &[f64], y_n: f64) -> Result<f64> {
    conditional_time(fit, x_n, y_n, Center::Median)
}
