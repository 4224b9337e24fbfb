//! Datasets on disk: `time,status` or `x1,...,xp,time,status` CSV files.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::km::{order_sample_with_permutation, Observation, OrderedSample};

/// An ordered sample with optional covariate rows aligned to its ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sample: OrderedSample,
    pub covariates: Option<DMatrix<f64>>,
}

impl Dataset {
    /// Orders `raw` and permutes the covariate rows to match.
    pub fn from_rows(raw: &[Observation], covariates: Option<DMatrix<f64>>) -> Result<Self> {
        if let Some(x) = &covariates {
            if x.nrows() != raw.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} covariate rows for {} observations",
                    x.nrows(),
                    raw.len()
                )));
            }
        }
        let (sample, perm) = order_sample_with_permutation(raw)?;
        let covariates = covariates.map(|x| x.select_rows(perm.iter()));
        Ok(Self { sample, covariates })
    }

    pub fn covariate_count(&self) -> usize {
        self.covariates.as_ref().map_or(0, |x| x.ncols())
    }
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a dataset CSV. The header must end in `time,status`; any preceding
/// columns are covariates.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn parse_dataset(text: &str, origin: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(origin, 1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let k = cols.len();
    if k < 2 || cols[k - 2] != "time" || cols[k - 1] != "status" {
        return Err(parse_err(
            origin,
            1,
            format!("header must end with `time,status`, got `{}`", cols.join(",")),
        ));
    }
    let p = k - 2;

    let mut raw = Vec::new();
    let mut x_values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |pos| pos.line() as usize);
            parse_err(origin, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |pos| pos.line() as usize);
        let field = |j: usize| -> Result<f64> {
            record[j]
                .parse::<f64>()
                .map_err(|_| parse_err(origin, line, format!("`{}` is not a number in column `{}`", &record[j], cols[j])))
        };
        for j in 0..p {
            x_values.push(field(j)?);
        }
        let time = field(p)?;
        if !time.is_finite() || time < 0.0 {
            return Err(parse_err(origin, line, format!("time must be finite and nonnegative, got {time}")));
        }
        let event = match &record[p + 1] {
            "1" => true,
            "0" => false,
            other => {
                return Err(parse_err(origin, line, format!("status must be 0 or 1, got `{other}`")));
            }
        };
        raw.push(Observation { time, event });
    }
    if raw.len() < 2 {
        return Err(Error::TooFewObservations(raw.len()));
    }
    let covariates = (p > 0).then(|| DMatrix::from_row_slice(raw.len(), p, &x_values));
    Dataset::from_rows(&raw, covariates)
}

/// Writes a dataset in the same format [`read_dataset`] accepts.
pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let p = data.covariate_count();
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("time".into());
    header.push("status".into());
    w.write_record(&header)?;
    for (i, obs) in data.sample.observations().enumerate() {
        let mut row: Vec<String> = Vec::with_capacity(p + 2);
        if let Some(x) = &data.covariates {
            row.extend(x.row(i).iter().map(|v| v.to_string()));
        }
        row.push(obs.time.to_string());
        row.push(if obs.event { "1" } else { "0" }.into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
