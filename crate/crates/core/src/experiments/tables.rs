use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sort_summaries, CellDiagnostics, Estimator, RunSummary, StudyResult};
use crate::error::{Error, Result};

/// Header of `bias.csv` and `variance.csv`.
pub const TABLE_HEADER: &str = "p_percent,n,estimator,value,replications,valid_count";

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    p_percent: f64,
    n: usize,
    estimator: Estimator,
    value: f64,
    replications: usize,
    valid_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    estimator: Estimator,
    n: usize,
    p_percent: f64,
    bias: f64,
    variance: f64,
    std_error: f64,
    valid_count: usize,
    mean_jackknife_bias: Option<f64>,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn table_rows(summaries: &[RunSummary], value: fn(&RunSummary) -> f64) -> impl Iterator<Item = TableRow> + '_ {
    summaries.iter().map(move |s| TableRow {
        p_percent: s.p_percent,
        n: s.n,
        estimator: s.estimator,
        value: value(s),
        replications: s.replications,
        valid_count: s.valid_count,
    })
}

/// Writes `bias.csv`, `variance.csv`, `curves.csv`, `cells.csv` and
/// `config.used.toml` into `dir`, creating it if needed. Contents depend
/// only on the result grid, never on timing.
pub fn emit_tables(result: &StudyResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut summaries = result.summaries.clone();
    sort_summaries(&mut summaries);
    write_rows(&dir.join("bias.csv"), table_rows(&summaries, |s| s.mean_bias))?;
    write_rows(&dir.join("variance.csv"), table_rows(&summaries, |s| s.variance))?;

    let mut curves = summaries.clone();
    curves.sort_by(|a, b| {
        a.estimator
            .cmp(&b.estimator)
            .then(a.n.cmp(&b.n))
            .then(a.p_percent.total_cmp(&b.p_percent))
    });
    write_rows(
        &dir.join("curves.csv"),
        curves.iter().map(|s| CurveRow {
            estimator: s.estimator,
            n: s.n,
            p_percent: s.p_percent,
            bias: s.mean_bias,
            variance: s.variance,
            std_error: s.std_error(),
            valid_count: s.valid_count,
            mean_jackknife_bias: s.mean_jackknife_bias,
        }),
    )?;
    write_rows(&dir.join("cells.csv"), result.cells.iter())?;
    fs::write(dir.join("config.used.toml"), result.config.to_toml()?)?;
    Ok(())
}

/// Rebuilds the summary grid from the files written by [`emit_tables`].
pub fn read_tables(dir: impl AsRef<Path>) -> Result<Vec<RunSummary>> {
    let dir = dir.as_ref();
    let bias: Vec<TableRow> = read_rows(&dir.join("bias.csv"))?;
    let variance: Vec<TableRow> = read_rows(&dir.join("variance.csv"))?;
    let curves: Vec<CurveRow> = read_rows(&dir.join("curves.csv"))?;
    if bias.len() != variance.len() || bias.len() != curves.len() {
        return Err(Error::Config("emitted tables have different row counts".into()));
    }
    let mut out = Vec::with_capacity(bias.len());
    for (b, v) in bias.iter().zip(&variance) {
        if (b.p_percent, b.n, b.estimator) != (v.p_percent, v.n, v.estimator) {
            return Err(Error::Config("bias.csv and variance.csv rows are not aligned".into()));
        }
        let jackknife = curves
            .iter()
            .find(|c| (c.p_percent, c.n, c.estimator) == (b.p_percent, b.n, b.estimator))
            .ok_or_else(|| Error::Config("curves.csv lacks a row of bias.csv".into()))?
            .mean_jackknife_bias;
        out.push(RunSummary {
            estimator: b.estimator,
            n: b.n,
            p_percent: b.p_percent,
            mean_bias: b.value,
            variance: v.value,
            replications: b.replications,
            valid_count: b.valid_count,
            mean_jackknife_bias: jackknife,
        });
    }
    Ok(out)
}

/// Reads `cells.csv`.
pub fn read_cells(dir: impl AsRef<Path>) -> Result<Vec<CellDiagnostics>> {
    read_rows(&dir.as_ref().join("cells.csv"))
}

#[cfg(test)]
mod tests {
    use super::super::{run_study, StudyConfig, StudyKind};
    use super::*;

    fn kg_result() -> StudyResult {
        let mut cfg = StudyConfig::new(StudyKind::Kg);
        cfg.replications = 30;
        run_study(&cfg).unwrap().remove(0)
    }

    #[test]
    fn full_kg_grid_has_144_rows() {
        let res = kg_result();
        let dir = tempfile::tempdir().unwrap();
        emit_tables(&res, dir.path()).unwrap();
        for file in ["bias.csv", "variance.csv", "curves.csv"] {
            let text = fs::read_to_string(dir.path().join(file)).unwrap();
            assert_eq!(text.lines().count(), 145, "{file}");
        }
        let bias = fs::read_to_string(dir.path().join("bias.csv")).unwrap();
        assert_eq!(bias.lines().next().unwrap(), TABLE_HEADER);
        let second = bias.lines().nth(1).unwrap();
        assert!(second.starts_with("10.0,30,S_hat,"), "{second}");
    }

    #[test]
    fn round_trip() {
        let res = kg_result();
        let dir = tempfile::tempdir().unwrap();
        emit_tables(&res, dir.path()).unwrap();
        assert_eq!(read_tables(dir.path()).unwrap(), res.summaries);
        assert_eq!(read_cells(dir.path()).unwrap(), res.cells);
        let cfg = StudyConfig::from_path(dir.path().join("config.used.toml")).unwrap();
        assert_eq!(cfg, res.config);
    }
}
